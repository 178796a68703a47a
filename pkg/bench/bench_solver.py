"""Compare the compiled and pure-Python key-search backends.

    python3 bench/bench_solver.py [--difficulty 14] [--repeat 3]
"""
import argparse
import random
import time

from mirage import _kernels
from mirage.hopping import HopConfig, derive_suffix
from mirage.puzzle import make_puzzle_for, solve_puzzle


def bench_puzzle(d):
    hop = HopConfig(bytes(16))
    pz, _, _ = make_puzzle_for(hop, derive_suffix(hop, 0, 0), d, random.Random(7))
    return pz


def time_backend(backend, pz, repeat):
    sb = pz.suffix_bits
    want = (pz.R << sb).to_bytes(16, "big")
    mask = (((1 << pz.r) - 1) << sb).to_bytes(16, "big")
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        k = backend.search_key(pz.cipher, pz.partial_key, pz.d, want, mask)
        best = min(best, time.perf_counter() - t0)
    return k, best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--difficulty", type=int, default=14)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    pz = bench_puzzle(args.difficulty)
    print(f"difficulty {pz.d}, default backend: {_kernels.BACKEND}")
    results = {}
    try:
        from mirage._kernels import _csearch as compiled
    except ImportError:
        compiled = None
    for name, backend in (("compiled", compiled), ("python", _kernels.python_backend)):
        if backend is None:
            print(f"{name:9s} unavailable")
            continue
        k, secs = time_backend(backend, pz, args.repeat)
        results[name] = secs
        print(f"{name:9s} k={k} {secs:.4f} s  {secs / (k + 1) * 1e6:.2f} us/candidate")
    if len(results) == 2:
        print(f"speedup {results['python'] / results['compiled']:.1f}x")
    assert solve_puzzle(pz).suffix.value == derive_suffix(HopConfig(bytes(16)), 0, 0).value


if __name__ == "__main__":
    main()
