import random
import statistics

import pytest
from hypothesis import given, settings, strategies as st

from mirage.errors import DifficultyOutOfRange, Unsolvable
from mirage.hopping import HopConfig, derive_suffix
from mirage.puzzle import (AllocatorState, PendingSolution, Puzzle, allocator_step, make_puzzle,
                           make_puzzle_for, solve_puzzle, verify_claim)

ZERO = HopConfig(bytes(16))


def test_golden_puzzle():
    # key and R are the first draws of random.Random(42); cipher from the openssl CLI
    pz, key, suffix = make_puzzle(ZERO, 0, 0, 4, 42)
    assert key.hex() == "bdd640fb06671ad11c80317fa3b1799d"
    assert pz.R == 0x3EB13B9046685257
    assert pz.cipher.hex() == "1b38ccbb6484af745fde1b0b14e6c182"
    assert pz.partial_key.hex() == "bdd640fb06671ad11c80317fa3b17990"
    assert suffix.value == 0x558075540A46E624
    sol = solve_puzzle(pz)
    assert sol.suffix.value == suffix.value
    assert sol.attempts == 14  # low nibble 0xd found on the 14th try
    assert sol.solved_key == key
    assert pz.to_bytes().hex() == (
        "404004" "3eb13b9046685257" "1b38ccbb6484af745fde1b0b14e6c182"
        "bdd640fb06671ad11c80317fa3b17990" "0000000000000000" "0000000000000000")


def test_d_zero_one_attempt():
    pz, _, s = make_puzzle(ZERO, 3, 1, 0, 1)
    sol = solve_puzzle(pz)
    assert sol.attempts == 1 and sol.suffix.value == s.value


def test_difficulty_bounds():
    with pytest.raises(DifficultyOutOfRange):
        make_puzzle(ZERO, 0, 0, 31, 1)
    with pytest.raises(DifficultyOutOfRange):
        make_puzzle(ZERO, 0, 0, -1, 1)


def test_corrupted_puzzle_unsolvable():
    pz, _, _ = make_puzzle(ZERO, 0, 0, 3, 9)
    bad = Puzzle(pz.prefix, pz.prefix_bits, pz.r, pz.R ^ 1, pz.cipher, pz.partial_key, pz.d,
                 pz.index, pz.interval)
    with pytest.raises(Unsolvable):
        solve_puzzle(bad)


def test_puzzle_invariants():
    pz, _, _ = make_puzzle(ZERO, 0, 0, 3, 9)
    with pytest.raises(ValueError):
        Puzzle(pz.prefix, pz.prefix_bits, 32, pz.R, pz.cipher, pz.partial_key, pz.d, 0, 0)
    with pytest.raises(ValueError):
        Puzzle(pz.prefix, pz.prefix_bits, pz.r, pz.R, pz.cipher, b"\x01" * 16, pz.d, 0, 0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32), d=st.integers(0, 10), i=st.integers(0, 4095),
       T=st.integers(0, 2**32), P=st.sampled_from([64, 80, 96]))
def test_solve_recovers_suffix(seed, d, i, T, P):
    hop = HopConfig(b"p" * 16, prefix=0xAB, prefix_bits=P)
    pz, key, suffix = make_puzzle(hop, i, T, d, seed)
    sol = solve_puzzle(pz)
    assert sol.suffix.value == derive_suffix(hop, i, T).value == suffix.value
    assert 1 <= sol.attempts <= 1 << d
    assert sol.attempts == (int.from_bytes(key, "big") & ((1 << d) - 1)) + 1
    assert verify_claim(pz, sol.suffix, suffix)
    assert not verify_claim(pz, sol.suffix.value ^ 1, suffix)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32), d=st.integers(0, 30))
def test_serialization_round_trips(seed, d):
    pz, _, _ = make_puzzle_for(ZERO, derive_suffix(ZERO, 1, 2), d, random.Random(seed))
    assert Puzzle.from_bytes(pz.to_bytes(), prefix=pz.prefix) == pz
    assert Puzzle.from_json(pz.to_json()) == pz
    assert len(pz.to_bytes()) == 59


def test_from_bytes_length_check():
    with pytest.raises(ValueError):
        Puzzle.from_bytes(b"\x00" * 58)


def test_mean_attempts_near_half_space():
    rng = random.Random(3)
    d = 8
    attempts = [solve_puzzle(make_puzzle_for(ZERO, derive_suffix(ZERO, 0, 0), d, rng)[0]).attempts
                for _ in range(400)]
    assert 0.45 <= statistics.mean(attempts) / 2 ** d <= 0.55
    assert max(attempts) <= 2 ** d


# ------------------------------------------------------------ allocator


def sol(req, d, t=0.0, valid=True):
    return PendingSolution(req, d, t, valid)


def test_allocator_highest_difficulty_first():
    st_ = AllocatorState(bucket_capacity=2, release_rate=1.0, tokens=2.0, last_time=0.0)
    grants, esc = allocator_step(st_, 0.0, [sol("a", 3, 0.1), sol("b", 5, 0.2), sol("c", 5, 0.3)])
    assert [g[0] for g in grants] == ["b", "c"]
    assert esc == [("a", 4)]
    assert st_.pending == [] and st_.tokens == 0.0


def test_allocator_tie_breaks():
    st_ = AllocatorState(bucket_capacity=1, tokens=1.0, last_time=0.0)
    grants, esc = allocator_step(st_, 0.0, [sol("z", 2, 0.5), sol("y", 2, 0.5), sol("x", 2, 0.7)])
    assert grants == [("y", 0)]
    assert sorted(esc) == [("x", 3), ("z", 3)]


def test_allocator_refill_and_cap():
    st_ = AllocatorState(bucket_capacity=3, release_rate=2.0, tokens=0.0, last_time=0.0)
    allocator_step(st_, 10.0)
    assert st_.tokens == 3.0
    st_.tokens = 0.0
    allocator_step(st_, 10.25)
    assert st_.tokens == pytest.approx(0.5)


def test_allocator_discards_invalid_and_caps_d():
    st_ = AllocatorState(tokens=0.0, last_time=0.0)
    grants, esc = allocator_step(st_, 0.0, [sol("bad", 9, valid=False), sol("top", 30)])
    assert grants == [] and esc == [("top", 30)]


def test_allocator_state_validation():
    with pytest.raises(ValueError):
        AllocatorState(bucket_capacity=0)
    with pytest.raises(ValueError):
        AllocatorState(release_rate=0)
    with pytest.raises(ValueError):
        AllocatorState(bucket_capacity=2, tokens=3)


@settings(max_examples=60, deadline=None)
@given(steps=st.lists(st.tuples(st.floats(0, 5), st.lists(st.integers(0, 30), max_size=6)),
                      max_size=12),
       cap=st.integers(1, 8), rate=st.floats(0.1, 10))
def test_allocator_tokens_bounded_and_conserved(steps, cap, rate):
    st_ = AllocatorState(bucket_capacity=cap, release_rate=rate)
    now, req, granted, released = 0.0, 0, 0, 0.0
    for dt, ds in steps:
        before = st_.tokens
        prev = st_.last_time
        now += dt
        new = []
        for d in ds:
            new.append(sol(req, d, now))
            req += 1
        grants, esc = allocator_step(st_, now, new)
        assert 0.0 <= st_.tokens <= cap + 1e-9
        assert len(grants) + len(esc) == len(new)
        assert len(grants) <= int(min(cap, before + (rate * (now - prev) if prev is not None else 0)) + 1e-9)
        assert all(e[1] <= 30 for e in esc)
        granted += len(grants)
    assert st_.granted == granted
