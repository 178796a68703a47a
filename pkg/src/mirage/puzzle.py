"""Trapdoor computational puzzles and the leaky-bucket difficulty auction.

A puzzle hides one active suffix inside a single AES block:

    CIPHER = AES_{KEY}(R || suffix)

The client receives R, CIPHER and KEY with its low ``d`` bits zeroed, and
must try every completion of the key until the decrypted block starts
with R.  The victim already knows the suffix, so checking a claim is an
equality test and needs no cryptography.
"""
from __future__ import annotations

import random
import struct
from dataclasses import dataclass, field

from . import _kernels
from .errors import DifficultyOutOfRange, Unsolvable
from .hopping import AddressSuffix, HopConfig, derive_suffix

MAX_DIFFICULTY = 30

_LAYOUT = struct.Struct(">BBB8s16s16sQQ")


@dataclass(frozen=True)
class Puzzle:
    prefix: int
    prefix_bits: int
    r: int
    R: int
    cipher: bytes
    partial_key: bytes
    d: int
    index: int
    interval: int

    def __post_init__(self):
        if self.r + self.suffix_bits != 128:
            raise ValueError("check value and suffix must fill one 128-bit block")
        if not 0 <= self.d <= MAX_DIFFICULTY:
            raise DifficultyOutOfRange(f"difficulty {self.d} outside [0, {MAX_DIFFICULTY}]")
        if len(self.cipher) != 16 or len(self.partial_key) != 16:
            raise ValueError("cipher and partial_key must be 16 bytes")
        if int.from_bytes(self.partial_key, "big") & ((1 << self.d) - 1):
            raise ValueError("low d bits of partial_key must be zero")

    @property
    def suffix_bits(self) -> int:
        return 128 - self.prefix_bits

    def to_bytes(self) -> bytes:
        """Canonical big-endian layout (59 bytes); the prefix value is not carried."""
        if self.r > 64:
            raise ValueError("binary layout holds at most a 64-bit check value")
        return _LAYOUT.pack(self.prefix_bits, self.r, self.d, self.R.to_bytes(8, "big"),
                            self.cipher, self.partial_key, self.index, self.interval)

    @classmethod
    def from_bytes(cls, data: bytes, prefix: int = 0) -> "Puzzle":
        if len(data) != _LAYOUT.size:
            raise ValueError(f"expected {_LAYOUT.size} bytes, got {len(data)}")
        P, r, d, R, cipher, partial, i, T = _LAYOUT.unpack(data)
        return cls(prefix, P, r, int.from_bytes(R, "big"), cipher, partial, d, i, T)

    def to_json(self) -> dict:
        return {
            "prefix": format(self.prefix, "x"),
            "prefix_bits": self.prefix_bits,
            "r": self.r,
            "R": format(self.R, "x"),
            "cipher": self.cipher.hex(),
            "partial_key": self.partial_key.hex(),
            "d": self.d,
            "index": self.index,
            "interval": self.interval,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Puzzle":
        return cls(
            prefix=int(obj["prefix"], 16),
            prefix_bits=int(obj["prefix_bits"]),
            r=int(obj["r"]),
            R=int(obj["R"], 16),
            cipher=bytes.fromhex(obj["cipher"]),
            partial_key=bytes.fromhex(obj["partial_key"]),
            d=int(obj["d"]),
            index=int(obj["index"]),
            interval=int(obj["interval"]),
        )


@dataclass(frozen=True)
class PuzzleSolution:
    suffix: AddressSuffix
    attempts: int
    solved_key: bytes


def make_puzzle(hop: HopConfig, i: int, T: int, d: int, rng_seed):
    """Build puzzle i of interval T.

    Returns ``(puzzle, key, suffix)``; the key and suffix are the trapdoor
    and never leave the victim side.
    """
    if not 0 <= d <= MAX_DIFFICULTY:
        raise DifficultyOutOfRange(f"difficulty {d} outside [0, {MAX_DIFFICULTY}]")
    rng = random.Random(rng_seed)
    key_int = rng.getrandbits(128)
    r = hop.prefix_bits
    R = rng.getrandbits(r)
    suffix = derive_suffix(hop, i, T)
    return _seal(hop, i, T, d, key_int, R, suffix)


def make_puzzle_for(hop: HopConfig, suffix: AddressSuffix, d: int, rng: random.Random):
    """Like make_puzzle but for an already derived suffix, drawing from `rng`."""
    if not 0 <= d <= MAX_DIFFICULTY:
        raise DifficultyOutOfRange(f"difficulty {d} outside [0, {MAX_DIFFICULTY}]")
    key_int = rng.getrandbits(128)
    R = rng.getrandbits(hop.prefix_bits)
    return _seal(hop, suffix.index, suffix.interval, d, key_int, R, suffix)


def _seal(hop, i, T, d, key_int, R, suffix):
    sb = hop.suffix_bits
    key = key_int.to_bytes(16, "big")
    plain = ((R << sb) | suffix.value).to_bytes(16, "big")
    cipher = _kernels.encrypt_block(key, plain)
    partial = (key_int & ~((1 << d) - 1)).to_bytes(16, "big")
    pz = Puzzle(hop.prefix, hop.prefix_bits, hop.prefix_bits, R, cipher, partial, d, i, T)
    return pz, key, suffix


def solve_puzzle(pz: Puzzle) -> PuzzleSolution:
    sb = pz.suffix_bits
    want = (pz.R << sb).to_bytes(16, "big")
    mask = (((1 << pz.r) - 1) << sb).to_bytes(16, "big")
    k = _kernels.search_key(pz.cipher, pz.partial_key, pz.d, want, mask)
    if k < 0:
        raise Unsolvable(f"no key in 2^{pz.d} candidates reproduces R")
    key = (int.from_bytes(pz.partial_key, "big") | k).to_bytes(16, "big")
    plain = int.from_bytes(_kernels.decrypt_block(key, pz.cipher), "big")
    suffix = AddressSuffix(plain & ((1 << sb) - 1), pz.index, pz.interval)
    return PuzzleSolution(suffix, k + 1, key)


def verify_claim(pz: Puzzle, claimed_suffix, oracle_suffix) -> bool:
    def value(s):
        return s.value if isinstance(s, AddressSuffix) else int(s)
    return value(claimed_suffix) == value(oracle_suffix)


# ---------------------------------------------------------------- auction


@dataclass
class PendingSolution:
    requester: object
    d: int
    arrival: float
    valid: bool = True


@dataclass
class AllocatorState:
    bucket_capacity: int = 8
    release_rate: float = 1.0
    tokens: float = 0.0
    last_time: float | None = None
    pending: list = field(default_factory=list)
    granted: int = 0

    def __post_init__(self):
        if self.bucket_capacity < 1:
            raise ValueError("bucket_capacity must be >= 1")
        if self.release_rate <= 0:
            raise ValueError("release_rate must be positive")
        if not 0 <= self.tokens <= self.bucket_capacity:
            raise ValueError("tokens must lie in [0, bucket_capacity]")


def allocator_step(st: AllocatorState, now: float, new_solutions=()):
    """Release tokens, grant the highest-difficulty solutions, escalate the rest.

    Returns ``(grants, escalations)`` where grants are ``(requester, slot)``
    and escalations ``(requester, new_d)``.  Mutates `st`; callers serialize.
    """
    if st.last_time is not None and now > st.last_time:
        st.tokens = min(float(st.bucket_capacity),
                        st.tokens + st.release_rate * (now - st.last_time))
    if st.last_time is None or now > st.last_time:
        st.last_time = now
    st.pending.extend(s for s in new_solutions if s.valid)
    order = sorted(st.pending, key=lambda s: (-s.d, s.arrival, s.requester))
    grants, escalations = [], []
    for sol in order:
        if st.tokens >= 1.0:
            st.tokens -= 1.0
            grants.append((sol.requester, st.granted))
            st.granted += 1
        else:
            escalations.append((sol.requester, min(sol.d + 1, MAX_DIFFICULTY)))
    st.pending = []
    return grants, escalations
