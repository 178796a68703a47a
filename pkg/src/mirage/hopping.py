"""Active address generation for a hopping end host.

Every interval the victim's reachable suffixes are regenerated from a
master key: suffix(i, T) = trunc(SHA-256(AES_key(i || T))).  Anyone who
holds the key (victim, trusted puzzle server) can enumerate the set; anyone
else can only guess uniformly in a 2**suffix_bits space.
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from functools import lru_cache

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .errors import DepthTooLarge

MAX_TREE_NODES = 1 << 20


@dataclass(frozen=True)
class HopConfig:
    master_key: bytes
    prefix: int = 0
    prefix_bits: int = 64
    interval_seconds: int = 300
    grace_seconds: int = 30
    set_size: int = 4096

    def __post_init__(self):
        if len(self.master_key) != 16:
            raise ValueError("master_key must be 16 bytes")
        if not 8 <= self.prefix_bits <= 120:
            raise ValueError("prefix_bits must lie in [8, 120]")
        if not 0 <= self.prefix < (1 << self.prefix_bits):
            raise ValueError("prefix does not fit in prefix_bits")
        if self.interval_seconds <= 0:
            raise ValueError("interval_seconds must be positive")
        if not 0 <= self.grace_seconds < self.interval_seconds:
            raise ValueError("grace_seconds must lie in [0, interval_seconds)")
        if self.set_size <= 0:
            raise ValueError("set_size must be positive")

    @property
    def suffix_bits(self) -> int:
        return 128 - self.prefix_bits

    def interval_at(self, now: float) -> int:
        return int(math.floor(now / self.interval_seconds))

    def address(self, suffix: int) -> int:
        """Full 128-bit address for a suffix under this host's prefix."""
        return (self.prefix << self.suffix_bits) | suffix


@dataclass(frozen=True)
class AddressSuffix:
    value: int
    index: int
    interval: int

    def hex(self, bits: int = 64) -> str:
        return format(self.value, f"0{(bits + 3) // 4}x")


def _truncate(digest: bytes, bits: int) -> int:
    return int.from_bytes(digest, "big") >> (256 - bits)


def _encrypt_blocks(key: bytes, plaintext: bytes) -> bytes:
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(plaintext) + enc.finalize()


def _hash_block(block: bytes, bits: int, salt: int = 0) -> int:
    data = block if salt == 0 else block + salt.to_bytes(8, "big")
    return _truncate(hashlib.sha256(data).digest(), bits)


def derive_suffix(cfg: HopConfig, i: int, T: int, salt: int = 0) -> AddressSuffix:
    if i < 0 or T < 0:
        raise ValueError("index and interval must be non-negative")
    block = _encrypt_blocks(cfg.master_key, struct.pack(">QQ", i, T))
    return AddressSuffix(_hash_block(block, cfg.suffix_bits, salt), i, T)


def _derive_distinct(cfg: HopConfig, indices, T: int) -> list[AddressSuffix]:
    # One ECB pass over all blocks; collisions are re-hashed with a salt.
    indices = list(indices)
    plain = b"".join(struct.pack(">QQ", i, T) for i in indices)
    ct = _encrypt_blocks(cfg.master_key, plain)
    seen: set[int] = set()
    out = []
    bits = cfg.suffix_bits
    for n, i in enumerate(indices):
        block = ct[16 * n:16 * n + 16]
        salt = 0
        value = _hash_block(block, bits)
        while value in seen:
            salt += 1
            value = _hash_block(block, bits, salt)
        seen.add(value)
        out.append(AddressSuffix(value, i, T))
    return out


@lru_cache(maxsize=64)
def _active_list(cfg: HopConfig, T: int) -> tuple[AddressSuffix, ...]:
    return tuple(_derive_distinct(cfg, range(cfg.set_size), T))


def active_list(cfg: HopConfig, T: int) -> tuple[AddressSuffix, ...]:
    """Active suffixes for interval T ordered by index."""
    return _active_list(cfg, T)


def active_set(cfg: HopConfig, T: int) -> frozenset[AddressSuffix]:
    return frozenset(_active_list(cfg, T))


@lru_cache(maxsize=64)
def active_values(cfg: HopConfig, T: int) -> frozenset[int]:
    return frozenset(s.value for s in _active_list(cfg, T))


def is_active(cfg: HopConfig, s, now: float) -> bool:
    """Whether suffix `s` (AddressSuffix or int) is accepted at time `now`.

    The previous interval's set stays valid for the first grace_seconds
    after each rollover.
    """
    value = s.value if isinstance(s, AddressSuffix) else int(s)
    T = cfg.interval_at(now)
    if value in active_values(cfg, T):
        return True
    in_grace = (now - T * cfg.interval_seconds) < cfg.grace_seconds
    return T > 0 and in_grace and value in active_values(cfg, T - 1)


def tree_index(level: int, k: int) -> int:
    return (1 << level) - 1 + k


@dataclass(frozen=True)
class AddressTree:
    depth: int
    levels: tuple[tuple[AddressSuffix, ...], ...]

    @staticmethod
    def weight(level: int) -> int:
        # A level-l address gets half the priority of a level-(l+1) one.
        return 1 << level

    def level_of(self, value: int) -> int:
        for level, nodes in enumerate(self.levels):
            if any(n.value == value for n in nodes):
                return level
        raise KeyError(value)

    def nodes(self):
        for level in self.levels:
            yield from level


def build_adaptive_tree(cfg: HopConfig, depth: int, T: int) -> AddressTree:
    if depth < 0:
        raise ValueError("depth must be non-negative")
    total = (1 << (depth + 1)) - 1
    if total > MAX_TREE_NODES:
        raise DepthTooLarge(f"depth {depth} needs {total} nodes (max {MAX_TREE_NODES})")
    flat = _derive_distinct(cfg, range(total), T)
    levels = tuple(
        tuple(flat[tree_index(level, 0):tree_index(level, 0) + (1 << level)])
        for level in range(depth + 1)
    )
    return AddressTree(depth, levels)
