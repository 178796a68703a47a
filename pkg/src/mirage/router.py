"""Victim-upstream dataplane: suffix ACL with decoys, and per-destination DRR."""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

from .errors import AclOverflow, ParseError


class Decision(enum.Enum):
    FORWARD = "forward"
    DROP = "drop"
    FORWARD_AND_ALARM = "forward_and_alarm"


@dataclass(slots=True)
class Packet:
    src: object
    dst_prefix: int
    dst_suffix: int
    size_bytes: int
    flow_id: object = None
    timestamp: float = 0.0

    def __post_init__(self):
        if not 40 <= self.size_bytes <= 9000:
            raise ValueError(f"packet size {self.size_bytes} outside [40, 9000]")


@dataclass(frozen=True)
class AclTable:
    """One immutable snapshot of the victim ACL.

    Decoy hit counters are the only mutable part; they live in a dict so
    that a snapshot can be shared by concurrent readers.
    """
    prefix: int
    allowed: frozenset = frozenset()
    decoys: frozenset = frozenset()
    max_entries: int = 65536
    decoy_hits: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "allowed", frozenset(self.allowed))
        object.__setattr__(self, "decoys", frozenset(self.decoys))
        if self.allowed & self.decoys:
            raise ValueError("allowed and decoy suffixes must be disjoint")
        if len(self.allowed) + len(self.decoys) > self.max_entries:
            raise AclOverflow(
                f"{len(self.allowed) + len(self.decoys)} entries exceed bound {self.max_entries}")
        for s in self.decoys:
            self.decoy_hits.setdefault(s, 0)

    def __len__(self):
        return len(self.allowed) + len(self.decoys)


def filter_packet(acl: AclTable, pkt: Packet) -> Decision:
    if pkt.dst_prefix != acl.prefix:
        return Decision.FORWARD
    s = pkt.dst_suffix
    if s in acl.allowed:
        return Decision.FORWARD
    if s in acl.decoys:
        acl.decoy_hits[s] += 1
        return Decision.FORWARD_AND_ALARM
    return Decision.DROP


def acl_update(acl: AclTable, new_allowed, new_decoys) -> AclTable:
    new_allowed = frozenset(new_allowed)
    new_decoys = frozenset(new_decoys)
    if len(new_allowed) + len(new_decoys) > acl.max_entries:
        raise AclOverflow(
            f"{len(new_allowed) + len(new_decoys)} entries exceed bound {acl.max_entries}")
    hits = {s: acl.decoy_hits.get(s, 0) for s in new_decoys}
    return AclTable(acl.prefix, new_allowed, new_decoys, acl.max_entries, hits)


def detect_leak(acl: AclTable) -> list:
    return sorted(s for s, n in acl.decoy_hits.items() if n > 0)


class AclHolder:
    """Reference to the current snapshot; swapping is a single assignment."""

    def __init__(self, table: AclTable):
        self._table = table

    @property
    def table(self) -> AclTable:
        return self._table

    def push(self, new_allowed, new_decoys) -> AclTable:
        self._table = acl_update(self._table, new_allowed, new_decoys)
        return self._table

    def filter(self, pkt: Packet) -> Decision:
        return filter_packet(self._table, pkt)


def write_acl_file(path, acl: AclTable, suffix_bits: int = 64):
    width = (suffix_bits + 3) // 4
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# prefix {acl.prefix:x}\n")
        for s in sorted(acl.allowed):
            fh.write(f"{s:0{width}x}\n")
        for s in sorted(acl.decoys):
            fh.write(f"#decoy {s:0{width}x}\n")


def read_acl_file(path, prefix: int, max_entries: int = 65536) -> AclTable:
    allowed, decoys = set(), set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                if line.startswith("#decoy "):
                    decoys.add(int(line[len("#decoy "):].strip(), 16))
                elif line.startswith("#"):
                    continue
                else:
                    allowed.add(int(line, 16))
            except ValueError:
                raise ParseError(f"bad suffix {line!r}", lineno) from None
    return AclTable(prefix, allowed, decoys, max_entries)


# ------------------------------------------------------------------ queues


class DrrScheduler:
    """Deficit round robin over destination suffixes.

    Each visit credits ``weight * quantum`` bytes; packets leave while the
    head fits in the deficit.  A queue that drains forfeits its deficit.
    """

    def __init__(self, quantum=1500, buffer_packets=64, weights=None):
        if quantum <= 0 or buffer_packets <= 0:
            raise ValueError("quantum and buffer_packets must be positive")
        self.quantum = quantum
        self.buffer_packets = buffer_packets
        self.weights = dict(weights or {})
        self.queues: dict = {}
        self.deficit: dict = {}
        self.active: deque = deque()
        self._credited = False
        self.buffered_bytes = 0
        self.buffered_packets = 0
        self.dropped = 0

    def weight(self, q) -> int:
        return self.weights.get(q, 1)

    def set_tree_weights(self, tree):
        """Weight each tree node 2**level (deeper levels get more service)."""
        for level, nodes in enumerate(tree.levels):
            for node in nodes:
                self.weights[node.value] = tree.weight(level)

    def enqueue(self, pkt: Packet) -> bool:
        q = pkt.dst_suffix
        fifo = self.queues.get(q)
        if fifo is None:
            fifo = self.queues[q] = deque()
            self.deficit[q] = 0
        if len(fifo) >= self.buffer_packets:
            self.dropped += 1
            return False
        if not fifo:
            self.active.append(q)
        fifo.append(pkt)
        self.buffered_bytes += pkt.size_bytes
        self.buffered_packets += 1
        return True

    def dequeue(self):
        active = self.active
        while active:
            q = active[0]
            fifo = self.queues[q]
            if not self._credited:
                self.deficit[q] += self.weight(q) * self.quantum
                self._credited = True
            head = fifo[0]
            if head.size_bytes <= self.deficit[q]:
                fifo.popleft()
                self.deficit[q] -= head.size_bytes
                self.buffered_bytes -= head.size_bytes
                self.buffered_packets -= 1
                if not fifo:
                    self.deficit[q] = 0
                    active.popleft()
                    self._credited = False
                return head
            active.rotate(-1)
            self._credited = False
        return None

    def __len__(self):
        return self.buffered_packets


class FifoScheduler:
    """Single drop-tail FIFO: the no-defense baseline."""

    def __init__(self, buffer_packets=64):
        self.buffer_packets = buffer_packets
        self.fifo: deque = deque()
        self.buffered_bytes = 0
        self.dropped = 0

    def enqueue(self, pkt: Packet) -> bool:
        if len(self.fifo) >= self.buffer_packets:
            self.dropped += 1
            return False
        self.fifo.append(pkt)
        self.buffered_bytes += pkt.size_bytes
        return True

    def dequeue(self):
        if not self.fifo:
            return None
        pkt = self.fifo.popleft()
        self.buffered_bytes -= pkt.size_bytes
        return pkt

    def __len__(self):
        return len(self.fifo)


def drr_enqueue(s: DrrScheduler, pkt: Packet) -> bool:
    return s.enqueue(pkt)


def drr_dequeue(s: DrrScheduler):
    return s.dequeue()
