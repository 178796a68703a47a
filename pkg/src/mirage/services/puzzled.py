"""Puzzle server state and its message handlers (no I/O here).

Two modes:

* self-service: the victim uploads a batch of puzzles per interval and the
  server hands them out in order.  The server never sees keys or
  suffixes, so a compromise leaks nothing beyond the puzzles themselves.
* auction: a trusted server that holds the hop key, makes puzzles at each
  requester's current difficulty, checks claims against its own oracle
  and runs the leaky-bucket allocator.
"""
from __future__ import annotations

import enum
import itertools
import random
from dataclasses import dataclass, field

from ..errors import BatchExhausted, MirageError
from ..hopping import HopConfig, active_list
from ..puzzle import AllocatorState, PendingSolution, Puzzle, allocator_step, make_puzzle_for
from .wire import WireMessage, error_reply


class ServerMode(enum.Enum):
    SELF_SERVICE = "self_service"
    AUCTION = "auction"


def make_batch(hop: HopConfig, T: int, d: int, count: int, seed) -> list:
    """Victim side: ``count`` puzzles for interval T as ``(puzzle, suffix)`` pairs."""
    if not 0 < count <= hop.set_size:
        raise ValueError(f"batch size must lie in [1, {hop.set_size}]")
    rng = random.Random(f"batch:{seed}:{T}")
    out = []
    for s in active_list(hop, T)[:count]:
        pz, _key, suffix = make_puzzle_for(hop, s, d, rng)
        out.append((pz, suffix))
    return out


@dataclass
class PuzzleServerState:
    mode: ServerMode
    interval_seconds: int
    batches: dict = field(default_factory=dict)  # T -> list[Puzzle]
    cursor: dict = field(default_factory=dict)   # T -> next unserved position
    # auction only
    hop: HopConfig | None = None
    base_difficulty: int = 10
    allocator: AllocatorState | None = None
    rng: random.Random = field(default_factory=lambda: random.Random(0))
    difficulty: dict = field(default_factory=dict)   # requester -> d
    oracle: dict = field(default_factory=dict)       # (T, i) -> (suffix value, d)
    next_index: dict = field(default_factory=dict)   # T -> next fresh index
    waiting: dict = field(default_factory=dict)      # ticket -> (conn, request, requester, T)
    new_pending: list = field(default_factory=list)
    _tickets: itertools.count = field(default_factory=itertools.count)
    served: int = 0

    @classmethod
    def self_service(cls, interval_seconds: int) -> "PuzzleServerState":
        return cls(ServerMode.SELF_SERVICE, interval_seconds)

    @classmethod
    def auction(cls, hop: HopConfig, base_difficulty: int = 10, bucket_capacity: int = 8,
                release_rate: float = 16.0, seed=0) -> "PuzzleServerState":
        return cls(ServerMode.AUCTION, hop.interval_seconds, hop=hop,
                   base_difficulty=base_difficulty,
                   allocator=AllocatorState(bucket_capacity, release_rate),
                   rng=random.Random(f"auction:{seed}"))

    def interval_at(self, now: float) -> int:
        return int(now // self.interval_seconds)

    def _purge(self, T: int):
        for old in [t for t in self.batches if t < T - 1]:
            del self.batches[old]
            self.cursor.pop(old, None)
        for key in [k for k in self.oracle if k[0] < T - 1]:
            del self.oracle[key]
        for old in [t for t in self.next_index if t < T - 1]:
            del self.next_index[old]


def upload_batch(st: PuzzleServerState, T: int, puzzles):
    """Install the victim's batch for interval T (replaces any earlier one)."""
    if st.mode is not ServerMode.SELF_SERVICE:
        raise MirageError("batches are only uploaded to a self-service server")
    puzzles = list(puzzles)
    if any(not isinstance(p, Puzzle) or p.interval != T for p in puzzles):
        raise ValueError(f"batch for interval {T} must contain only puzzles of that interval")
    st.batches[T] = puzzles
    st.cursor[T] = 0


def serve_puzzle(st: PuzzleServerState, now: float, requester: str = "", interval=None) -> Puzzle:
    T = st.interval_at(now)
    st._purge(T)
    want = T if interval is None else int(interval)
    if want not in (T, T - 1):
        raise MirageError(f"interval {want} is neither current ({T}) nor previous")
    if st.mode is ServerMode.SELF_SERVICE:
        batch = st.batches.get(want, ())
        pos = st.cursor.get(want, 0)
        if pos >= len(batch):
            raise BatchExhausted(f"no unserved puzzles left for interval {want}")
        st.cursor[want] = pos + 1
        st.served += 1
        return batch[pos]
    i = st.next_index.get(want, 0)
    if i >= st.hop.set_size:
        raise BatchExhausted(f"all {st.hop.set_size} suffixes of interval {want} handed out")
    st.next_index[want] = i + 1
    suffix = active_list(st.hop, want)[i]
    d = st.difficulty.get(requester, st.base_difficulty)
    pz, _key, _ = make_puzzle_for(st.hop, suffix, d, st.rng)
    st.oracle[(want, i)] = (suffix.value, d)
    st.served += 1
    return pz


def handle_puzzle(st: PuzzleServerState, msg: WireMessage, now: float, conn=None):
    """Answer one request.  Returns a reply, or None when it waits for the allocator."""
    try:
        if msg.type == "GetPuzzle":
            pz = serve_puzzle(st, now, str(msg.body.get("requester", "")), msg.body.get("interval"))
            return msg.reply("PuzzleMsg", puzzle=pz.to_json())
        if msg.type == "SubmitSolution":
            return _submit(st, msg, now, conn)
    except BatchExhausted as exc:
        return error_reply(msg, "batch_exhausted", str(exc))
    except (MirageError, ValueError, TypeError) as exc:
        return error_reply(msg, "bad_request", str(exc))
    return error_reply(msg, "bad_request", f"puzzle service does not handle {msg.type}")


def _submit(st, msg, now, conn):
    if st.mode is not ServerMode.AUCTION:
        return error_reply(msg, "unsupported", "self-service mode does not verify solutions")
    b = msg.body
    T, i, d = int(b["interval"]), int(b["index"]), int(b["d"])
    requester = str(b["requester"])
    st._purge(st.interval_at(now))
    entry = st.oracle.pop((T, i), None)
    if entry is None:
        return error_reply(msg, "invalid_solution", "unknown, expired or already used puzzle")
    value, issued_d = entry
    if int(str(b["suffix"]), 16) != value or d != issued_d:
        return error_reply(msg, "invalid_solution", "claimed suffix does not match")
    ticket = next(st._tickets)
    st.waiting[ticket] = (conn, msg, requester, T)
    st.new_pending.append(PendingSolution(ticket, d, now))
    return None


def tick(st: PuzzleServerState, now: float) -> list:
    """Run one allocator step.  Returns ``[(conn, reply), ...]`` for waiting submitters."""
    if st.mode is not ServerMode.AUCTION:
        return []
    grants, escalations = allocator_step(st.allocator, now, st.new_pending)
    st.new_pending = []
    out = []
    for ticket, slot in grants:
        conn, msg, requester, T = st.waiting.pop(ticket)
        st.difficulty[requester] = st.base_difficulty
        out.append((conn, msg.reply("Grant", suffix=msg.body["suffix"], interval=T, slot=slot)))
    for ticket, new_d in escalations:
        conn, msg, requester, _ = st.waiting.pop(ticket)
        st.difficulty[requester] = max(st.difficulty.get(requester, st.base_difficulty), new_d)
        out.append((conn, msg.reply("Escalate", d=st.difficulty[requester])))
    return out
