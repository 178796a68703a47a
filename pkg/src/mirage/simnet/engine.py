"""Event loop, processor-sharing CPU, and the client compute model."""
from __future__ import annotations

import enum
import heapq
import itertools
import math
import random
from dataclasses import dataclass
from typing import Any, Callable, NamedTuple


class EventKind(enum.IntEnum):
    PACKET_ARRIVAL = 1
    PUZZLE_SOLVED = 2
    TIMER_FIRE = 3
    INTERVAL_ROLLOVER = 4
    PROBE_RESULT = 5


class SimEvent(NamedTuple):
    time: float
    seq: int
    kind: EventKind
    callback: Callable
    args: tuple


class Simulator:
    """Deterministic discrete-event loop.

    Events run in (time, seq) order; seq is a global insertion counter, so
    simultaneous events fire in the order they were scheduled.  All
    randomness must come from ``self.rng``.
    """

    def __init__(self, seed: int = 0, trace: bool = False):
        self.now = 0.0
        self.rng = random.Random(seed)
        self._heap: list[SimEvent] = []
        self._seq = itertools.count()
        self._cancelled: set[int] = set()
        self.trace: list | None = [] if trace else None
        self.processed = 0

    def at(self, time: float, kind: EventKind, callback: Callable, *args: Any) -> SimEvent:
        if time < self.now:
            raise ValueError(f"cannot schedule in the past ({time} < {self.now})")
        ev = SimEvent(time, next(self._seq), kind, callback, args)
        heapq.heappush(self._heap, ev)
        return ev

    def after(self, delay: float, kind: EventKind, callback: Callable, *args: Any) -> SimEvent:
        return self.at(self.now + delay, kind, callback, *args)

    def cancel(self, ev: SimEvent | None):
        if ev is not None:
            self._cancelled.add(ev.seq)

    def run(self, until: float):
        heap = self._heap
        cancelled = self._cancelled
        trace = self.trace
        while heap and heap[0].time <= until:
            ev = heapq.heappop(heap)
            if ev.seq in cancelled:
                cancelled.discard(ev.seq)
                continue
            self.now = ev.time
            if trace is not None:
                trace.append((ev.time, ev.seq, int(ev.kind)))
            self.processed += 1
            ev.callback(*ev.args)
        self.now = max(self.now, until)


class SharedCpu:
    """Egalitarian processor sharing: ``capacity`` cycles/s split over busy jobs.

    Tracked in virtual time: every busy job has received the same service
    ``V``, so a job submitted with ``w`` cycles finishes when V reaches
    V_submit + w.
    """

    def __init__(self, sim: Simulator, capacity: float):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.sim = sim
        self.capacity = capacity
        self._v = 0.0
        self._last = sim.now
        self._jobs: list = []
        self._seq = itertools.count()
        self._next: SimEvent | None = None
        self.busy_time = 0.0

    @property
    def active(self) -> int:
        return len(self._jobs)

    def _advance(self):
        now = self.sim.now
        if self._jobs and now > self._last:
            self._v += (now - self._last) * self.capacity / len(self._jobs)
            self.busy_time += now - self._last
        self._last = now

    def submit(self, work: float, callback: Callable, *args):
        self._advance()
        heapq.heappush(self._jobs, (self._v + max(work, 0.0), next(self._seq), callback, args))
        self._reschedule()

    def _reschedule(self):
        self.sim.cancel(self._next)
        self._next = None
        if self._jobs:
            finish_v = self._jobs[0][0]
            dt = max(0.0, (finish_v - self._v) * len(self._jobs) / self.capacity)
            self._next = self.sim.after(dt, EventKind.PUZZLE_SOLVED, self._complete)

    def _complete(self):
        self._next = None
        self._advance()
        done = []
        tol = 1e-9 * max(1.0, abs(self._v))
        while self._jobs and self._jobs[0][0] <= self._v + tol:
            done.append(heapq.heappop(self._jobs))
        self._reschedule()
        for _, _, cb, args in done:
            cb(*args)


@dataclass(frozen=True)
class ClientModel:
    """Cost model for obtaining one address: (B + N*E) / C seconds.

    B: cycles of client overhead per request; E: cycles per decryption
    attempt; C: CPU cycles/second; N: attempts, normally distributed around
    2**(d-1) and truncated to [1, 2**d].
    """
    B: float = 5e6
    E: float = 2e6
    C: float = 1e9
    processes: int = 1
    n_sd_factor: float = 1.0 / math.sqrt(3.0)

    def __post_init__(self):
        if self.B <= 0 or self.E < 0 or self.C <= 0:
            raise ValueError("B and C must be positive, E non-negative")
        if self.processes < 1:
            raise ValueError("processes must be >= 1")

    def sample_attempts(self, d: int, rng: random.Random) -> float:
        hi = float(1 << d)
        if d == 0:
            return 1.0
        mean = hi / 2.0
        sd = mean * self.n_sd_factor
        while True:
            n = rng.gauss(mean, sd)
            if 1.0 <= n <= hi:
                return n

    def work(self, d: int, rng: random.Random, mirage: bool = True, attempts=None) -> float:
        """Cycles needed for one address."""
        if not mirage:
            return self.B
        n = self.sample_attempts(d, rng) if attempts is None else attempts
        return self.B + n * self.E

    def solve_time(self, d: int, rng: random.Random, mirage: bool = True, attempts=None) -> float:
        return self.work(d, rng, mirage, attempts) / self.C


def solve_time(m: ClientModel, d: int, rng: random.Random | None = None, mirage: bool = True,
               attempts=None) -> float:
    if d < 0:
        raise ValueError("difficulty must be non-negative")
    return m.solve_time(d, rng or random.Random(0), mirage, attempts)
