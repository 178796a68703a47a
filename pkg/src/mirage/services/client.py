"""Client driver as a sans-IO generator.

The driver yields effects and a runner performs them:

* ``Request(address, msg)``: send a message; the runner sends back the
  reply or throws ``ConnectionError`` into the generator.  ``address``
  None means the DNS server.
* ``Solve(puzzle)``: the runner sends back a ``PuzzleSolution``.
* ``Sleep(seconds)``: the runner resumes the generator later.

The same driver runs over asyncio sockets and inside the simulator.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..errors import MirageError, ServiceError, WireError
from ..puzzle import Puzzle
from .wire import WireMessage


@dataclass(frozen=True)
class Request:
    address: str | None
    msg: WireMessage


@dataclass(frozen=True)
class Solve:
    puzzle: Puzzle


@dataclass(frozen=True)
class Sleep:
    seconds: float


@dataclass(frozen=True)
class HeldSuffix:
    prefix: int
    suffix_bits: int
    value: int
    interval: int
    acquired_at: float
    expires_at: float

    @property
    def address(self) -> int:
        return (self.prefix << self.suffix_bits) | self.value


class ClientDriver:
    def __init__(self, name: str, clock, interval_seconds: int = 300, grace_seconds: int = 30,
                 mode: str = "self_service", presolve_lead_s: float = 5.0,
                 backoff_base_s: float = 1.0, backoff_cap_s: float = 30.0,
                 target_held=None, until=None):
        if backoff_base_s <= 0 or backoff_cap_s < backoff_base_s:
            raise ValueError("need 0 < backoff_base_s <= backoff_cap_s")
        self.name = name
        self.clock = clock
        self.interval_seconds = interval_seconds
        self.grace_seconds = grace_seconds
        self.mode = mode
        self.presolve_lead_s = presolve_lead_s
        self.backoff_base_s = backoff_base_s
        self.backoff_cap_s = backoff_cap_s
        self.target_held = target_held
        self.until = until
        self.held: list[HeldSuffix] = []
        self.history: list[HeldSuffix] = []
        self.log: list = []  # (time, event, detail)
        self.solves = 0
        self.escalations = 0
        self._rr = 0
        self._ids = itertools.count(1)
        self._dns = None  # (address, kind, expires_at)

    # ------------------------------------------------------------ queries

    def valid(self, now: float | None = None) -> list[HeldSuffix]:
        now = self.clock() if now is None else now
        return [h for h in self.held if h.acquired_at <= now < h.expires_at]

    def held_for(self, T: int) -> int:
        return sum(1 for h in self.held if h.interval == T)

    def next_destination(self, now: float | None = None):
        """Round-robin over currently valid suffixes; None when none are held."""
        live = self.valid(now)
        if not live:
            return None
        h = live[self._rr % len(live)]
        self._rr += 1
        return h.address

    def coverage_gaps(self, start: float, end: float) -> list:
        """Uncovered stretches of [start, end) as ``(from, to)`` pairs."""
        spans = sorted((max(start, h.acquired_at), min(end, h.expires_at)) for h in self.history)
        gaps, cursor = [], start
        for lo, hi in spans:
            if lo > cursor:
                gaps.append((cursor, lo))
            cursor = max(cursor, hi)
        if cursor < end:
            gaps.append((cursor, end))
        return gaps

    # ------------------------------------------------------------ the loop

    def _msg(self, type_, **body):
        return WireMessage(type_, next(self._ids), body)

    def _note(self, event, detail=""):
        self.log.append((self.clock(), event, detail))

    def run(self):
        backoff = self.backoff_base_s
        I = self.interval_seconds
        while self.until is None or self.clock() < self.until:
            now = self.clock()
            try:
                if self._dns is None or now >= self._dns[2]:
                    reply = yield Request(None, self._msg("Resolve", name=self.name))
                    _raise_if_error(reply)
                    b = reply.body
                    self._dns = (b["address"], b["kind"], now + max(float(b["ttl"]), 0.5))
                address, kind, dns_expires = self._dns
                if kind != "puzzle":
                    self._note("direct", address)
                    yield self._nap(max(dns_expires - now, 0.5))
                    continue
                T = int(now // I)
                to_roll = (T + 1) * I - now
                enough = self.target_held is not None and self.held_for(T) >= self.target_held
                if self.held_for(T) and (enough or to_roll <= self.presolve_lead_s):
                    # a puzzle fetched now would expire at the rollover; the
                    # suffixes held stay valid through the grace window
                    wait = to_roll if to_roll <= self.presolve_lead_s else to_roll - self.presolve_lead_s
                    yield self._nap(max(wait, 1e-3))
                    continue
                reply = yield Request(address, self._msg("GetPuzzle", requester=self.name))
                _raise_if_error(reply)
                pz = Puzzle.from_json(reply.body["puzzle"])
                sol = yield Solve(pz)
                self.solves += 1
                if self.mode == "auction":
                    reply = yield Request(address, self._msg(
                        "SubmitSolution", requester=self.name, interval=pz.interval,
                        index=pz.index, suffix=format(sol.suffix.value, "x"), d=pz.d))
                    if reply.type == "Escalate":
                        self.escalations += 1
                        self._note("escalate", reply.body["d"])
                        continue
                    _raise_if_error(reply)
                self._hold(pz, sol.suffix.value)
                backoff = self.backoff_base_s
            except (ConnectionError, OSError, ServiceError, WireError, MirageError, KeyError,
                    ValueError) as exc:
                self._note("error", f"{type(exc).__name__}: {exc}")
                self._dns = None
                yield self._nap(backoff)
                backoff = min(self.backoff_cap_s, backoff * 2)

    def _nap(self, seconds: float) -> Sleep:
        # never sleep past the end of the session
        if self.until is not None:
            seconds = min(seconds, max(self.until - self.clock(), 0.0))
        return Sleep(seconds)

    def _hold(self, pz: Puzzle, value: int):
        now = self.clock()
        expires = (pz.interval + 1) * self.interval_seconds + self.grace_seconds
        h = HeldSuffix(pz.prefix, pz.suffix_bits, value, pz.interval, now, expires)
        self.held.append(h)
        self.history.append(h)
        self._note("acquired", f"{pz.interval}:{value:x}")
        # drop what has expired for good
        self.held = [h for h in self.held if h.expires_at > now]


def _raise_if_error(reply: WireMessage):
    if reply.type == "Error":
        raise ServiceError(reply.body.get("code", "error"), reply.body.get("message", ""))


def backoff_schedule(base: float, cap: float, n: int) -> list:
    return [min(cap, base * 2 ** k) for k in range(n)]

