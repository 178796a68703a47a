"""Health-probed DNS record that fails over to the puzzle server."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace


class DnsMode(enum.Enum):
    NORMAL = "Normal"
    UNDER_ATTACK = "UnderAttack"


@dataclass(frozen=True)
class DnsState:
    victim_address: str
    puzzle_address: str
    ttl_seconds: int = 5
    k: int = 3
    m: int = 5
    mode: DnsMode = DnsMode.NORMAL
    window: tuple = ()
    failures: int = 0
    successes: int = 0

    def __post_init__(self):
        if self.k < 1 or self.m < 1 or self.ttl_seconds < 0:
            raise ValueError("k and m must be >= 1, ttl non-negative")

    @property
    def record(self) -> str:
        return self.puzzle_address if self.mode is DnsMode.UNDER_ATTACK else self.victim_address


def dns_step(st: DnsState, probe_ok: bool) -> DnsState:
    """Fold one probe outcome into the state machine.

    k consecutive failures flip to UnderAttack; m consecutive successes
    while under attack flip back.
    """
    window = (st.window + (bool(probe_ok),))[-st.k:]
    if st.mode is DnsMode.NORMAL:
        failures = 0 if probe_ok else st.failures + 1
        if failures >= st.k:
            return replace(st, mode=DnsMode.UNDER_ATTACK, window=window, failures=failures, successes=0)
        return replace(st, window=window, failures=failures, successes=0)
    successes = st.successes + 1 if probe_ok else 0
    if successes >= st.m:
        return replace(st, mode=DnsMode.NORMAL, window=window, failures=0, successes=successes)
    return replace(st, window=window, failures=0 if probe_ok else st.failures + 1, successes=successes)


def resolve(st: DnsState) -> tuple[str, int]:
    return st.record, st.ttl_seconds


def handle_dns(st: DnsState, msg):
    from .wire import error_reply
    if msg.type != "Resolve":
        return error_reply(msg, "bad_request", f"DNS service does not handle {msg.type}")
    address, ttl = resolve(st)
    kind = "puzzle" if st.mode is DnsMode.UNDER_ATTACK else "victim"
    return msg.reply("ResolveReply", address=address, ttl=ttl, kind=kind)
