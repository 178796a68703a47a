"""Packet-level pieces: bottleneck link, traffic meter, AIMD and CBR sources."""
from __future__ import annotations

from collections import defaultdict

from ..router import Decision, Packet, filter_packet
from .engine import EventKind, Simulator


class Meter:
    """Bytes delivered to the victim, per entity, in fixed-width time bins."""

    def __init__(self, bin_s: float = 1.0):
        self.bin_s = bin_s
        self.bins: dict = defaultdict(lambda: defaultdict(int))
        self.totals: dict = defaultdict(int)

    def add(self, now: float, entity: str, nbytes: int):
        self.bins[entity][int(now // self.bin_s)] += nbytes
        self.totals[entity] += nbytes

    def window(self, entity: str, start: float, end: float) -> int:
        lo, hi = int(start // self.bin_s), int(end // self.bin_s)
        return sum(v for b, v in self.bins.get(entity, {}).items() if lo <= b < hi)


class Bottleneck:
    """The victim's access link: optional ACL, a scheduler, serialization, propagation."""

    def __init__(self, sim: Simulator, capacity_bps: float, propagation_delay_s: float,
                 scheduler, acl=None, prefix: int = 0):
        if capacity_bps <= 0:
            raise ValueError("capacity_bps must be positive")
        self.sim = sim
        self.capacity_bps = capacity_bps
        self.propagation_delay_s = propagation_delay_s
        self.scheduler = scheduler
        self.acl = acl
        self.prefix = prefix
        self.busy = False
        self.sink = None
        self.on_drop = None
        self.on_alarm = None
        self.acl_drops = 0
        self.queue_drops = 0
        self.delivered_bytes = 0

    def receive(self, pkt: Packet, sender=None):
        if self.acl is not None:
            verdict = filter_packet(self.acl.table if hasattr(self.acl, "table") else self.acl, pkt)
            if verdict is Decision.DROP:
                self.acl_drops += 1
                self._dropped(pkt, sender)
                return
            if verdict is Decision.FORWARD_AND_ALARM and self.on_alarm is not None:
                self.on_alarm(pkt)
        if not self.scheduler.enqueue(pkt):
            self.queue_drops += 1
            self._dropped(pkt, sender)
            return
        if not self.busy:
            self._transmit()

    def _dropped(self, pkt, sender):
        if sender is not None:
            sender.on_drop(pkt)

    def _transmit(self):
        pkt = self.scheduler.dequeue()
        if pkt is None:
            self.busy = False
            return
        self.busy = True
        tx = pkt.size_bytes * 8.0 / self.capacity_bps
        self.sim.after(tx, EventKind.TIMER_FIRE, self._departed, pkt)

    def _departed(self, pkt):
        self.delivered_bytes += pkt.size_bytes
        self.sim.after(self.propagation_delay_s, EventKind.PACKET_ARRIVAL, self._arrive, pkt)
        self._transmit()

    def _arrive(self, pkt):
        if self.sink is not None:
            self.sink(pkt)


class TcpAimdFlow:
    """Window-based AIMD sender without slow start.

    cwnd grows by 1/cwnd per ACK and halves at most once per RTT on loss.
    A loss at cwnd == 1 is treated as a retransmission timeout with
    exponential backoff (1 s doubling, capped at 64 s).
    """

    RTO_MIN = 1.0
    RTO_MAX = 64.0

    def __init__(self, sim: Simulator, flow_id, entity: str, dst_suffix: int, rtt_s: float,
                 entry, prefix: int = 0, size_bytes: int = 1000, fwd_delay_s=None):
        self.sim = sim
        self.flow_id = flow_id
        self.entity = entity
        self.dst_suffix = dst_suffix
        self.prefix = prefix
        self.rtt_s = rtt_s
        self.fwd_delay_s = rtt_s / 4.0 if fwd_delay_s is None else fwd_delay_s
        self.entry = entry  # callable(pkt, flow) delivering into the network
        self.size_bytes = size_bytes
        self.cwnd = 1.0
        self.inflight = 0
        self.bytes_acked = 0
        self.last_halving = -1e9
        self.backoff = 0
        self.waiting_rto = False
        self.active = False

    @property
    def kind(self):
        return "TcpAimd"

    def start(self, at: float | None = None):
        self.active = True
        when = self.sim.now if at is None else at
        self.sim.at(when, EventKind.TIMER_FIRE, self._pump)

    def stop(self):
        self.active = False

    def _pump(self):
        self.waiting_rto = False
        while self.active and self.inflight < int(self.cwnd):
            self.inflight += 1
            pkt = Packet(self, self.prefix, self.dst_suffix, self.size_bytes, self.flow_id, self.sim.now)
            self.sim.after(self.fwd_delay_s, EventKind.PACKET_ARRIVAL, self.entry, pkt, self)

    def on_delivered(self, pkt, ack_delay: float):
        self.sim.after(ack_delay, EventKind.TIMER_FIRE, self._ack, pkt)

    def _ack(self, pkt):
        self.inflight -= 1
        self.bytes_acked += pkt.size_bytes
        self.cwnd += 1.0 / self.cwnd
        self.backoff = 0
        if not self.waiting_rto:
            self._pump()

    def on_drop(self, pkt):
        # the sender notices roughly one RTT after the drop
        self.sim.after(self.rtt_s - self.fwd_delay_s, EventKind.TIMER_FIRE, self._loss)

    def _loss(self):
        self.inflight -= 1
        now = self.sim.now
        if self.cwnd <= 1.0:
            if self.waiting_rto:
                return
            rto = min(self.RTO_MAX, self.RTO_MIN * (2 ** self.backoff))
            self.backoff += 1
            self.waiting_rto = True
            self.sim.after(rto, EventKind.TIMER_FIRE, self._pump)
            return
        if now - self.last_halving >= self.rtt_s:
            self.cwnd = max(1.0, self.cwnd / 2.0)
            self.last_halving = now
        if not self.waiting_rto:
            self._pump()


class UdpCbrFlow:
    """Constant-bit-rate sender spraying packets over a changing target list.

    `targets()` returns the suffixes to cycle through; with probability
    `spray_unauthorized` a packet instead goes to a uniformly random suffix.
    """

    def __init__(self, sim: Simulator, flow_id, entity: str, rate_bps: float, targets, entry,
                 prefix: int = 0, size_bytes: int = 1000, fwd_delay_s: float = 0.01,
                 spray_unauthorized: float = 0.0, suffix_bits: int = 64):
        if rate_bps < 0:
            raise ValueError("rate_bps must be non-negative")
        self.sim = sim
        self.flow_id = flow_id
        self.entity = entity
        self.rate_bps = rate_bps
        self.targets = targets
        self.entry = entry
        self.prefix = prefix
        self.size_bytes = size_bytes
        self.fwd_delay_s = fwd_delay_s
        self.spray_unauthorized = spray_unauthorized
        self.suffix_bits = suffix_bits
        self.sent = 0
        self._rr = 0
        self.active = False

    @property
    def kind(self):
        return "UdpCbr"

    def start(self, at: float | None = None):
        if self.rate_bps <= 0:
            return
        self.active = True
        self.sim.at(self.sim.now if at is None else at, EventKind.TIMER_FIRE, self._send)

    def stop(self):
        self.active = False

    def _send(self):
        if not self.active:
            return
        rng = self.sim.rng
        dst = None
        if self.spray_unauthorized and rng.random() < self.spray_unauthorized:
            dst = rng.getrandbits(self.suffix_bits)
        else:
            tg = self.targets()
            if tg:
                dst = tg[self._rr % len(tg)]
                self._rr += 1
        if dst is not None:
            pkt = Packet(self, self.prefix, dst, self.size_bytes, self.flow_id, self.sim.now)
            self.sent += 1
            self.sim.after(self.fwd_delay_s, EventKind.PACKET_ARRIVAL, self.entry, pkt, self)
        self.sim.after(self.size_bytes * 8.0 / self.rate_bps, EventKind.TIMER_FIRE, self._send)

    def on_drop(self, pkt):
        pass

    def on_delivered(self, pkt, ack_delay: float):
        pass
