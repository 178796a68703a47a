"""The attack experiments, each a deterministic function of (config, seed)."""
from __future__ import annotations

import math

from ..analysis.security import fair_share
from ..config import ScenarioConfig
from ..hopping import active_list, active_values, derive_suffix
from ..puzzle import AllocatorState, PendingSolution, allocator_step
from ..router import AclHolder, AclTable, DrrScheduler, FifoScheduler
from .engine import ClientModel, EventKind, SharedCpu, Simulator
from .net import Bottleneck, Meter, TcpAimdFlow, UdpCbrFlow
from .report import RunReport


def decoy_values(hop, T, count):
    """Suffixes from indices past the issued range: valid-looking, never handed out."""
    live = active_values(hop, T)
    out = []
    j = 0
    while len(out) < count:
        v = derive_suffix(hop, hop.set_size + j, T).value
        if v not in live:
            out.append(v)
        j += 1
    return out


class _Victim:
    """Bottleneck + meter + (optionally) ACL kept in step with interval rollovers."""

    def __init__(self, sim, cfg: ScenarioConfig, mirage_on: bool):
        self.sim = sim
        self.cfg = cfg
        self.hop = cfg.hop.hop_config()
        self.meter = Meter(cfg.simnet.bin_s)
        self.mirage_on = mirage_on
        s, r = cfg.simnet, cfg.router
        self.T = self.hop.interval_at(0.0)
        self.acl = None
        self.alarms = 0
        if mirage_on:
            sched = DrrScheduler(r.quantum, r.buffer_packets)
            table = AclTable(self.hop.prefix, active_values(self.hop, self.T),
                             decoy_values(self.hop, self.T, r.decoys), r.max_entries)
            self.acl = AclHolder(table)
        else:
            sched = FifoScheduler(r.fifo_buffer_packets)
        self.link = Bottleneck(sim, s.capacity_bps, s.propagation_delay_s, sched, self.acl, self.hop.prefix)
        self.link.sink = self._sink
        self.link.on_alarm = self._alarm
        self.rollover_hooks = []
        if cfg.duration_s > 0:
            first = (self.T + 1) * self.hop.interval_seconds
            sim.at(first, EventKind.INTERVAL_ROLLOVER, self._rollover)

    def suffix(self, i: int) -> int:
        lst = active_list(self.hop, self.T)
        return lst[i % len(lst)].value

    def entry(self, pkt, flow):
        self.link.receive(pkt, flow)

    def _sink(self, pkt):
        flow = pkt.src
        self.meter.add(self.sim.now, flow.entity, pkt.size_bytes)
        if isinstance(flow, TcpAimdFlow):
            ack = max(0.0, flow.rtt_s - flow.fwd_delay_s - self.link.propagation_delay_s)
            flow.on_delivered(pkt, ack)

    def _alarm(self, pkt):
        self.alarms += 1

    def _rollover(self):
        prev = self.T
        self.T += 1
        if self.acl is not None:
            both = active_values(self.hop, self.T) | active_values(self.hop, prev)
            decoys = set(decoy_values(self.hop, self.T, self.cfg.router.decoys)) - both
            self.acl.push(both, decoys)
            self.sim.after(self.hop.grace_seconds, EventKind.TIMER_FIRE, self._end_grace, self.T)
        for hook in self.rollover_hooks:
            hook(self.T)
        self.sim.after(self.hop.interval_seconds, EventKind.INTERVAL_ROLLOVER, self._rollover)

    def _end_grace(self, T):
        if T != self.T:
            return
        self.acl.push(active_values(self.hop, T), decoy_values(self.hop, T, self.cfg.router.decoys))


def _delivery_records(report, meter, entities, horizon, bin_s):
    nbins = int(math.ceil(horizon / bin_s))
    for b in range(nbins):
        for ent in entities:
            report.add(round(b * bin_s, 9), ent, "delivered_bytes", meter.bins.get(ent, {}).get(b, 0))


def _window_bps(meter, entities, start, end):
    if end <= start:
        return 0.0
    return sum(meter.window(e, start, end) for e in entities) * 8.0 / (end - start)


def scenario_bandwidth_exhaustion(attack_multiplier=None, mirage_on=None, seed=None,
                                  cfg: ScenarioConfig | None = None) -> RunReport:
    """Ten AIMD flows and one UDP flood share the victim's bottleneck."""
    cfg = cfg or ScenarioConfig(scenario="bandwidth_exhaustion")
    over = {}
    if attack_multiplier is not None:
        over["attack_multiplier"] = float(attack_multiplier)
    if mirage_on is not None:
        over["mirage_on"] = bool(mirage_on)
    cfg = cfg.replace(scenario="bandwidth_exhaustion", simnet=over,
                      **({"seed": seed} if seed is not None else {}))
    s = cfg.simnet
    sim = Simulator(cfg.seed)
    victim = _Victim(sim, cfg, s.mirage_on)
    horizon = cfg.duration_s
    size = s.packet_bytes

    flows = []
    for k in range(s.n_benign):
        rtt = sim.rng.uniform(s.rtt_min_s, s.rtt_max_s)
        f = TcpAimdFlow(sim, f"tcp{k}", f"tcp{k}", victim.suffix(k), rtt, victim.entry,
                        victim.hop.prefix, size)
        f.index = k
        flows.append(f)
    attack_idx = [s.n_benign + j for j in range(max(1, s.attack_suffixes))]
    attack_targets = [victim.suffix(i) for i in attack_idx]

    def retarget(T):
        for f in flows:
            f.dst_suffix = victim.suffix(f.index)
        attack_targets[:] = [victim.suffix(i) for i in attack_idx]

    victim.rollover_hooks.append(retarget)
    entities = [f.entity for f in flows]
    if horizon > 0:
        for f in flows:
            f.start(sim.rng.uniform(0.0, 1.0))
    udp = None
    if s.attack_multiplier > 0 and horizon > 0:
        udp = UdpCbrFlow(sim, "udp0", "udp0", s.attack_multiplier * s.capacity_bps,
                         lambda: attack_targets, victim.entry, victim.hop.prefix, size,
                         fwd_delay_s=s.rtt_min_s / 4.0, spray_unauthorized=s.spray_unauthorized,
                         suffix_bits=victim.hop.suffix_bits)
        udp.start(sim.rng.uniform(0.0, 0.01))
    sim.run(horizon)

    report = RunReport(cfg.effective(), cfg.seed)
    all_entities = entities + ["udp0"]
    _delivery_records(report, victim.meter, all_entities, horizon, s.bin_s)
    start = min(s.warmup_s, horizon)
    benign = _window_bps(victim.meter, entities, start, horizon)
    attack = _window_bps(victim.meter, ["udp0"], start, horizon)
    report.summary = {
        "benign_bps": benign,
        "attack_bps": attack,
        "benign_fraction_of_capacity": benign / s.capacity_bps,
        "benign_share": benign / (benign + attack) if benign + attack else 0.0,
        "acl_drops": victim.link.acl_drops,
        "queue_drops": victim.link.queue_drops,
        "decoy_alarms": victim.alarms,
        "events": sim.processed,
    }
    return report


def scenario_address_exhaustion(attacker_machines=None, attacker_processes=None, mirage_on=None,
                                seed=None, cfg: ScenarioConfig | None = None) -> RunReport:
    """Machines race for addresses; attacker machines run many client processes.

    Processes on one machine share its CPU (processor sharing).  With the
    defense each address costs a puzzle and goes through the difficulty
    auction; without it every request is granted after B/C of CPU.
    """
    cfg = cfg or ScenarioConfig(scenario="address_exhaustion")
    over = {}
    if attacker_machines is not None:
        over["attacker_machines"] = int(attacker_machines)
    if attacker_processes is not None:
        over["attacker_processes"] = int(attacker_processes)
    if mirage_on is not None:
        over["mirage_on"] = bool(mirage_on)
    cfg = cfg.replace(scenario="address_exhaustion", simnet=over,
                      **({"seed": seed} if seed is not None else {}))
    s, pz = cfg.simnet, cfg.puzzle
    sim = Simulator(cfg.seed)
    model = ClientModel(s.client_B, s.client_E, s.client_C)
    rtt = s.request_rtt_s
    horizon = cfg.duration_s
    base_d = pz.difficulty

    machines = ["honest"] + [f"attacker{k}" for k in range(s.attacker_machines)]
    cpus = {m: SharedCpu(sim, model.C) for m in machines}
    grants_log = {m: [] for m in machines}
    owner, difficulty = [], []

    alloc = AllocatorState(pz.bucket_capacity, pz.release_rate)
    pending = []
    escalations = 0

    def start(pid):
        cpus[owner[pid]].submit(model.work(difficulty[pid], sim.rng, s.mirage_on), solved, pid)

    def solved(pid):
        sim.after(rtt / 2.0, EventKind.TIMER_FIRE, submit, pid, difficulty[pid])
        if s.mirage_on:
            # continuous solving: the next puzzle was prefetched
            start(pid)

    def submit(pid, d):
        if s.mirage_on:
            pending.append(PendingSolution(pid, d, sim.now))
        else:
            grants_log[owner[pid]].append(sim.now)
            sim.after(rtt / 2.0, EventKind.TIMER_FIRE, start, pid)

    def tick():
        nonlocal escalations
        grants, escs = allocator_step(alloc, sim.now, pending)
        pending.clear()
        for pid, _slot in grants:
            grants_log[owner[pid]].append(sim.now)
            difficulty[pid] = base_d
        for pid, new_d in escs:
            escalations += 1
            difficulty[pid] = max(difficulty[pid], new_d)
        sim.after(pz.allocator_step_s, EventKind.TIMER_FIRE, tick)

    def spawn(machine):
        pid = len(owner)
        owner.append(machine)
        difficulty.append(base_d)
        sim.after(sim.rng.uniform(0.0, rtt), EventKind.TIMER_FIRE, start, pid)

    if horizon > 0:
        spawn("honest")
        for p in range(s.attacker_processes):
            spawn(machines[1 + p % s.attacker_machines])
        if s.mirage_on:
            sim.after(pz.allocator_step_s, EventKind.TIMER_FIRE, tick)
    sim.run(horizon)

    report = RunReport(cfg.effective(), cfg.seed)
    nbins = int(math.ceil(horizon / s.bin_s))
    for b in range(nbins):
        lo, hi = b * s.bin_s, (b + 1) * s.bin_s
        for m in machines:
            n = sum(1 for t in grants_log[m] if lo <= t < hi)
            report.add(round(lo, 9), m, "grants", n)
    start_w = min(s.warmup_s, horizon)
    counts = {m: sum(1 for t in grants_log[m] if start_w <= t < horizon) for m in machines}
    per_attacker = sum(counts[m] for m in machines[1:]) / s.attacker_machines
    report.summary = {
        "honest_addresses": counts["honest"],
        "attacker_addresses_per_machine": per_attacker,
        "ratio": per_attacker / counts["honest"] if counts["honest"] else math.inf,
        "escalations": escalations,
        "events": sim.processed,
    }
    return report


def scenario_compromised_routers(f=None, C_H=None, C_A=None, seed=None,
                                 cfg: ScenarioConfig | None = None) -> RunReport:
    """Continuous solvers on both sides; a fraction f of honest flows crosses a snooping router.

    Honest clients open one AIMD flow per address they hold.  The attacker
    floods every address it holds or learns from the compromised router;
    that router also drops the honest traffic it carries.
    """
    cfg = cfg or ScenarioConfig(scenario="compromised_routers")
    over = {}
    for key, val in (("f", f), ("C_H", C_H), ("C_A", C_A)):
        if val is not None:
            over[key] = float(val)
    cfg = cfg.replace(scenario="compromised_routers", simnet=over,
                      **({"seed": seed} if seed is not None else {}))
    s, pz = cfg.simnet, cfg.puzzle
    sim = Simulator(cfg.seed)
    victim = _Victim(sim, cfg, True)
    horizon = cfg.duration_s
    size = s.packet_bytes
    d = pz.difficulty

    next_index = [0]
    honest_flows: list = []
    attacker_targets: list = []
    leaked: set = set()
    held = {"honest": 0, "attacker": 0}
    held_log = []

    def issue():
        i = next_index[0]
        next_index[0] += 1
        return victim.suffix(i)

    def compromised_router(pkt, flow):
        if pkt.dst_suffix not in leaked:
            leaked.add(pkt.dst_suffix)
            attacker_targets.append(pkt.dst_suffix)
        flow.on_drop(pkt)

    def honest_grant():
        k = held["honest"]
        held["honest"] += 1
        held_log.append((sim.now, "honest", held["honest"]))
        via_bad = math.floor((k + 1) * s.f + 1e-12) > math.floor(k * s.f + 1e-12)
        rtt = sim.rng.uniform(s.rtt_min_s, s.rtt_max_s)
        entry = compromised_router if via_bad else victim.entry
        flow = TcpAimdFlow(sim, f"h{k}", "honest", issue(), rtt, entry, victim.hop.prefix, size)
        flow.compromised = via_bad
        honest_flows.append(flow)
        flow.start()

    def attacker_grant():
        held["attacker"] += 1
        held_log.append((sim.now, "attacker", held["attacker"]))
        attacker_targets.append(issue())

    sides = {
        "honest": (ClientModel(s.client_B, s.client_E, s.C_H * s.compute_unit_cycles), honest_grant),
        "attacker": (ClientModel(s.client_B, s.client_E, s.C_A * s.compute_unit_cycles), attacker_grant),
    }

    # continuous solving: the next puzzle is already in hand when one is
    # solved, so the request round trip overlaps the next computation
    def solve(side):
        model, _ = sides[side]
        sim.after(model.solve_time(d, sim.rng), EventKind.PUZZLE_SOLVED, solved, side)

    def solved(side):
        sim.after(s.request_rtt_s, EventKind.TIMER_FIRE, sides[side][1])
        solve(side)

    flood = UdpCbrFlow(sim, "flood", "attacker", s.flood_multiplier * s.capacity_bps,
                       lambda: attacker_targets, victim.entry, victim.hop.prefix, size,
                       fwd_delay_s=s.rtt_min_s / 4.0, suffix_bits=victim.hop.suffix_bits)
    if horizon > 0:
        solve("honest")
        solve("attacker")
        flood.start(0.0)
    sim.run(horizon)

    report = RunReport(cfg.effective(), cfg.seed)
    _delivery_records(report, victim.meter, ["honest", "attacker"], horizon, s.bin_s)
    for t, side, n in held_log:
        report.add(t, side, "held_suffixes", n)
    start = min(s.warmup_s, horizon)
    hb = victim.meter.window("honest", start, horizon)
    ab = victim.meter.window("attacker", start, horizon)
    report.summary = {
        "honest_share": hb / (hb + ab) if hb + ab else 0.0,
        "expected_share": fair_share(s.C_H, s.C_A, s.f),
        "honest_suffixes": held["honest"],
        "attacker_suffixes": held["attacker"],
        "leaked_suffixes": len(leaked),
        "events": sim.processed,
    }
    return report


def run_scenario(cfg: ScenarioConfig) -> RunReport:
    """Run whichever scenario the config names."""
    if cfg.scenario == "bandwidth_exhaustion":
        return scenario_bandwidth_exhaustion(cfg=cfg)
    if cfg.scenario == "address_exhaustion":
        return scenario_address_exhaustion(cfg=cfg)
    if cfg.scenario == "compromised_routers":
        return scenario_compromised_routers(cfg=cfg)
    if cfg.scenario == "client_session":
        from .session import scenario_client_session
        return scenario_client_session(cfg=cfg)
    raise ValueError(f"unknown scenario {cfg.scenario!r}")
