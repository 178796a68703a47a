"""Client sessions against in-process DNS and puzzle services, on simulated time."""
from __future__ import annotations

import math

from ..config import ScenarioConfig
from ..puzzle import solve_puzzle
from ..services import dns as dnsmod
from ..services import puzzled
from ..services.client import ClientDriver, Request, Sleep, Solve
from .engine import ClientModel, EventKind, Simulator
from .report import RunReport

DNS_ADDR = "dns.sim:53"
VICTIM_ADDR = "victim.sim:80"
PUZZLE_ADDR = "puzzle.sim:7000"


class SimRunner:
    """Feeds a ClientDriver's effects through the simulator.

    Requests reach the in-process services after half the driver's RTT and
    replies come back after the other half.  Solving is done for real, but
    the time it takes comes from the client model and the attempt count.
    """

    def __init__(self, sim: Simulator, driver: ClientDriver, services: dict, rtt_s: float,
                 model: ClientModel):
        self.sim = sim
        self.driver = driver
        self.services = services  # address -> callable(msg, now, reply_cb) -> reply | None
        self.rtt_s = rtt_s
        self.model = model
        self.gen = driver.run()

    def start(self, at: float = 0.0):
        self.sim.at(at, EventKind.TIMER_FIRE, self._step, None, None)

    def _step(self, value, exc):
        try:
            effect = self.gen.throw(exc) if exc is not None else self.gen.send(value)
        except StopIteration:
            return
        sim = self.sim
        if isinstance(effect, Request):
            sim.after(self.rtt_s / 2, EventKind.PACKET_ARRIVAL, self._deliver,
                      effect.address or DNS_ADDR, effect.msg)
        elif isinstance(effect, Solve):
            sol = solve_puzzle(effect.puzzle)
            dt = self.model.solve_time(effect.puzzle.d, sim.rng, attempts=sol.attempts)
            sim.after(dt, EventKind.PUZZLE_SOLVED, self._step, sol, None)
        elif isinstance(effect, Sleep):
            sim.after(effect.seconds, EventKind.TIMER_FIRE, self._step, None, None)
        else:
            raise TypeError(f"unknown effect {effect!r}")

    def _reply(self, reply):
        self.sim.after(self.rtt_s / 2, EventKind.PACKET_ARRIVAL, self._step, reply, None)

    def _deliver(self, address, msg):
        handler = self.services.get(address)
        if handler is None:
            self.sim.after(self.rtt_s / 2, EventKind.PACKET_ARRIVAL, self._step, None,
                           ConnectionRefusedError(f"nothing listens on {address}"))
            return
        reply = handler(msg, self.sim.now, self._reply)
        if reply is not None:
            self._reply(reply)


def scenario_client_session(seed=None, cfg: ScenarioConfig | None = None) -> RunReport:
    """Drivers of different compute obtain and hold suffixes through the services."""
    cfg = cfg or ScenarioConfig(scenario="client_session")
    cfg = cfg.replace(scenario="client_session", **({"seed": seed} if seed is not None else {}))
    sv, s, pzp = cfg.services, cfg.simnet, cfg.puzzle
    hop = cfg.hop.hop_config()
    sim = Simulator(cfg.seed)
    horizon = cfg.duration_s
    I = hop.interval_seconds

    state = {"dns": dnsmod.DnsState(VICTIM_ADDR, PUZZLE_ADDR, sv.dns_ttl_s, sv.probe_k, sv.recovery_m)}
    mode_log = []

    def attacked(now):
        return now >= sv.attack_start_s and (sv.attack_end_s < 0 or now < sv.attack_end_s)

    def probe():
        before = state["dns"].mode
        state["dns"] = dnsmod.dns_step(state["dns"], not attacked(sim.now))
        if state["dns"].mode is not before:
            mode_log.append((sim.now, state["dns"].mode.value))
        sim.after(sv.probe_period_s, EventKind.PROBE_RESULT, probe)

    if sv.mode == "auction":
        ps = puzzled.PuzzleServerState.auction(hop, pzp.difficulty, pzp.bucket_capacity,
                                               pzp.release_rate, cfg.seed)

        def allocator_tick():
            for reply_cb, reply in puzzled.tick(ps, sim.now):
                reply_cb(reply)
            sim.after(pzp.allocator_step_s, EventKind.TIMER_FIRE, allocator_tick)
    else:
        ps = puzzled.PuzzleServerState.self_service(I)

        def upload():
            # the victim keeps the current and the next batch on the server
            T = ps.interval_at(sim.now)
            for t in (T, T + 1):
                if t not in ps.batches:
                    batch = puzzled.make_batch(hop, t, pzp.difficulty,
                                               min(pzp.batch_size, hop.set_size), cfg.seed)
                    puzzled.upload_batch(ps, t, [p for p, _ in batch])
            sim.at((T + 1) * I, EventKind.INTERVAL_ROLLOVER, upload)

    services = {
        DNS_ADDR: lambda msg, now, cb: dnsmod.handle_dns(state["dns"], msg),
        PUZZLE_ADDR: lambda msg, now, cb: puzzled.handle_puzzle(ps, msg, now, cb),
    }

    drivers = []
    for dp in sv.drivers:
        drv = ClientDriver(dp.name, lambda: sim.now, I, hop.grace_seconds, sv.mode,
                           sv.presolve_lead_s, sv.backoff_base_s, sv.backoff_cap_s,
                           sv.target_held or None, until=horizon)
        model = ClientModel(s.client_B, s.client_E, dp.compute * s.compute_unit_cycles)
        drivers.append(drv)
        SimRunner(sim, drv, services, dp.rtt_s, model).start(0.0)

    if horizon > 0:
        sim.at(0.0, EventKind.PROBE_RESULT, probe)
        if sv.mode == "auction":
            sim.at(0.0, EventKind.TIMER_FIRE, allocator_tick)
        else:
            sim.at(0.0, EventKind.INTERVAL_ROLLOVER, upload)
    sim.run(horizon)

    report = RunReport(cfg.effective(), cfg.seed)
    nbins = int(math.ceil(horizon / s.bin_s))
    for drv in drivers:
        for b in range(nbins):
            t = b * s.bin_s
            n = sum(1 for h in drv.history if h.acquired_at <= t < h.expires_at)
            report.add(round(t, 9), drv.name, "valid_suffixes", n)
    for t, mode in mode_log:
        report.add(t, "dns", "under_attack", 1 if mode == "UnderAttack" else 0)
    per = {}
    for drv in drivers:
        first = drv.history[0].acquired_at if drv.history else horizon
        gaps = drv.coverage_gaps(first, horizon)
        per[drv.name] = {
            "acquired": len(drv.history),
            "solves": drv.solves,
            "escalations": drv.escalations,
            "first_acquired_s": first,
            "max_gap_s": max((b - a for a, b in gaps), default=0.0),
            "intervals_covered": len({h.interval for h in drv.history}),
        }
    report.summary = {"drivers": per, "dns_transitions": mode_log, "events": sim.processed}
    return report
