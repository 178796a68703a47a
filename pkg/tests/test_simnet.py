import math
import random
import statistics

import pytest

from mirage.config import ScenarioConfig
from mirage.router import DrrScheduler, FifoScheduler, Packet
from mirage.simnet.engine import ClientModel, EventKind, SharedCpu, Simulator, solve_time
from mirage.simnet.net import Bottleneck, TcpAimdFlow, UdpCbrFlow
from mirage.simnet.report import CSV_COLUMNS, RunReport, parse_csv, share_from_records
from mirage.simnet.scenarios import (decoy_values, run_scenario, scenario_address_exhaustion,
                                     scenario_bandwidth_exhaustion, scenario_compromised_routers)
from mirage.simnet.session import scenario_client_session


def test_event_order_is_time_then_insertion():
    sim = Simulator(trace=True)
    seen = []
    sim.at(2.0, EventKind.TIMER_FIRE, seen.append, "c")
    sim.at(1.0, EventKind.TIMER_FIRE, seen.append, "a")
    sim.at(1.0, EventKind.TIMER_FIRE, seen.append, "b")
    ev = sim.at(1.5, EventKind.TIMER_FIRE, seen.append, "x")
    sim.cancel(ev)
    sim.run(10)
    assert seen == ["a", "b", "c"]
    assert sim.now == 10 and sim.processed == 3
    with pytest.raises(ValueError):
        sim.at(5, EventKind.TIMER_FIRE, seen.append, "late")


def test_shared_cpu_processor_sharing():
    sim = Simulator()
    cpu = SharedCpu(sim, 10.0)
    done = {}
    cpu.submit(10.0, lambda: done.setdefault("a", sim.now))
    cpu.submit(20.0, lambda: done.setdefault("b", sim.now))
    sim.run(100)
    # both run at 5/s until a finishes at t=2, then b alone needs 10 more units
    assert done["a"] == pytest.approx(2.0)
    assert done["b"] == pytest.approx(3.0)


def test_client_model_attempts():
    m = ClientModel(B=1e6, E=1e6, C=1e9)
    rng = random.Random(2)
    draws = [m.sample_attempts(10, rng) for _ in range(5000)]
    assert all(1 <= n <= 1024 for n in draws)
    assert statistics.mean(draws) == pytest.approx(512, rel=0.03)
    assert m.sample_attempts(0, rng) == 1.0
    assert solve_time(m, 10, attempts=100) == pytest.approx((1e6 + 100e6) / 1e9)
    assert solve_time(m, 10, mirage=False) == pytest.approx(1e-3)
    with pytest.raises(ValueError):
        solve_time(m, -1)
    with pytest.raises(ValueError):
        ClientModel(C=0)


def test_bottleneck_serializes_at_capacity():
    sim = Simulator()
    link = Bottleneck(sim, 8000.0, 0.0, FifoScheduler(10))
    got = []
    link.sink = lambda p: got.append(sim.now)
    for k in range(3):
        link.receive(Packet(None, 0, k, 100))
    sim.run(5)
    assert got == pytest.approx([0.1, 0.2, 0.3])


def test_aimd_halves_on_loss():
    sim = Simulator()
    flow = TcpAimdFlow(sim, "f", "f", 1, 0.1, lambda p, f: None)
    flow.cwnd = 8.0
    flow.inflight = 2
    flow._loss()
    assert flow.cwnd == 4.0
    flow._loss()  # same RTT: no second halving
    assert flow.cwnd == 4.0


def test_aimd_rto_backoff():
    sim = Simulator()
    flow = TcpAimdFlow(sim, "f", "f", 1, 0.1, lambda p, f: None)
    flow.active = True
    fired = []
    flow._pump = lambda: fired.append(sim.now)
    flow.inflight = 1
    flow._loss()
    sim.run(5)
    assert fired == [1.0]
    flow.waiting_rto = False
    flow.inflight = 1
    flow._loss()
    sim.run(10)
    assert fired == [1.0, 7.0]


def test_udp_rate():
    sim = Simulator()
    sent = []
    flow = UdpCbrFlow(sim, "u", "u", 8000.0, lambda: [1, 2], lambda p, f: sent.append(p.dst_suffix),
                      size_bytes=100, fwd_delay_s=0.0)
    flow.start(0.0)
    sim.run(0.95)
    assert sent == [1, 2] * 5


def test_report_csv_round_trip():
    r = RunReport({"a": 1}, 3)
    r.add(0.0, "x", "delivered_bytes", 1500)
    r.add(1.0, "y", "delivered_bytes", 0.1)
    text = r.to_csv()
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert parse_csv(text) == [(0.0, "x", "delivered_bytes", 1500.0), (1.0, "y", "delivered_bytes", 0.1)]
    assert share_from_records(parse_csv(text), {"x"}, "delivered_bytes", 0, 2) == pytest.approx(1500 / 1500.1)


def test_decoys_are_never_active():
    from mirage.hopping import active_values
    cfg = ScenarioConfig().hop.hop_config()
    decoys = decoy_values(cfg, 0, 8)
    assert len(set(decoys)) == 8 and not set(decoys) & active_values(cfg, 0)


def short(**blocks):
    return ScenarioConfig(duration_s=60).replace(simnet={"warmup_s": 10.0}, **blocks)


def test_bandwidth_exhaustion_defense_helps():
    off = scenario_bandwidth_exhaustion(1.3, False, 1, short())
    on = scenario_bandwidth_exhaustion(1.3, True, 1, short())
    assert on.summary["benign_bps"] > 2 * off.summary["benign_bps"]
    assert on.summary["acl_drops"] > 0 and off.summary["acl_drops"] == 0


def test_summary_recomputable_from_records():
    rep = scenario_compromised_routers(0.0, 1.0, 3.0, 2, short())
    start = rep.config["simnet"]["warmup_s"]
    share = share_from_records(parse_csv(rep.to_csv()), {"honest"}, "delivered_bytes", start, 60)
    assert share == pytest.approx(rep.summary["honest_share"], abs=1e-12)


def test_compromised_router_leaks_and_drops():
    rep = scenario_compromised_routers(1.0, 1.0, 1.0, 1, short())
    assert rep.summary["leaked_suffixes"] > 0
    assert rep.summary["honest_share"] < 0.05


def test_address_exhaustion_small():
    rep = scenario_address_exhaustion(3, 3, True, 1, short())
    assert 0.7 <= rep.summary["ratio"] <= 1.3


def test_client_session_holds_suffixes():
    cfg = ScenarioConfig(scenario="client_session", duration_s=120, seed=1).replace(
        hop={"interval_seconds": 40, "grace_seconds": 8})
    rep = scenario_client_session(cfg=cfg)
    for name, d in rep.summary["drivers"].items():
        assert d["acquired"] > 3
        assert d["max_gap_s"] <= 8
        assert d["intervals_covered"] == 3
    assert rep.summary["dns_transitions"][0][1] == "UnderAttack"
    assert rep.summary["dns_transitions"][0][0] == pytest.approx(4.0)  # third failed probe


def test_client_session_auction_and_recovery():
    cfg = ScenarioConfig(scenario="client_session", duration_s=90, seed=2).replace(
        hop={"interval_seconds": 30, "grace_seconds": 5},
        services={"mode": "auction", "attack_end_s": 50.0})
    rep = scenario_client_session(cfg=cfg)
    modes = [m for _, m in rep.summary["dns_transitions"]]
    assert modes == ["UnderAttack", "Normal"]
    assert all(d["acquired"] > 0 for d in rep.summary["drivers"].values())


def test_run_scenario_dispatch():
    rep = run_scenario(ScenarioConfig(scenario="bandwidth_exhaustion", duration_s=5))
    assert rep.summary["events"] > 0
    empty = run_scenario(ScenarioConfig(duration_s=0))
    assert empty.records == [] and empty.to_csv() == "time_s,entity_id,metric,value\n"


@pytest.mark.parametrize("scenario", ["bandwidth_exhaustion", "address_exhaustion",
                                      "compromised_routers", "client_session"])
def test_same_seed_same_bytes(scenario):
    cfg = ScenarioConfig(scenario=scenario, seed=7, duration_s=40)
    assert run_scenario(cfg).to_csv() == run_scenario(cfg).to_csv()
