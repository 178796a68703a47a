import math
import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from mirage.analysis import (CostModel, TopologyMap, attack_cost, attacker_share, brute_force_success,
                             compute_pushback, cost_table, expected_attempts, fair_share, gb_per_hour,
                             ingest_topology, parse_topology, scan_fraction)
from mirage.errors import DomainError, ParseError
from oracles import pushback_oracle, random_topology

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def test_brute_force_values():
    assert brute_force_success(25000) == 25000 / 2 ** 64
    assert 1.30e-15 <= brute_force_success(25000) <= 1.36e-15
    assert 5.40e-14 <= brute_force_success(1005000) <= 5.45e-14
    assert brute_force_success(0) == 0.0
    assert brute_force_success(10, suffix_bits=2) == 1.0
    with pytest.raises(DomainError):
        brute_force_success(-1)


def test_scan_fraction():
    # 1 bot at 64 kbit/s with 512-bit probes for 300 s: 37500 probes
    assert scan_fraction(1, 64_000, 512, 300) == 37500 / 2 ** 64
    assert scan_fraction(10 ** 9, 1e12, 64, 300, suffix_bits=16) == 1.0
    with pytest.raises(DomainError):
        scan_fraction(1, 0, 512, 300)


@settings(max_examples=100)
@given(a=st.integers(0, 10 ** 9), b=st.integers(0, 10 ** 9), bits=st.integers(1, 64))
def test_fractions_monotone_and_bounded(a, b, bits):
    lo, hi = sorted((a, b))
    p, q = brute_force_success(lo, bits), brute_force_success(hi, bits)
    assert 0.0 <= p <= q <= 1.0
    s1, s2 = scan_fraction(lo, 1e6, 512, 300, bits), scan_fraction(hi, 1e6, 512, 300, bits)
    assert 0.0 <= s1 <= s2 <= 1.0


def test_fair_share_examples():
    assert fair_share(1, 3) == 0.25
    assert fair_share(1, 1, 0.5) == 0.25
    assert fair_share(2, 0) == 1.0
    with pytest.raises(DomainError):
        fair_share(0, 0)
    with pytest.raises(DomainError):
        fair_share(1, 1, 1.5)


@settings(max_examples=200)
@given(ch=st.floats(1e-6, 1e6), ca=st.floats(0, 1e6), f=st.floats(0, 1), k=st.floats(1e-3, 1e3))
def test_fair_share_properties(ch, ca, f, k):
    assert fair_share(ch, ca, f) + attacker_share(ch, ca, f) == 1.0
    assert math.isclose(fair_share(k * ch, k * ca, f), fair_share(ch, ca, f), rel_tol=1e-9, abs_tol=1e-12)


def test_expected_attempts():
    assert expected_attempts(0) == 1.0
    assert expected_attempts(10) == 512.5


def test_cost_model():
    assert gb_per_hour(8e9 / 3600) == pytest.approx(1.0)
    m = CostModel()
    without, with_ = attack_cost(m, 0.5)
    # x = 0.5 needs exactly the honest compute
    assert with_ == pytest.approx(0.05 * 1e5 + 0.09 * gb_per_hour(0.5e9))
    assert without == pytest.approx(0.09 * gb_per_hour(1e9))
    assert with_ / without >= 100
    small = attack_cost(m, 1e-9)
    assert small[0] < 1e-6 and small[1] < 1e-3
    with pytest.raises(DomainError):
        attack_cost(m, 1.0)
    with pytest.raises(DomainError):
        CostModel(price_transfer_per_gb=0)


def test_cost_grid_monotone():
    rows = cost_table(CostModel())
    assert len(rows) == 90 and rows[0][0] == 0.01 and rows[-1][0] == 0.9
    for (x0, wo0, w0), (x1, wo1, w1) in zip(rows, rows[1:]):
        assert wo1 > wo0 and w1 > w0
    assert all(w >= wo for _, wo, w in rows)


# ------------------------------------------------------------ topology


def test_chain_fixture():
    tmap = ingest_topology(FIXTURES / "chain.tsv")
    assert tmap.links["L1"].capacity_bps == 10e6 and tmap.links["L2"].hop == 2
    rep = compute_pushback(tmap, 50e6)
    assert rep.links == {"L1"}
    assert rep.weighted_mean_router_hops == 1.0
    assert compute_pushback(tmap, 5e6).links == frozenset()


def test_branch_fixture():
    tmap = ingest_topology(FIXTURES / "branch.tsv")
    rep = compute_pushback(tmap, 1e9)
    assert rep.links == {"A2"}
    assert rep.weighted_mean_router_hops == pytest.approx(1.2, abs=1e-12)
    assert rep.weighted_mean_as_hops == pytest.approx(1.2, abs=1e-12)


def test_median_and_invalid_estimates():
    text = "\n".join([
        "#mirage-topo v1",
        "a\t1\tL1\t10000000\tNA\t1",
        "b\t1\tL1\t90000000\t5\t1",
        "c\t1\tL1\t100000000\tNA\t1",
        "a\t2\tX\t1000\t5000\t2",
        "b\t2\tY\tNA\tNA\tNA",
    ])
    tmap = parse_topology(text)
    assert tmap.links["L1"].capacity_bps == 90e6
    assert tmap.links["X"].capacity_bps is None and tmap.links["X"].invalid == 1
    assert tmap.links["Y"].capacity_bps is None
    # unknown links never count as congested
    assert "X" not in compute_pushback(tmap, 1e12).congested


@pytest.mark.parametrize("text,line", [
    ("", 1),
    ("#wrong\n", 1),
    ("#mirage-topo v1\np\t1\tL1\t10\n", 2),
    ("#mirage-topo v1\np\tx\tL1\t10\tNA\t1\n", 2),
    ("#mirage-topo v1\np\t1\tL1\tten\tNA\t1\n", 2),
    ("#mirage-topo v1\np\t1\tL1\t10\tNA\t1\nq\t2\tL1\t10\tNA\t1\n", 3),
    ("#mirage-topo v1\np\t1\tL1\t10\tNA\t1\np\t1\tL2\t10\tNA\t1\n", 3),
    ("#mirage-topo v1\np\t2\tL1\t10\tNA\t1\n", 2),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as exc:
        parse_topology(text)
    assert exc.value.line == line


def test_negative_attack_rejected():
    with pytest.raises(DomainError):
        compute_pushback(ingest_topology(FIXTURES / "chain.tsv"), -1)


def to_tsv(paths, caps, asn):
    rows = ["#mirage-topo v1"]
    for pid, seq in paths.items():
        for h, lid in enumerate(seq, 1):
            cap = "NA" if caps[lid] is None else repr(caps[lid])
            a = "NA" if asn[lid] is None else str(asn[lid])
            rows.append(f"{pid}\t{h}\t{lid}\t{cap}\tNA\t{a}")
    return "\n".join(rows) + "\n"


@pytest.mark.parametrize("seed", range(60))
def test_pushback_matches_oracle(seed):
    paths, caps, asn, attack = random_topology(random.Random(seed))
    want, router, as_hops = pushback_oracle(paths, caps, asn, attack)
    for tmap in (TopologyMap.from_paths(paths, caps, asn), parse_topology(to_tsv(paths, caps, asn))):
        rep = compute_pushback(tmap, attack)
        assert rep.links == want
        assert rep.weighted_mean_router_hops == pytest.approx(router, abs=1e-9)
        assert rep.weighted_mean_as_hops == pytest.approx(as_hops, abs=1e-9)
