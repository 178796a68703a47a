import json
import os
import signal
import subprocess
import sys
import time
from pathlib import Path

import pytest

from mirage.cli import main
from mirage.simnet.report import CSV_COLUMNS

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_examples(capsys):
    assert run_cli(capsys, "analyze", "bruteforce", "--size", "25000")[1].strip() == "1.355e-15"
    assert run_cli(capsys, "analyze", "fairshare", "--ch", "1", "--ca", "3")[1].strip() == "0.25"
    code, out, _ = run_cli(capsys, "analyze", "pushback", "--topology", str(FIXTURES / "chain.tsv"),
                           "--attack-gbps", "0.05")
    assert code == 0
    assert "pushback link L1 hop 1" in out and "mean router hops 1\n" in out


def test_analyze_cost_and_scan(capsys):
    code, out, _ = run_cli(capsys, "analyze", "cost")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0].startswith("share,") and len(lines) == 91
    assert all(float(l.split(",")[3]) >= 100 for l in lines[1:])
    code, out, _ = run_cli(capsys, "analyze", "scan", "--bots", "1", "--rate-bps", "64000",
                           "--probe-bits", "512")
    assert float(out) == pytest.approx(37500 / 2 ** 64, rel=1e-3)


def test_analyze_errors(capsys, tmp_path):
    assert run_cli(capsys, "analyze", "fairshare", "--ch", "0", "--ca", "0")[0] == 2
    bad = tmp_path / "bad.tsv"
    bad.write_text("#mirage-topo v1\np\t1\tL1\tx\tNA\t1\n")
    code, _, err = run_cli(capsys, "analyze", "pushback", "--topology", str(bad), "--attack-gbps", "1")
    assert code == 2 and "line 2" in err
    assert run_cli(capsys, "analyze", "pushback", "--topology", str(tmp_path / "none"),
                   "--attack-gbps", "1")[0] == 3


def test_run_writes_csv_and_summary(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scenario": "compromised_routers", "duration_s": 20}))
    out = tmp_path / "out" / "run"
    code, stdout, _ = run_cli(capsys, "run", str(cfg), "--seed", "3", "--out", str(out))
    assert code == 0
    csv_text = (tmp_path / "out" / "run.csv").read_text()
    assert csv_text.splitlines()[0] == ",".join(CSV_COLUMNS)
    summary = json.loads((tmp_path / "out" / "run.json").read_text())
    assert summary["seed"] == 3 and summary["effective_config"]["seed"] == 3
    assert summary["effective_config"]["simnet"]["capacity_bps"] == 1e6
    # same seed, same bytes
    run_cli(capsys, "run", str(cfg), "--seed", "3", "--out", str(tmp_path / "again.csv"))
    assert (tmp_path / "again.csv").read_text() == csv_text


def test_run_parallel_seeds(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scenario": "bandwidth_exhaustion", "duration_s": 5}))
    code, _, _ = run_cli(capsys, "run", str(cfg), "--seed", "1", "--seed", "2", "--parallel", "2",
                         "--out", str(tmp_path / "r"))
    assert code == 0
    assert (tmp_path / "r.seed1.csv").exists() and (tmp_path / "r.seed2.json").exists()


def test_run_config_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"seed": 1,\n oops')
    code, _, err = run_cli(capsys, "run", str(bad), "--out", str(tmp_path / "x"))
    assert code == 2 and "line 2 column" in err
    bad.write_text('{"mystery": 1}')
    assert run_cli(capsys, "run", str(bad), "--out", str(tmp_path / "x"))[0] == 2
    assert run_cli(capsys, "run", str(tmp_path / "missing.json"), "--out", str(tmp_path / "x"))[0] == 3


def test_validate(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("{}")
    code, out, _ = run_cli(capsys, "validate", str(cfg))
    assert code == 0 and json.loads(out)["puzzle"]["difficulty"] == 10


def start_server(*args):
    proc = subprocess.Popen([sys.executable, "-m", "mirage.cli", "serve", *args],
                            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    line = proc.stdout.readline()
    assert line.startswith("listening"), proc.stderr.read()
    return proc, line.split()[-1]


def test_serve_sigterm_and_port_clash(tmp_path):
    log = tmp_path / "state.log"
    proc, addr = start_server("puzzle", "--port", "0", "--state-log", str(log))
    try:
        port = addr.rsplit(":", 1)[1]
        clash = subprocess.run([sys.executable, "-m", "mirage.cli", "serve", "puzzle", "--port", port],
                               capture_output=True, text=True, timeout=30)
        assert clash.returncode == 3
    finally:
        proc.send_signal(signal.SIGTERM)
        assert proc.wait(timeout=20) == 0
    events = [json.loads(l)["event"] for l in log.read_text().splitlines()]
    assert events[0] == "batch_uploaded" and events[-1] == "stop"


def test_serve_dns_needs_addresses(capsys):
    assert run_cli(capsys, "serve", "dns")[0] == 2


def test_live_pair_serves_a_client(tmp_path):
    import asyncio

    from mirage.services.client import ClientDriver
    from mirage.services.transport import AsyncRunner

    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"hop": {"interval_seconds": 30, "grace_seconds": 5, "set_size": 64},
                               "puzzle": {"difficulty": 6, "batch_size": 64}}))
    puzzle, paddr = start_server("puzzle", "--config", str(cfg))
    dns, daddr = start_server("dns", "--victim", "127.0.0.1:1", "--puzzle-server", paddr,
                              "--probe-period", "0.1", "--ttl", "1")
    try:
        time.sleep(0.6)
        drv = ClientDriver("c", time.time, 30, 5, target_held=1, until=time.time() + 3)
        asyncio.run(AsyncRunner(daddr).drive(drv))
        assert drv.history
    finally:
        for p in (puzzle, dns):
            p.send_signal(signal.SIGTERM)
            assert p.wait(timeout=20) == 0


def test_log_level_env(tmp_path):
    env = dict(os.environ, MIRAGE_LOG="debug")
    out = subprocess.run([sys.executable, "-m", "mirage.cli", "analyze", "fairshare", "--ch", "1",
                          "--ca", "1"], env=env, capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "0.5"
