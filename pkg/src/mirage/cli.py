"""Command-line entry point: ``mirage {run,analyze,serve,validate}``."""
from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import signal
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .errors import BindError, ConfigInvalid, DomainError, ParseError

EXIT_OK = 0
EXIT_USER = 2
EXIT_ENV = 3

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}

log = logging.getLogger("mirage")


def _setup_logging():
    level = LOG_LEVELS.get(os.environ.get("MIRAGE_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def _fail(code: int, message: str) -> int:
    print(f"mirage: {message}", file=sys.stderr)
    return code


# ---------------------------------------------------------------- run


def _run_one(cfg_dict: dict, seed: int, stem: str) -> str:
    from .config import from_dict
    from .simnet.scenarios import run_scenario
    cfg = from_dict(dict(cfg_dict, seed=seed))
    report = run_scenario(cfg)
    with open(stem + ".csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(report.to_csv())
    with open(stem + ".json", "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    return stem


def cmd_run(args) -> int:
    from .config import load
    try:
        cfg = load(args.config)
    except ConfigInvalid as exc:
        return _fail(EXIT_USER, f"{args.config}: {exc}")
    except OSError as exc:
        return _fail(EXIT_ENV, f"cannot read {args.config}: {exc.strerror or exc}")
    seeds = args.seed or [cfg.seed]
    stem = args.out[:-4] if args.out.endswith(".csv") else args.out
    stems = [stem] if len(seeds) == 1 else [f"{stem}.seed{s}" for s in seeds]
    base = cfg.effective()
    try:
        parent = os.path.dirname(os.path.abspath(stem))
        os.makedirs(parent, exist_ok=True)
        if args.parallel > 1 and len(seeds) > 1:
            with ProcessPoolExecutor(max_workers=args.parallel) as pool:
                done = list(pool.map(_run_one, [base] * len(seeds), seeds, stems))
        else:
            done = [_run_one(base, s, st) for s, st in zip(seeds, stems)]
    except ConfigInvalid as exc:
        return _fail(EXIT_USER, str(exc))
    except OSError as exc:
        return _fail(EXIT_ENV, f"cannot write output: {exc.strerror or exc}")
    for st in done:
        print(f"wrote {st}.csv {st}.json")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .config import load
    try:
        cfg = load(args.config)
    except ConfigInvalid as exc:
        return _fail(EXIT_USER, f"{args.config}: {exc}")
    except OSError as exc:
        return _fail(EXIT_ENV, f"cannot read {args.config}: {exc.strerror or exc}")
    print(json.dumps(cfg.effective(), indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------- analyze


def cmd_analyze(args) -> int:
    from .analysis import security, topology
    try:
        if args.what == "scan":
            frac = security.scan_fraction(args.bots, args.rate_bps, args.probe_bits,
                                          args.interval, args.suffix_bits)
            print(f"{frac:.3e}")
        elif args.what == "bruteforce":
            print(f"{security.brute_force_success(args.size, args.suffix_bits):.3e}")
        elif args.what == "fairshare":
            print(f"{security.fair_share(args.ch, args.ca, args.f):.6g}")
        elif args.what == "cost":
            model = security.CostModel(args.compute_price, args.transfer_price, args.victim_bps,
                                       args.honest_units, args.legit_bps)
            grid = [args.share] if args.share is not None else security.DEFAULT_SHARE_GRID
            print("share,without_usd_per_hr,with_usd_per_hr,ratio")
            for x, without, with_ in security.cost_table(model, grid):
                print(f"{x:.2f},{without:.6g},{with_:.6g},{with_ / without:.6g}")
        elif args.what == "pushback":
            tmap = topology.ingest_topology(args.topology)
            rep = topology.compute_pushback(tmap, args.attack_gbps * 1e9)
            if not rep.links:
                print("no congested links: no pushback needed")
            for lid in sorted(rep.links, key=lambda k: (tmap.links[k].hop, k)):
                print(f"pushback link {lid} hop {tmap.links[lid].hop} weight {rep.weights[lid]:.6g}")
            print(f"mean router hops {rep.weighted_mean_router_hops:.6g}")
            print(f"mean AS hops {rep.weighted_mean_as_hops:.6g}")
    except ParseError as exc:
        return _fail(EXIT_USER, f"{args.topology}: {exc}")
    except DomainError as exc:
        return _fail(EXIT_USER, str(exc))
    except OSError as exc:
        return _fail(EXIT_ENV, f"cannot read input: {exc.strerror or exc}")
    return EXIT_OK


# ---------------------------------------------------------------- serve


def _config_or_default(path):
    from .config import ScenarioConfig, load
    return load(path) if path else ScenarioConfig()


async def _serve(args) -> int:
    from .services import puzzled
    from .services.dns import DnsState
    from .services.transport import DnsServer, PuzzleServer, StateLog

    cfg = _config_or_default(args.config)
    state_log = StateLog(args.state_log)
    if args.role == "dns":
        st = DnsState(args.victim, args.puzzle_server, args.ttl if args.ttl is not None
                      else cfg.services.dns_ttl_s, cfg.services.probe_k, cfg.services.recovery_m)
        server = DnsServer(st, args.probe_period or cfg.services.probe_period_s, state_log=state_log)
    else:
        hop = cfg.hop.hop_config()
        mode = args.mode or cfg.services.mode
        pz = cfg.puzzle
        if mode == "auction":
            state = puzzled.PuzzleServerState.auction(hop, pz.difficulty, pz.bucket_capacity,
                                                      pz.release_rate, cfg.seed)
            uploader = None
        else:
            state = puzzled.PuzzleServerState.self_service(hop.interval_seconds)
            count = min(pz.batch_size, hop.set_size)

            # the victim's side of the upload, co-located for the demo
            def uploader(T):
                return [p for p, _ in puzzled.make_batch(hop, T, pz.difficulty, count, cfg.seed)]
        server = PuzzleServer(state, uploader, pz.allocator_step_s, state_log=state_log)

    host, port = await server.start(args.host, args.port)
    print(f"listening {args.role} {host}:{port}", flush=True)
    state_log.write(event="start", role=args.role, address=f"{host}:{port}")
    stop = asyncio.Event()
    loop = asyncio.get_running_loop()
    for sig in (signal.SIGTERM, signal.SIGINT):
        loop.add_signal_handler(sig, stop.set)
    await stop.wait()
    await server.close()
    state_log.write(event="stop", role=args.role)
    return EXIT_OK


def cmd_serve(args) -> int:
    if args.role == "dns" and (not args.victim or not args.puzzle_server):
        return _fail(EXIT_USER, "serve dns needs --victim and --puzzle-server")
    try:
        return asyncio.run(_serve(args))
    except ConfigInvalid as exc:
        return _fail(EXIT_USER, str(exc))
    except BindError as exc:
        return _fail(EXIT_ENV, str(exc))
    except OSError as exc:
        return _fail(EXIT_ENV, str(exc))


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mirage", description="Moving-target DDoS defense toolkit")
    p.add_argument("--version", action="version", version=f"mirage {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a simulation scenario")
    r.add_argument("config", help="scenario config (JSON)")
    r.add_argument("--seed", type=int, action="append",
                   help="override the seed; repeat for several runs")
    r.add_argument("--out", required=True, help="output stem; writes STEM.csv and STEM.json")
    r.add_argument("--parallel", type=int, default=1, help="worker processes for several seeds")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="check a config and print its effective form")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    a = sub.add_parser("analyze", help="closed-form calculators")
    asub = a.add_subparsers(dest="what", required=True)
    s = asub.add_parser("scan", help="fraction of the suffix space a botnet can scan")
    s.add_argument("--bots", type=int, required=True)
    s.add_argument("--rate-bps", type=float, required=True)
    s.add_argument("--probe-bits", type=float, default=64 * 8)
    s.add_argument("--interval", type=float, default=300.0)
    s.add_argument("--suffix-bits", type=int, default=64)
    b = asub.add_parser("bruteforce", help="chance a random suffix is active")
    b.add_argument("--size", type=int, required=True)
    b.add_argument("--suffix-bits", type=int, default=64)
    f = asub.add_parser("fairshare", help="honest bandwidth share")
    f.add_argument("--ch", type=float, required=True)
    f.add_argument("--ca", type=float, required=True)
    f.add_argument("--f", type=float, default=0.0, help="fraction of honest traffic via bad routers")
    c = asub.add_parser("cost", help="attacker cost per hour with and without the defense")
    c.add_argument("--share", type=float, help="one desired share instead of the full grid")
    c.add_argument("--compute-price", type=float, default=0.05)
    c.add_argument("--transfer-price", type=float, default=0.09)
    c.add_argument("--victim-bps", type=float, default=1e9)
    c.add_argument("--honest-units", type=float, default=1e5)
    c.add_argument("--legit-bps", type=float, default=1e9)
    pb = asub.add_parser("pushback", help="where to push filters given a topology file")
    pb.add_argument("--topology", required=True)
    pb.add_argument("--attack-gbps", type=float, required=True)
    a.set_defaults(func=cmd_analyze)

    sv = sub.add_parser("serve", help="run the DNS or puzzle service")
    sv.add_argument("role", choices=("dns", "puzzle"))
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=0, help="0 picks a free port")
    sv.add_argument("--mode", choices=("self_service", "auction"))
    sv.add_argument("--config", help="scenario config supplying hop/puzzle/services blocks")
    sv.add_argument("--victim", help="dns: victim host:port to probe")
    sv.add_argument("--puzzle-server", help="dns: puzzle server host:port")
    sv.add_argument("--ttl", type=int)
    sv.add_argument("--probe-period", type=float)
    sv.add_argument("--state-log", help="append state transitions here (JSON lines)")
    sv.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
