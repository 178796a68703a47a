"""Scenario configuration: strict JSON schema with explicit defaults."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .errors import ConfigInvalid

SCENARIOS = ("bandwidth_exhaustion", "address_exhaustion", "compromised_routers", "client_session")


@dataclass
class HopParams:
    master_key: str = "00" * 16
    prefix: str = "20010db800000000"
    prefix_bits: int = 64
    interval_seconds: int = 300
    grace_seconds: int = 30
    set_size: int = 4096

    def hop_config(self):
        from .hopping import HopConfig
        try:
            key = bytes.fromhex(self.master_key)
            prefix = int(self.prefix, 16)
        except ValueError as exc:
            raise ConfigInvalid(f"hop: {exc}") from None
        try:
            return HopConfig(key, prefix, self.prefix_bits, self.interval_seconds,
                             self.grace_seconds, self.set_size)
        except ValueError as exc:
            raise ConfigInvalid(f"hop: {exc}") from None


@dataclass
class PuzzleParams:
    difficulty: int = 10
    batch_size: int = 4096
    bucket_capacity: int = 8
    release_rate: float = 16.0
    allocator_step_s: float = 0.1


@dataclass
class RouterParams:
    quantum: int = 1500
    buffer_packets: int = 64
    fifo_buffer_packets: int = 64
    decoys: int = 8
    max_entries: int = 65536


@dataclass
class SimnetParams:
    capacity_bps: float = 1e6
    propagation_delay_s: float = 0.005
    packet_bytes: int = 1500
    rtt_min_s: float = 0.04
    rtt_max_s: float = 0.12
    warmup_s: float = 30.0
    bin_s: float = 1.0
    mirage_on: bool = True
    # bandwidth exhaustion
    n_benign: int = 10
    attack_multiplier: float = 1.0
    attack_suffixes: int = 1
    spray_unauthorized: float = 0.5
    # address exhaustion
    attacker_machines: int = 3
    attacker_processes: int = 3
    client_B: float = 5e6
    client_E: float = 1e6
    client_C: float = 1e9
    request_rtt_s: float = 0.1
    # compromised routers
    f: float = 0.0
    C_H: float = 1.0
    C_A: float = 1.0
    compute_unit_cycles: float = 2.5e8
    flood_multiplier: float = 4.0  # enough to keep every attacker queue backlogged


@dataclass
class DriverParams:
    name: str = "client"
    compute: float = 1.0
    rtt_s: float = 0.02


@dataclass
class ServicesParams:
    mode: str = "self_service"
    dns_ttl_s: int = 5
    probe_k: int = 3
    recovery_m: int = 5
    probe_period_s: float = 2.0
    presolve_lead_s: float = 5.0
    backoff_base_s: float = 1.0
    backoff_cap_s: float = 30.0
    target_held: int = 0  # 0: keep acquiring
    attack_start_s: float = 0.0
    attack_end_s: float = -1.0  # negative: never ends
    drivers: list = field(default_factory=lambda: [DriverParams("h1", 1.0), DriverParams("h2", 3.0)])


@dataclass
class ScenarioConfig:
    scenario: str = "bandwidth_exhaustion"
    seed: int = 0
    duration_s: float = 300.0
    hop: HopParams = field(default_factory=HopParams)
    puzzle: PuzzleParams = field(default_factory=PuzzleParams)
    router: RouterParams = field(default_factory=RouterParams)
    simnet: SimnetParams = field(default_factory=SimnetParams)
    services: ServicesParams = field(default_factory=ServicesParams)

    def effective(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **blocks) -> "ScenarioConfig":
        """Copy with per-block overrides: ``cfg.replace(simnet={"f": 0.5}, seed=3)``."""
        data = self.effective()
        for key, val in blocks.items():
            if isinstance(val, dict) and isinstance(data.get(key), dict):
                data[key].update(val)
            else:
                data[key] = val
        return from_dict(data)


_NESTED = {"hop": HopParams, "puzzle": PuzzleParams, "router": RouterParams,
           "simnet": SimnetParams, "services": ServicesParams}


def _coerce(cls, name, value, path):
    ftype = {f.name: f.type for f in dataclasses.fields(cls)}[name]
    default = getattr(cls(), name)
    where = f"{path}.{name}" if path else name
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigInvalid(f"{where}: expected boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigInvalid(f"{where}: expected integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigInvalid(f"{where}: expected number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigInvalid(f"{where}: expected string")
        return value
    if ftype in ("list",) or isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigInvalid(f"{where}: expected list")
        return [_build(DriverParams, v, f"{where}[{i}]") for i, v in enumerate(value)]
    raise ConfigInvalid(f"{where}: unsupported field")


def _build(cls, data, path=""):
    if not isinstance(data, dict):
        raise ConfigInvalid(f"{path or 'config'}: expected object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigInvalid(f"{path or 'config'}: unknown keys {unknown}")
    kwargs = {}
    for key, value in data.items():
        if cls is ScenarioConfig and key in _NESTED:
            kwargs[key] = _build(_NESTED[key], value, key)
        else:
            kwargs[key] = _coerce(cls, key, value, path)
    return cls(**kwargs)


def from_dict(data: dict) -> ScenarioConfig:
    cfg = _build(ScenarioConfig, data)
    validate(cfg)
    return cfg


def loads(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return from_dict(data)


def load(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def validate(cfg: ScenarioConfig):
    if cfg.scenario not in SCENARIOS:
        raise ConfigInvalid(f"scenario must be one of {', '.join(SCENARIOS)}")
    if cfg.duration_s < 0:
        raise ConfigInvalid("duration_s must be non-negative")
    cfg.hop.hop_config()
    s = cfg.simnet
    if s.capacity_bps <= 0 or s.packet_bytes < 40 or s.packet_bytes > 9000:
        raise ConfigInvalid("simnet: capacity must be positive and packet_bytes in [40, 9000]")
    if not 0 < s.rtt_min_s <= s.rtt_max_s:
        raise ConfigInvalid("simnet: need 0 < rtt_min_s <= rtt_max_s")
    if not 0.0 <= s.f <= 1.0:
        raise ConfigInvalid("simnet.f must lie in [0, 1]")
    if s.C_H <= 0 or s.C_A <= 0:
        raise ConfigInvalid("simnet: C_H and C_A must be positive")
    if s.attacker_machines < 1 or s.attacker_processes < s.attacker_machines:
        raise ConfigInvalid("simnet: need attacker_processes >= attacker_machines >= 1")
    if s.attack_multiplier < 0 or not 0.0 <= s.spray_unauthorized <= 1.0:
        raise ConfigInvalid("simnet: attack_multiplier >= 0 and spray_unauthorized in [0, 1]")
    if not 0 <= cfg.puzzle.difficulty <= 30:
        raise ConfigInvalid("puzzle.difficulty must lie in [0, 30]")
    if cfg.puzzle.release_rate <= 0 or cfg.puzzle.bucket_capacity < 1 or cfg.puzzle.allocator_step_s <= 0:
        raise ConfigInvalid("puzzle: allocator parameters must be positive")
    if cfg.router.quantum <= 0 or cfg.router.buffer_packets <= 0 or cfg.router.fifo_buffer_packets <= 0:
        raise ConfigInvalid("router: quantum and buffers must be positive")
    if cfg.services.mode not in ("self_service", "auction"):
        raise ConfigInvalid("services.mode must be self_service or auction")
    if any(d.compute <= 0 for d in cfg.services.drivers):
        raise ConfigInvalid("services.drivers: compute must be positive")
