"""Closed-form security, fairness and cost calculators."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import DomainError

BITS_PER_GB = 8e9
SECONDS_PER_HOUR = 3600.0


def scan_fraction(bots, probe_rate_bps, probe_size_bits, interval_s, suffix_bits=64) -> float:
    """Fraction of the suffix space a botnet can probe within one interval."""
    if bots < 0 or probe_rate_bps <= 0 or probe_size_bits <= 0 or interval_s <= 0 or suffix_bits <= 0:
        raise DomainError("scan parameters must be positive")
    probes_per_bot = math.floor(probe_rate_bps * interval_s / probe_size_bits)
    return min(1.0, bots * probes_per_bot / 2.0 ** suffix_bits)


def brute_force_success(active_set_size, suffix_bits=64) -> float:
    """Chance that a uniformly random suffix is currently active."""
    if active_set_size < 0:
        raise DomainError("active set size must be non-negative")
    return min(1.0, active_set_size / 2.0 ** suffix_bits)


def fair_share(C_H, C_A, f=0.0) -> float:
    """Honest bandwidth share when compute buys addresses and routers fair-queue.

    ``f`` is the fraction of honest traffic carried (and dropped) by routers
    colluding with the attacker.
    """
    if C_H < 0 or C_A < 0 or C_H + C_A == 0:
        raise DomainError("compute must be non-negative and not both zero")
    if not 0.0 <= f <= 1.0:
        raise DomainError("f must lie in [0, 1]")
    return C_H * (1.0 - f) / (C_H + C_A)


def attacker_share(C_H, C_A, f=0.0) -> float:
    # defined as the complement so the two shares always sum to exactly 1
    return 1.0 - fair_share(C_H, C_A, f)


def expected_attempts(d) -> float:
    if d < 0:
        raise DomainError("difficulty must be non-negative")
    return (2.0 ** d + 1.0) / 2.0


def gb_per_hour(bps) -> float:
    return bps * SECONDS_PER_HOUR / BITS_PER_GB


@dataclass(frozen=True)
class CostModel:
    price_compute_per_unit_hour: float = 0.05
    price_transfer_per_gb: float = 0.09
    victim_capacity_bps: float = 1e9
    honest_compute_units: float = 1e5
    legit_offered_load_bps: float = 1e9

    def __post_init__(self):
        for name in ("price_compute_per_unit_hour", "price_transfer_per_gb", "victim_capacity_bps",
                     "honest_compute_units", "legit_offered_load_bps"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")


def attack_cost(model: CostModel, x) -> tuple[float, float]:
    """Hourly cost (without, with) of grabbing share ``x`` of the victim link.

    Without the defense the attacker must out-send legitimate load by
    x/(1-x); with it, it must out-compute the honest population by the same
    factor and then only needs to ship its own share.
    """
    if not 0.0 < x < 1.0:
        raise DomainError("desired share must lie in (0, 1)")
    odds = x / (1.0 - x)
    without = model.price_transfer_per_gb * gb_per_hour(odds * model.legit_offered_load_bps)
    with_ = (model.price_compute_per_unit_hour * odds * model.honest_compute_units
             + model.price_transfer_per_gb * gb_per_hour(x * model.victim_capacity_bps))
    return without, with_


DEFAULT_SHARE_GRID = tuple(round(0.01 * k, 2) for k in range(1, 91))


def cost_table(model: CostModel, grid=DEFAULT_SHARE_GRID):
    return [(x, *attack_cost(model, x)) for x in grid]
