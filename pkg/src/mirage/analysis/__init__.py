from .security import (
    DEFAULT_SHARE_GRID,
    CostModel,
    attack_cost,
    attacker_share,
    brute_force_success,
    cost_table,
    expected_attempts,
    fair_share,
    gb_per_hour,
    scan_fraction,
)
from .topology import Link, PushbackReport, TopologyMap, compute_pushback, ingest_topology, parse_topology

__all__ = [
    "DEFAULT_SHARE_GRID", "CostModel", "attack_cost", "attacker_share", "brute_force_success",
    "cost_table", "expected_attempts", "fair_share", "gb_per_hour", "scan_fraction",
    "Link", "PushbackReport", "TopologyMap", "compute_pushback", "ingest_topology", "parse_topology",
]
