"""Victim-rooted path map built from capacity probes, and pushback placement."""
from __future__ import annotations

import statistics
from dataclasses import dataclass, field

from ..errors import DomainError, ParseError

HEADER = "#mirage-topo v1"


@dataclass
class Link:
    link_id: str
    hop: int
    as_number: int | None
    capacity_bps: float | None = None  # None = Unknown
    estimates: list = field(default_factory=list)
    invalid: int = 0


@dataclass
class TopologyMap:
    links: dict
    paths: dict  # path_id -> tuple of link ids, source side first
    victim: str = "victim"

    def path_fraction(self, link_id) -> float:
        n = sum(1 for p in self.paths.values() if link_id in p)
        return n / len(self.paths) if self.paths else 0.0

    @classmethod
    def from_paths(cls, paths, capacities, as_numbers=None):
        """Build a map from victim-first link lists: ``{path_id: [L1, L2, ...]}``."""
        links = {}
        ordered = {}
        for pid, seq in paths.items():
            for hop, lid in enumerate(seq, 1):
                if lid in links and links[lid].hop != hop:
                    raise ValueError(f"link {lid} appears at hops {links[lid].hop} and {hop}")
                cap = capacities.get(lid)
                asn = (as_numbers or {}).get(lid)
                links.setdefault(lid, Link(lid, hop, asn, cap, [] if cap is None else [cap]))
            ordered[pid] = tuple(reversed(seq))
        return cls(links, ordered)


@dataclass
class PushbackReport:
    links: frozenset
    weights: dict
    weighted_mean_router_hops: float
    weighted_mean_as_hops: float
    load: dict
    congested: frozenset


def _num(tok, what, lineno):
    if tok == "NA":
        return None
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"{what} {tok!r} is not a number", lineno) from None
    if v < 0:
        raise ParseError(f"{what} must be non-negative", lineno)
    return v


def parse_topology(text: str) -> TopologyMap:
    lines = text.splitlines()
    first = next((i for i, l in enumerate(lines) if l.strip()), None)
    if first is None or lines[first].strip() != HEADER:
        raise ParseError(f"missing header {HEADER!r}", 1 if first is None else first + 1)
    links: dict = {}
    hops: dict = {}  # path -> {hop: link}
    path_line: dict = {}
    for lineno in range(first + 2, len(lines) + 1):
        raw = lines[lineno - 1]
        if not raw.strip() or raw.startswith("#"):
            continue
        cols = raw.rstrip("\r\n").split("\t")
        if len(cols) != 6:
            raise ParseError(f"expected 6 tab-separated fields, got {len(cols)}", lineno)
        pid, hop_s, lid, cap_s, avail_s, as_s = (c.strip() for c in cols)
        if not pid or not lid:
            raise ParseError("empty path or link id", lineno)
        try:
            hop = int(hop_s)
        except ValueError:
            raise ParseError(f"hop index {hop_s!r} is not an integer", lineno) from None
        if hop < 1:
            raise ParseError("hop index must be >= 1", lineno)
        cap = _num(cap_s, "capacity", lineno)
        avail = _num(avail_s, "available bandwidth", lineno)
        if as_s == "NA":
            asn = None
        else:
            try:
                asn = int(as_s)
            except ValueError:
                raise ParseError(f"AS number {as_s!r} is not an integer", lineno) from None

        link = links.get(lid)
        if link is None:
            link = links[lid] = Link(lid, hop, asn)
        elif link.hop != hop:
            raise ParseError(f"link {lid} seen at hop {link.hop} and hop {hop}", lineno)
        elif link.as_number != asn:
            raise ParseError(f"link {lid} has conflicting AS numbers", lineno)
        at = hops.setdefault(pid, {})
        path_line.setdefault(pid, lineno)
        if at.get(hop, lid) != lid:
            raise ParseError(f"path {pid} has two links at hop {hop}", lineno)
        at[hop] = lid
        # capacity below the available-bandwidth bound is a probe error
        if cap is None or (avail is not None and cap < avail):
            link.invalid += 1
        else:
            link.estimates.append(cap)

    for link in links.values():
        link.capacity_bps = statistics.median(link.estimates) if link.estimates else None
    paths = {}
    for pid, at in hops.items():
        h = max(at)
        if sorted(at) != list(range(1, h + 1)):
            raise ParseError(f"path {pid} does not cover hops 1..{h}", path_line[pid])
        paths[pid] = tuple(at[k] for k in range(h, 0, -1))
    return TopologyMap(links, paths)


def ingest_topology(path_file) -> TopologyMap:
    with open(path_file, encoding="utf-8") as fh:
        return parse_topology(fh.read())


def compute_pushback(tmap: TopologyMap, total_attack_bps) -> PushbackReport:
    """Nearest filter placement that relieves every congested link.

    Attack traffic is spread over paths like the probe sources; a link is
    congested when its share exceeds its capacity.  Filtering protects the
    filtering link and everything downstream of it, so each path must be
    filtered at its congested link farthest from the victim.
    """
    if total_attack_bps < 0:
        raise DomainError("attack rate must be non-negative")
    npaths = len(tmap.paths)
    load = {lid: tmap.path_fraction(lid) * total_attack_bps for lid in tmap.links}
    congested = frozenset(
        lid for lid, link in tmap.links.items()
        if link.capacity_bps is not None and load[lid] > link.capacity_bps
    )
    weights: dict = {}
    router = as_hops = 0.0
    for seq in tmap.paths.values():
        victim_first = seq[::-1]
        far = None
        for lid in victim_first:
            if lid in congested:
                far = lid
        if far is None:
            continue
        w = 1.0 / npaths
        h = tmap.links[far].hop
        weights[far] = weights.get(far, 0.0) + w
        router += w * h
        ases = {tmap.links[l].as_number for l in victim_first[:h]} - {None}
        as_hops += w * len(ases)
    return PushbackReport(frozenset(weights), weights, router, as_hops, load, congested)
