"""Run reports and their CSV / JSON serializations."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .. import __version__

CSV_COLUMNS = ("time_s", "entity_id", "metric", "value")


def fmt(v) -> str:
    # repr of a float is locale-independent and round-trips exactly
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


@dataclass
class RunReport:
    config: dict
    seed: int
    records: list = field(default_factory=list)  # (time_s, entity_id, metric, value)
    summary: dict = field(default_factory=dict)
    version: str = __version__

    def add(self, time_s, entity_id, metric, value):
        self.records.append((time_s, entity_id, metric, value))

    def series(self, entity_id=None, metric=None):
        return [r for r in self.records
                if (entity_id is None or r[1] == entity_id) and (metric is None or r[2] == metric)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for t, ent, metric, value in self.records:
            w.writerow((fmt(t), ent, metric, fmt(value)))
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "tool": "mirage",
            "version": self.version,
            "seed": self.seed,
            "effective_config": self.config,
            "summary": self.summary,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def parse_csv(text: str) -> list:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError("missing CSV header")
    return [(float(t), ent, metric, float(v)) for t, ent, metric, v in rows[1:]]


def share_from_records(records, entities, metric, start, end, bin_s=1.0):
    """Fraction of `metric` in [start, end) carried by `entities` (recomputes summaries)."""
    mine = total = 0.0
    for t, ent, m, v in records:
        if m != metric or not (start <= t and t + bin_s <= end + 1e-9):
            continue
        total += v
        if ent in entities:
            mine += v
    return mine / total if total else 0.0
