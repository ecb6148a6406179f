"""Stage runners and artifact writers behind the CLI."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import stats
from .errors import GFPError
from .graph import DirectedGraph
from .superiority import (
    ALL_TYPES,
    AttributeKind,
    AttributeTable,
    SuperiorityReport,
    all_verdicts,
    report_from_table,
)

log = logging.getLogger(__name__)


class InvariantError(GFPError):
    """An internal accounting identity failed."""


@dataclass(frozen=True)
class Bins:
    histogram: int = 100
    prevalence: int = 50
    percentile: int = 500
    flow: int = 25

    def __post_init__(self):
        for name in ("histogram", "prevalence", "percentile", "flow"):
            if getattr(self, name) < 2:
                raise ValueError(f"{name} bin count must be at least 2")


class Outputs:
    """Tracks files written during a run so a failure can remove them."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.written.append(p)
        return p

    def cleanup(self) -> None:
        for p in reversed(self.written):
            p.unlink(missing_ok=True)
        self.written.clear()


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) if not isinstance(x, str) else x for x in r])


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, indent=1, sort_keys=True)
        fh.write("\n")


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


SUPERIORITY_HEADER = ["aggregate", "direction", "attribute", "defined", "experiencing", "prevalence", "critical_value"]


def superiority_rows(reports: list[SuperiorityReport]) -> list[list[str]]:
    rows = []
    for r in reports:
        t = r.type
        rows.append([t.aggregate.value, t.direction.value, t.attribute.value, str(r.defined),
                     str(r.experiencing), f"{r.prevalence:.4f}", fmt(r.critical_value)])
    return rows


def write_superiority(out: Outputs, reports: list[SuperiorityReport], name: str = "superiority") -> None:
    rows = superiority_rows(reports)
    write_csv(out.path(f"{name}.csv"), SUPERIORITY_HEADER, rows)
    write_json(out.path(f"{name}.json"), [dict(zip(SUPERIORITY_HEADER, row)) for row in rows])


def run_superiority(g: DirectedGraph, table: AttributeTable, out: Outputs, workers: int = 1):
    verd = all_verdicts(g, table, ALL_TYPES, workers)
    reports = [report_from_table(t, verd[t], table) for t in ALL_TYPES]
    for r in reports:
        if not r.experiencing <= r.defined <= g.n:
            raise InvariantError(f"report counts out of range for {r.type.slug}")
    write_superiority(out, reports)
    return reports, verd


def _curve_rows(curve, underflow: bool):
    rows = []
    if underflow:
        rows.append([-1, None, curve.bin_edges[0], curve.underflow_nodes, curve.underflow_population,
                     curve.underflow_experiencing, curve.underflow_proportion])
    for i in range(len(curve.bin_population)):
        rows.append([i, curve.bin_edges[i], curve.bin_edges[i + 1], curve.bin_nodes[i], curve.bin_population[i],
                     curve.bin_experiencing[i], curve.proportion[i]])
    return rows


CURVE_HEADER = ["bin", "lower", "upper", "nodes", "population", "experiencing", "proportion"]


def run_stats(g: DirectedGraph, table: AttributeTable, out: Outputs, bins: Bins = Bins(),
              verd: dict | None = None, workers: int = 1) -> dict:
    """Write every distributional artifact under ``stats/``; returns totals for the manifest."""
    if verd is None:
        verd = all_verdicts(g, table, ALL_TYPES, workers)

    sums = [stats.summary(table.values(k), k) for k in AttributeKind]
    header = ["attribute", "mean"] + [f"p{p}" for p in stats.PERCENTILE_LEVELS]
    rows = [[s.attribute.value, s.mean] + [s.percentiles[p] for p in stats.PERCENTILE_LEVELS] for s in sums]
    write_csv(out.path("stats/summary.csv"), header, rows)
    write_json(out.path("stats/summary.json"), [dict(zip(header, r)) for r in rows])

    if g.n >= 2:
        cm = stats.correlation_matrix(table)
        rows = [[i, j, cm.kinds[i].value, cm.kinds[j].value, cm.matrix[i, j]]
                for i in range(len(cm.kinds)) for j in range(len(cm.kinds))]
        write_csv(out.path("stats/correlation.csv"), ["row", "col", "row_attribute", "col_attribute", "pearson"], rows)
        write_json(out.path("stats/correlation.json"), {
            "kinds": [k.value for k in cm.kinds], "matrix": cm.matrix,
            "degenerate": [k.value for k in cm.degenerate]})

    for k in AttributeKind:
        vals = table.values(k)
        try:
            h = stats.log_histogram(vals, k, bins.histogram)
        except ValueError:
            h = stats.LogHistogram(k, np.empty(0), np.zeros(0, dtype=np.int64), int((vals == 0).sum()))
        if int(h.counts.sum()) + h.zero_count != g.n:
            raise InvariantError(f"histogram of {k.value} loses mass")
        rows = [[-1, 0, 0, h.zero_count]] + [[i, h.bin_edges[i], h.bin_edges[i + 1], c] for i, c in enumerate(h.counts)]
        write_csv(out.path(f"stats/histogram_{k.value}.csv"), ["bin", "lower", "upper", "count"], rows)
        write_json(out.path(f"stats/histogram_{k.value}.json"), {
            "attribute": k.value, "bin_edges": h.bin_edges, "counts": h.counts, "zero_count": h.zero_count})

    for t in ALL_TYPES:
        v = verd[t]
        vals = table.values(t.attribute)
        defined = int((v >= 0).sum())
        pc = stats.prevalence_curve(g, vals, t, bins.prevalence, verdict=v)
        if int(pc.bin_population.sum()) + pc.underflow_population != defined \
                or int(pc.bin_nodes.sum()) + pc.underflow_nodes != g.n:
            raise InvariantError(f"prevalence curve {t.slug} loses mass")
        write_csv(out.path(f"stats/prevalence_{t.slug}.csv"), CURVE_HEADER, _curve_rows(pc, True))
        write_json(out.path(f"stats/prevalence_{t.slug}.json"), {
            "type": t.slug, "bin_edges": pc.bin_edges, "proportion": pc.proportion,
            "population": pc.bin_population, "experiencing": pc.bin_experiencing, "nodes": pc.bin_nodes,
            "underflow": {"nodes": pc.underflow_nodes, "population": pc.underflow_population,
                          "experiencing": pc.underflow_experiencing}})
        rc = stats.percentile_curve(g, vals, t, bins.percentile, verdict=v)
        if int(rc.bin_population.sum()) != defined or int(rc.bin_nodes.sum()) != g.n:
            raise InvariantError(f"percentile curve {t.slug} loses mass")
        write_csv(out.path(f"stats/percentile_{t.slug}.csv"), CURVE_HEADER, _curve_rows(rc, False))
        write_json(out.path(f"stats/percentile_{t.slug}.json"), {
            "type": t.slug, "bin_edges": rc.bin_edges, "proportion": rc.proportion,
            "population": rc.bin_population, "experiencing": rc.bin_experiencing, "nodes": rc.bin_nodes})

    fm = stats.flow_matrix(g, table.exact(AttributeKind.IN_DEGREE), bins.flow)
    if int(fm.counts.sum()) != g.m:
        raise InvariantError("flow matrix loses links")
    occ = fm.column_mass > 0
    if occ.any() and np.abs(fm.B[:, occ].sum(axis=0) - 1.0).max() > 1e-9:
        raise InvariantError("flow matrix column not stochastic")
    nb = bins.flow
    rows = [[i, j, fm.counts[i, j], fm.B[i, j]] for i in range(nb) for j in range(nb)]
    write_csv(out.path("stats/flow_matrix.csv"), ["row", "col", "links", "fraction"], rows)
    write_json(out.path("stats/flow_matrix.json"), {
        "bin_edges_in_degree_plus_one": fm.bin_edges, "counts": fm.counts, "B": fm.B, "column_mass": fm.column_mass})
    return {"nodes": g.n, "links": g.m}
