"""Neighbour superiority verdicts, critical values and prevalence.

A node experiences mean (median) superiority in a direction when its own
attribute is strictly below the mean (median) of the attribute over its
followers or followees.  All comparisons are exact: attribute arrays are
mapped to integers by a positive scale factor before any arithmetic, so
ties are decided without rounding.
"""

from __future__ import annotations

import enum
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .activity import MICRO, QualityTable
from .graph import DirectedGraph, Direction

UNDEFINED = -1
_INT_LIMIT = 2**62


class Aggregate(enum.Enum):
    MEAN = "mean"
    MEDIAN = "median"


class AttributeKind(enum.Enum):
    IN_DEGREE = "in_degree"
    OUT_DEGREE = "out_degree"
    NT = "NT"
    NOT = "NOT"
    TTR = "TTR"
    NTR = "NTR"
    RPT = "RPT"
    FTR = "FTR"


@dataclass(frozen=True)
class SuperiorityType:
    aggregate: Aggregate
    direction: Direction
    attribute: AttributeKind

    @property
    def slug(self) -> str:
        return f"{self.aggregate.value}_{self.direction.value}_{self.attribute.value}"


#: Canonical order: aggregate, then direction, then attribute.
ALL_TYPES: tuple[SuperiorityType, ...] = tuple(
    SuperiorityType(a, d, k)
    for a, d, k in itertools.product(Aggregate, (Direction.FOLLOWER, Direction.FOLLOWEE), AttributeKind)
)


@dataclass(frozen=True)
class SuperiorityReport:
    type: SuperiorityType | None
    experiencing: int
    defined: int
    prevalence: float
    critical_value: int | float | None


class AttributeTable:
    """The eight per-node attributes as exact integers with a per-kind scale.

    Degrees and counts have scale 1; RPT and FTR are stored in micro-units.
    """

    def __init__(self, columns: Mapping[AttributeKind, np.ndarray], scales: Mapping[AttributeKind, int] | None = None):
        missing = set(AttributeKind) - set(columns)
        if missing:
            raise ValueError(f"missing attribute columns: {sorted(k.value for k in missing)}")
        self._cols = {k: np.asarray(columns[k], dtype=np.int64) for k in AttributeKind}
        lengths = {len(c) for c in self._cols.values()}
        if len(lengths) != 1:
            raise ValueError("attribute columns differ in length")
        self.n = lengths.pop()
        self._scales = {k: 1 for k in AttributeKind}
        self._scales.update(scales or {})

    @classmethod
    def from_graph(cls, g: DirectedGraph, q: QualityTable) -> "AttributeTable":
        if len(q) != g.n:
            raise ValueError(f"quality table covers {len(q)} nodes, graph has {g.n}")
        cols = {
            AttributeKind.IN_DEGREE: g.in_degree,
            AttributeKind.OUT_DEGREE: g.out_degree,
            AttributeKind.NT: q.nt,
            AttributeKind.NOT: q.not_,
            AttributeKind.TTR: q.ttr,
            AttributeKind.NTR: q.ntr,
            AttributeKind.RPT: q.rpt_micro,
            AttributeKind.FTR: q.ftr_micro,
        }
        return cls(cols, {AttributeKind.RPT: MICRO, AttributeKind.FTR: MICRO})

    def exact(self, kind: AttributeKind) -> np.ndarray:
        return self._cols[kind]

    def scale(self, kind: AttributeKind) -> int:
        return self._scales[kind]

    def values(self, kind: AttributeKind) -> np.ndarray:
        """Real-valued attribute (int64 when the scale is 1)."""
        s = self._scales[kind]
        return self._cols[kind] if s == 1 else self._cols[kind] / s

    def real(self, kind: AttributeKind, exact_value: int) -> int | float:
        s = self._scales[kind]
        return int(exact_value) if s == 1 else int(exact_value) / s

    def map_exact(self, fn) -> "AttributeTable":
        """New table with ``fn(exact_column, scale)`` applied to every column."""
        return AttributeTable({k: fn(c, self._scales[k]) for k, c in self._cols.items()}, self._scales)


def exact_integers(values) -> np.ndarray:
    """Scale ``values`` by a power of two into exact integers.

    Integer input is returned as int64.  Float input becomes int64 when the
    scaled magnitudes allow it, else an object array of Python ints.  The map
    is a positive scaling, so order, ties and mean/median comparisons are
    preserved exactly.
    """
    a = np.asarray(values)
    if a.dtype.kind in "iub":
        return a.astype(np.int64, copy=False)
    if a.dtype.kind != "f":
        raise TypeError(f"unsupported attribute dtype {a.dtype}")
    if not np.all(np.isfinite(a)):
        raise ValueError("attribute values must be finite")
    if a.size == 0:
        return a.astype(np.int64)
    if np.all(a == np.trunc(a)) and np.abs(a).max() < 2**53:
        return a.astype(np.int64)
    mant, exp = np.frexp(a)
    m = (mant * 2.0**53).astype(np.int64)
    e = exp.astype(np.int64) - 53
    nz = m != 0
    # drop trailing zero bits so the common shift stays small
    tz = np.zeros_like(m)
    mm = np.abs(m)
    for bit in (32, 16, 8, 4, 2, 1):
        step = nz & ((mm & ((1 << bit) - 1)) == 0)
        mm = np.where(step, mm >> bit, mm)
        tz += np.where(step, bit, 0)
    m = np.where(m < 0, -mm, mm)
    e = e + tz
    shift = e - e[nz].min()
    shift[~nz] = 0
    width = np.where(nz, np.floor(np.log2(np.maximum(mm, 1))).astype(np.int64) + 1, 0) + shift
    if width.max() < 62:
        return np.left_shift(m, shift)
    return np.array([int(x) << int(s) for x, s in zip(m, shift)], dtype=object)


def _widen(arr: np.ndarray, bound: int) -> np.ndarray:
    if arr.dtype != object and bound >= _INT_LIMIT:
        return arr.astype(object)
    return arr


def _max_abs(arr: np.ndarray) -> int:
    if arr.size == 0:
        return 0
    return int(max(abs(int(arr.max())), abs(int(arr.min()))))


def verdicts(g: DirectedGraph, values, aggregate: Aggregate, direction: Direction) -> np.ndarray:
    """Per-node verdict: 1 experiencing, 0 not, -1 (UNDEFINED) for an empty neighbourhood."""
    values = np.asarray(values)
    if len(values) != g.n:
        raise ValueError(f"{len(values)} attribute values for {g.n} nodes")
    ptr, idx = g.adjacency(direction)
    deg = np.diff(ptr)
    out = np.full(g.n, UNDEFINED, dtype=np.int8)
    has = deg > 0
    if not has.any():
        return out
    if aggregate is Aggregate.MEAN:
        ex = exact_integers(values)
        big = _max_abs(ex)
        ex = _widen(ex, big * max(len(idx), 1))
        cs = np.zeros(len(idx) + 1, dtype=ex.dtype)
        np.cumsum(ex[idx], out=cs[1:])
        sums = cs[ptr[1:]] - cs[ptr[:-1]]
        hit = ex * deg < sums
    else:
        uniq, rank = np.unique(values, return_inverse=True)
        rank = rank.ravel().astype(np.int64)
        ex_u = exact_integers(uniq)
        ex_u = _widen(ex_u, 4 * _max_abs(ex_u))
        k = np.int64(len(uniq))
        seg = np.repeat(np.arange(g.n, dtype=np.int64), deg)
        key = seg * k + rank[idx]
        key.sort()
        key %= k
        start = ptr[:-1][has]
        d = deg[has]
        lo = ex_u[key[start + (d - 1) // 2]]
        hi = ex_u[key[start + d // 2]]
        hit = np.zeros(g.n, dtype=bool)
        hit[has] = (2 * ex_u[rank[has]] < lo + hi).astype(bool)
    out[has] = np.asarray(hit, dtype=bool)[has]
    return out


def experiences(g: DirectedGraph, values, x: int, t: SuperiorityType) -> bool | None:
    """Single-node verdict; ``None`` when the neighbourhood is empty."""
    nbrs = g.neighbors(x, t.direction)
    return _node_verdict(np.asarray(values), x, nbrs, t.aggregate)


def _node_verdict(values: np.ndarray, x: int, nbrs: np.ndarray, aggregate: Aggregate) -> bool | None:
    if len(nbrs) == 0:
        return None
    ex = exact_integers(values[np.concatenate([[x], nbrs]).astype(np.int64)])
    own, nb = int(ex[0]), [int(v) for v in ex[1:]]
    L = len(nb)
    if aggregate is Aggregate.MEAN:
        return own * L < sum(nb)
    part = np.partition(np.array(nb, dtype=object if ex.dtype == object else np.int64), [(L - 1) // 2, L // 2])
    return 2 * own < int(part[(L - 1) // 2]) + int(part[L // 2])


def summarize(t: SuperiorityType | None, verdict: np.ndarray, values) -> SuperiorityReport:
    """Counts, prevalence and critical value from a verdict array."""
    values = np.asarray(values)
    exp_mask = verdict == 1
    defined = int((verdict != UNDEFINED).sum())
    experiencing = int(exp_mask.sum())
    critical = values[exp_mask].max().item() if experiencing else None
    prevalence = experiencing / defined if defined else 0.0
    return SuperiorityReport(t, experiencing, defined, prevalence, critical)


def report(g: DirectedGraph, values, t: SuperiorityType) -> SuperiorityReport:
    v = verdicts(g, values, t.aggregate, t.direction)
    return summarize(t, v, values)


def all_verdicts(g: DirectedGraph, table: AttributeTable, types: Sequence[SuperiorityType] = ALL_TYPES,
                 workers: int = 1) -> dict[SuperiorityType, np.ndarray]:
    def one(t: SuperiorityType) -> np.ndarray:
        return verdicts(g, table.exact(t.attribute), t.aggregate, t.direction)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, types))
    else:
        results = [one(t) for t in types]
    return dict(zip(types, results))


def report_from_table(t: SuperiorityType, verdict: np.ndarray, table: AttributeTable) -> SuperiorityReport:
    r = summarize(t, verdict, table.exact(t.attribute))
    if r.critical_value is None:
        return r
    return SuperiorityReport(t, r.experiencing, r.defined, r.prevalence, table.real(t.attribute, r.critical_value))


def full_report(g: DirectedGraph, attrs, workers: int = 1) -> list[SuperiorityReport]:
    """All 32 reports in canonical order.

    ``attrs`` is an :class:`AttributeTable` or a mapping from every
    :class:`AttributeKind` to a per-node array.
    """
    if not isinstance(attrs, AttributeTable):
        return [report(g, attrs[t.attribute], t) for t in ALL_TYPES]
    verd = all_verdicts(g, attrs, ALL_TYPES, workers)
    return [report_from_table(t, verd[t], attrs) for t in ALL_TYPES]


def _undirected_graph(adjacency) -> DirectedGraph:
    items = adjacency.items() if isinstance(adjacency, Mapping) else enumerate(adjacency)
    src, dst = [], []
    n = 0
    for x, nbrs in items:
        n = max(n, int(x) + 1)
        for y in nbrs:
            src.append(int(x))
            dst.append(int(y))
            n = max(n, int(y) + 1)
    g = DirectedGraph.from_edges(n, src + dst, dst + src)
    return g


def experiences_undirected(adjacency, values, x: int, aggregate: Aggregate) -> bool | None:
    """Verdict against the plain neighbour set of an undirected graph.

    ``adjacency`` is a sequence (or mapping) from node to its neighbours.
    """
    nbrs = adjacency[x]
    nbrs = np.unique(np.asarray(list(nbrs), dtype=np.int64))
    nbrs = nbrs[nbrs != x]
    return _node_verdict(np.asarray(values), x, nbrs, aggregate)


def report_undirected(adjacency, values, aggregate: Aggregate) -> SuperiorityReport:
    g = _undirected_graph(adjacency)
    values = np.asarray(values)
    if len(values) != g.n:
        raise ValueError(f"{len(values)} attribute values for {g.n} nodes")
    v = verdicts(g, values, aggregate, Direction.FOLLOWEE)
    return summarize(None, v, values)


def undirected_degrees(adjacency) -> np.ndarray:
    return _undirected_graph(adjacency).out_degree


def iter_types(aggregates: Iterable[Aggregate] = Aggregate, directions: Iterable[Direction] = Direction,
               kinds: Iterable[AttributeKind] = AttributeKind) -> list[SuperiorityType]:
    return [SuperiorityType(a, d, k) for a, d, k in itertools.product(aggregates, directions, kinds)]
