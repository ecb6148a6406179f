"""Distributional reports: summary percentiles, log histograms, correlations,
prevalence curves over attribute value and percentile rank, and the
in-degree flow matrix between followers and followees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import DirectedGraph
from .superiority import UNDEFINED, AttributeKind, AttributeTable, SuperiorityType, verdicts

PERCENTILE_LEVELS = (50, 75, 90, 95, 99, 100)


@dataclass(frozen=True)
class SummaryStats:
    attribute: AttributeKind | None
    mean: float
    percentiles: dict[int, float]


@dataclass(frozen=True)
class LogHistogram:
    attribute: AttributeKind | None
    bin_edges: np.ndarray
    counts: np.ndarray
    zero_count: int


@dataclass(frozen=True)
class PrevalenceCurve:
    """Fraction of defined nodes experiencing ``type`` per attribute bin.

    ``proportion[i]`` is ``None`` for bins without defined nodes.  Nodes below
    the first edge (zeros on the log grid) are accounted in the underflow
    fields rather than in any bin.
    """

    type: SuperiorityType | None
    bin_edges: np.ndarray
    proportion: list[float | None]
    bin_population: np.ndarray
    bin_experiencing: np.ndarray
    bin_nodes: np.ndarray
    underflow_population: int = 0
    underflow_experiencing: int = 0
    underflow_nodes: int = 0

    @property
    def underflow_proportion(self) -> float | None:
        if self.underflow_population == 0:
            return None
        return self.underflow_experiencing / self.underflow_population


@dataclass(frozen=True)
class PercentileCurve:
    type: SuperiorityType | None
    bin_edges: np.ndarray
    proportion: list[float | None]
    bin_population: np.ndarray
    bin_experiencing: np.ndarray
    bin_nodes: np.ndarray


@dataclass(frozen=True)
class FlowMatrix:
    """Link counts between in-degree bins; column = source bin, row = destination bin.

    Bins are log-spaced over ``in_degree + 1``; ``bin_edges`` are on that
    shifted scale.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    B: np.ndarray
    column_mass: np.ndarray


@dataclass(frozen=True)
class CorrelationMatrix:
    kinds: tuple[AttributeKind, ...]
    matrix: np.ndarray
    degenerate: tuple[AttributeKind, ...] = field(default_factory=tuple)


def summary(values, kind: AttributeKind | None = None) -> SummaryStats:
    """Mean and lower empirical percentiles.

    Percentile p is the smallest value v with ``#{a <= v} / N >= p / 100``.
    """
    a = np.asarray(values)
    n = len(a)
    if n == 0:
        raise ValueError("summary of an empty population")
    if a.dtype.kind in "iu":
        mean = int(a.sum(dtype=np.int64)) / n
    else:
        mean = math.fsum(a.tolist()) / n
    ranks = sorted({max((p * n + 99) // 100, 1) - 1 for p in PERCENTILE_LEVELS})
    part = np.partition(a, ranks)
    pct = {p: part[max((p * n + 99) // 100, 1) - 1].item() for p in PERCENTILE_LEVELS}
    return SummaryStats(kind, mean, pct)


def log_edges(lo: float, hi: float, nbins: int) -> np.ndarray:
    """``nbins + 1`` geometric edges from ``lo`` to ``hi`` inclusive.

    A degenerate range (lo == hi) is widened by one decade above.
    """
    if nbins < 1:
        raise ValueError("need at least one bin")
    if lo <= 0:
        raise ValueError("log grid needs a positive lower edge")
    if hi <= lo:
        hi = lo * 10.0
    edges = np.geomspace(lo, hi, nbins + 1)
    edges[0], edges[-1] = lo, hi
    return edges


def assign_bins(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Half-open bins ``[e_i, e_{i+1})`` with the last bin closed.

    Values below ``edges[0]`` get -1; values above ``edges[-1]`` go to the
    last bin.
    """
    nb = len(edges) - 1
    b = np.searchsorted(edges, values, side="right") - 1
    b = np.minimum(b, nb - 1)
    b[np.asarray(values) < edges[0]] = -1
    return b.astype(np.int64)


def log_histogram(values, kind: AttributeKind | None = None, nbins: int = 100) -> LogHistogram:
    a = np.asarray(values, dtype=float)
    pos = a[a > 0]
    if len(pos) == 0:
        raise ValueError("log histogram needs at least one positive value")
    if np.any(a < 0):
        raise ValueError("log histogram needs non-negative values")
    edges = log_edges(float(pos.min()), float(pos.max()), nbins)
    b = assign_bins(pos, edges)
    counts = np.bincount(b, minlength=nbins).astype(np.int64)
    return LogHistogram(kind, edges, counts, int((a == 0).sum()))


def correlation_matrix(attrs) -> CorrelationMatrix:
    """Pearson correlations between the eight attributes.

    ``attrs`` is an :class:`AttributeTable` or a mapping kind -> array.
    Zero-variance attributes get 0 off the diagonal and are listed in
    ``degenerate``.
    """
    kinds = tuple(AttributeKind)
    get = attrs.values if isinstance(attrs, AttributeTable) else attrs.__getitem__
    X = np.vstack([np.asarray(get(k), dtype=float) for k in kinds])
    n = X.shape[1]
    if n < 2:
        raise ValueError("correlation needs at least two nodes")
    Xc = X - X.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.einsum("ij,ij->i", Xc, Xc))
    flat = norms == 0
    # constant columns can leave rounding residue after centring
    flat |= np.ptp(X, axis=1) == 0
    if flat.all():
        raise ValueError("every attribute has zero variance")
    safe = np.where(flat, 1.0, norms)
    Z = Xc / safe[:, None]
    R = np.clip(Z @ Z.T, -1.0, 1.0)
    R[flat, :] = 0.0
    R[:, flat] = 0.0
    np.fill_diagonal(R, 1.0)
    R = (R + R.T) / 2
    return CorrelationMatrix(kinds, R, tuple(k for k, f in zip(kinds, flat) if f))


def _binned_counts(bins: np.ndarray, verdict: np.ndarray, nbins: int):
    inside = bins >= 0
    defined = verdict != UNDEFINED
    nodes = np.bincount(bins[inside], minlength=nbins).astype(np.int64)
    pop = np.bincount(bins[inside & defined], minlength=nbins).astype(np.int64)
    exp = np.bincount(bins[inside & (verdict == 1)], minlength=nbins).astype(np.int64)
    prop = [int(e) / int(p) if p else None for e, p in zip(exp, pop)]
    return nodes, pop, exp, prop


def prevalence_curve(g: DirectedGraph, values, t: SuperiorityType, nbins: int = 50, *,
                     verdict: np.ndarray | None = None, edges: np.ndarray | None = None) -> PrevalenceCurve:
    """Proportion experiencing ``t`` across log-spaced attribute bins.

    The grid spans the positive attribute range unless ``edges`` is given.
    Nodes below the first edge land in the underflow counts; nodes with an
    empty neighbourhood count toward ``bin_nodes`` only.
    """
    a = np.asarray(values)
    if verdict is None:
        verdict = verdicts(g, a, t.aggregate, t.direction)
    if edges is None:
        pos = a[a > 0]
        if len(pos):
            edges = log_edges(float(pos.min()), float(pos.max()), nbins)
        else:
            edges = log_edges(1.0, 10.0, nbins)
    edges = np.asarray(edges, dtype=float)
    nb = len(edges) - 1
    bins = assign_bins(a.astype(float), edges)
    nodes, pop, exp, prop = _binned_counts(bins, verdict, nb)
    under = bins < 0
    defined = verdict != UNDEFINED
    return PrevalenceCurve(
        t, edges, prop, pop, exp, nodes,
        underflow_population=int((under & defined).sum()),
        underflow_experiencing=int((under & (verdict == 1)).sum()),
        underflow_nodes=int(under.sum()),
    )


def percentile_ranks(values) -> tuple[np.ndarray, int]:
    """``#{u : a_u <= a_x}`` per node, and the population size."""
    a = np.asarray(values)
    s = np.sort(a)
    return np.searchsorted(s, a, side="right").astype(np.int64), len(a)


def percentile_curve(g: DirectedGraph, values, t: SuperiorityType, nbins: int = 500, *,
                     verdict: np.ndarray | None = None) -> PercentileCurve:
    """Proportion experiencing ``t`` across equal-width percentile-rank bins.

    Bins cover [lowest rank, 1]; binning uses integer rank counts so it is
    exact and invariant under increasing transforms of the attribute.
    """
    a = np.asarray(values)
    if verdict is None:
        verdict = verdicts(g, a, t.aggregate, t.direction)
    counts, n = percentile_ranks(a)
    c0 = int(counts.min()) if n else 0
    if c0 >= n:
        c0 = 0
    span = n - c0
    bins = np.minimum((counts - c0) * nbins // span, nbins - 1) if n else counts
    edges = (c0 + np.arange(nbins + 1) * span / nbins) / max(n, 1)
    edges[-1] = 1.0
    nodes, pop, exp, prop = _binned_counts(bins.astype(np.int64), verdict, nbins)
    return PercentileCurve(t, edges, prop, pop, exp, nodes)


def flow_matrix(g: DirectedGraph, in_degrees=None, nbins: int = 25) -> FlowMatrix:
    """Follow-link mass between log-spaced in-degree bins.

    Every node is binned by ``in_degree + 1``.  ``counts[i, j]`` is the number
    of links from a node in bin j to a node in bin i; ``B`` normalises each
    non-empty column to 1.
    """
    if g.n == 0:
        raise ValueError("flow matrix of an empty graph")
    k = np.asarray(g.in_degree if in_degrees is None else in_degrees, dtype=float) + 1.0
    edges = log_edges(float(k.min()), float(k.max()), nbins)
    b = assign_bins(k, edges)
    src, dst = g.edges()
    flat = b[dst] * nbins + b[src]
    counts = np.bincount(flat, minlength=nbins * nbins).astype(np.int64).reshape(nbins, nbins)
    mass = counts.sum(axis=0)
    B = np.zeros((nbins, nbins))
    occ = mass > 0
    B[:, occ] = counts[:, occ] / mass[occ]
    return FlowMatrix(edges, counts, B, mass)
