"""Synthetic graphs and attributes, plus the brute-force superiority oracle.

The oracle deliberately shares no arithmetic with :mod:`gfp.superiority`:
it walks every neighbourhood in Python and compares exact rationals.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.stats import rankdata

from .activity import QualityTable
from .errors import FeasibilityError, RankCouplingError
from .graph import DirectedGraph, Direction
from .superiority import Aggregate, SuperiorityReport, SuperiorityType

log = logging.getLogger(__name__)

ORACLE_MAX_NODES = 10_000
RHO_TOLERANCE = 0.05


class GraphKind(enum.Enum):
    STAR = "star"
    RING = "ring"
    PREF_ATTACH = "prefattach"
    CONFIG_MODEL = "config"


@dataclass(frozen=True)
class GenSpec:
    kind: GraphKind
    n: int
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.kind is GraphKind.PREF_ATTACH and self.params.get("m", 1) < 1:
            raise ValueError("m must be positive")
        if self.kind is GraphKind.RING and self.params.get("k", 1) < 1:
            raise ValueError("k must be positive")


class Distribution(enum.Enum):
    CONSTANT = "constant"
    UNIFORM = "uniform"
    PARETO = "pareto"


@dataclass(frozen=True)
class AttrSpec:
    distribution: Distribution
    rho: float = 0.0
    seed: int = 0
    alpha: float = 2.5
    value: float = 1.0
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [-1, 1]")
        if self.distribution is Distribution.PARETO and self.alpha <= 0:
            raise ValueError("Pareto alpha must be positive")


def generate(spec: GenSpec) -> DirectedGraph:
    if spec.kind is GraphKind.STAR:
        return star(spec.n)
    if spec.kind is GraphKind.RING:
        return ring(spec.n, spec.params.get("k", 1))
    if spec.kind is GraphKind.PREF_ATTACH:
        return pref_attach(spec.n, spec.params.get("m", 3), spec.seed)
    p = spec.params
    if "in_degrees" in p:
        return config_model(p["in_degrees"], p["out_degrees"], spec.seed, p.get("max_rounds", 200))
    ind, outd = heavy_tailed_degrees(spec.n, p.get("m_edges", 10 * spec.n), p.get("alpha", 2.5), spec.seed)
    return config_model(ind, outd, spec.seed, p.get("max_rounds", 200))


def star(n: int) -> DirectedGraph:
    """Node 0 is the hub; every other node follows it."""
    leaves = np.arange(1, n, dtype=np.int64)
    return DirectedGraph.from_edges(n, leaves, np.zeros_like(leaves))


def ring(n: int, k: int = 1) -> DirectedGraph:
    """Node i follows i+1, ..., i+k (mod n)."""
    if k >= n:
        raise FeasibilityError(f"ring with k={k} needs more than {n} nodes")
    src = np.repeat(np.arange(n, dtype=np.int64), k)
    dst = (src + np.tile(np.arange(1, k + 1), n)) % n
    return DirectedGraph.from_edges(n, src, dst)


def pref_attach(n: int, m: int, seed: int) -> DirectedGraph:
    """Growth model: each arriving node follows m distinct earlier nodes.

    Targets are drawn with probability proportional to in-degree + 1.  The
    first m nodes form the seed and carry no edges among themselves, so the
    graph has exactly (n - m) * m edges.
    """
    if n <= m:
        raise FeasibilityError(f"preferential attachment needs n > m (n={n}, m={m})")
    rng = np.random.default_rng(seed)
    # each node appears once for the +1 and once per follower received
    pool = np.empty(n + (n - m) * m, dtype=np.int64)
    pool[:m] = np.arange(m)
    size = m
    src = np.empty((n - m) * m, dtype=np.int64)
    dst = np.empty_like(src)
    e = 0
    buf = rng.random(4096)
    bi = 0
    for v in range(m, n):
        chosen: list[int] = []
        while len(chosen) < m:
            if bi == len(buf):
                buf = rng.random(4096)
                bi = 0
            t = int(pool[int(buf[bi] * size)])
            bi += 1
            if t not in chosen:
                chosen.append(t)
        for t in chosen:
            src[e] = v
            dst[e] = t
            e += 1
        pool[size:size + m] = chosen
        size += m
        pool[size] = v
        size += 1
    return DirectedGraph.from_edges(n, src, dst)


def heavy_tailed_degrees(n: int, m_edges: int, alpha: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """In- and out-degree sequences with exactly ``m_edges`` stubs each.

    Stubs are allocated multinomially with Pareto(alpha) propensities; no
    degree exceeds n - 1.
    """
    if m_edges > n * (n - 1):
        raise FeasibilityError("more edges than a simple digraph on n nodes can hold")
    rng = np.random.default_rng(seed)
    seqs = []
    for _ in range(2):
        w = rng.pareto(alpha, n) + 1.0
        deg = rng.multinomial(m_edges, w / w.sum())
        over = deg > n - 1
        while over.any():
            excess = int((deg[over] - (n - 1)).sum())
            deg[over] = n - 1
            room = np.flatnonzero(deg < n - 1)
            extra = rng.multinomial(excess, np.full(len(room), 1.0 / len(room)))
            deg[room] += extra
            over = deg > n - 1
        seqs.append(deg.astype(np.int64))
    return seqs[0], seqs[1]


def config_model(in_degrees, out_degrees, seed: int, max_rounds: int = 200) -> DirectedGraph:
    """Directed stub matching with self-loops and multi-edges repaired by re-draw.

    Offending pairs swap their followee stub with a random pair until the
    graph is simple; gives up after ``max_rounds`` rounds.
    """
    ind = np.asarray(in_degrees, dtype=np.int64)
    outd = np.asarray(out_degrees, dtype=np.int64)
    n = len(ind)
    if len(outd) != n:
        raise FeasibilityError("degree sequences differ in length")
    if ind.sum() != outd.sum():
        raise FeasibilityError(f"in-degree sum {ind.sum()} != out-degree sum {outd.sum()}")
    if (ind < 0).any() or (outd < 0).any() or (ind > n - 1).any() or (outd > n - 1).any():
        raise FeasibilityError("degrees must lie in [0, n-1]")
    rng = np.random.default_rng(seed)
    src = np.repeat(np.arange(n, dtype=np.int64), outd)
    dst = rng.permutation(np.repeat(np.arange(n, dtype=np.int64), ind))
    m = len(src)
    for _ in range(max_rounds):
        bad = _bad_pairs(src, dst, n)
        if len(bad) == 0:
            return DirectedGraph.from_edges(n, src, dst)
        partner = rng.integers(0, m, size=len(bad))
        # sequential swaps keep the multiset of followee stubs intact
        for i, j in zip(bad.tolist(), partner.tolist()):
            dst[i], dst[j] = dst[j], dst[i]
    raise FeasibilityError(f"stub matching still has {len(_bad_pairs(src, dst, n))} bad pairs after {max_rounds} rounds")


def _bad_pairs(src: np.ndarray, dst: np.ndarray, n: int) -> np.ndarray:
    key = src * np.int64(n) + dst
    order = np.argsort(key, kind="stable")
    ks = key[order]
    dup = np.zeros(len(key), dtype=bool)
    dup[order[1:][ks[1:] == ks[:-1]]] = True
    return np.flatnonzero(dup | (src == dst))


def _draw(spec: AttrSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    if spec.distribution is Distribution.CONSTANT:
        return np.full(n, spec.value, dtype=float)
    if spec.distribution is Distribution.UNIFORM:
        return rng.uniform(spec.low, spec.high, n)
    return rng.pareto(spec.alpha, n) + 1.0


def rank_correlation(a, b) -> float | None:
    """Spearman correlation (average ranks); ``None`` if either side is constant."""
    ra, rb = rankdata(a), rankdata(b)
    if np.ptp(ra) == 0 or np.ptp(rb) == 0:
        return None
    return float(np.corrcoef(ra, rb)[0, 1])


def assign_attributes(g: DirectedGraph, spec: AttrSpec) -> np.ndarray:
    """Draw i.i.d. values and arrange them so their rank correlation with in-degree is near ``spec.rho``.

    Values are first laid out in in-degree order (reversed for negative rho),
    then a random subset of positions is shuffled among itself; the subset
    size is found by bisection so the measured Spearman correlation lands
    within 0.05 of rho.
    """
    if g.n == 0:
        raise ValueError("cannot assign attributes on an empty graph")
    rng = np.random.default_rng(spec.seed)
    vals = _draw(spec, g.n, rng)
    if spec.distribution is Distribution.CONSTANT:
        return vals
    kin = g.in_degree
    if spec.rho == 0:
        for _ in range(64):
            out = rng.permutation(vals)
            r = rank_correlation(out, kin)
            if r is None or abs(r) <= RHO_TOLERANCE:
                return out
        raise RankCouplingError(f"no random permutation within {RHO_TOLERANCE} of rho=0 (last {r:.3f})")
    if np.ptp(kin) == 0:
        raise RankCouplingError("in-degree is constant; rank correlation is undefined")

    node_order = np.lexsort((rng.random(g.n), kin))
    sorted_vals = np.sort(vals)
    if spec.rho < 0:
        sorted_vals = sorted_vals[::-1]
    aligned = np.empty_like(vals)
    aligned[node_order] = sorted_vals
    target = abs(spec.rho)
    perm = rng.permutation(g.n)
    shuffle_src = rng.permutation(g.n)

    def layout(frac: float) -> np.ndarray:
        k = int(round(frac * g.n))
        pos = perm[:k]
        out = aligned.copy()
        out[pos] = aligned[pos[np.argsort(shuffle_src[:k])]]
        return out

    def measured(frac: float) -> float:
        r = rank_correlation(layout(frac), kin)
        return 0.0 if r is None else abs(r)

    # ties in in-degree cap the attainable correlation below 1; the aligned
    # layout is the ceiling, so targets above it resolve to full alignment
    ceiling = measured(0.0)
    if target >= ceiling:
        return aligned
    lo, hi = 0.0, 1.0
    best, best_err = 0.0, ceiling - target
    for _ in range(40):
        mid = (lo + hi) / 2
        r = measured(mid)
        if abs(r - target) < best_err:
            best, best_err = mid, abs(r - target)
        if best_err <= RHO_TOLERANCE / 4:
            break
        if r > target:
            lo = mid
        else:
            hi = mid
    if best_err > RHO_TOLERANCE:
        raise RankCouplingError(f"closest rank correlation misses rho={spec.rho} by {best_err:.3f}")
    return layout(best)


def synth_qualities(g: DirectedGraph, seed: int, rho: float = 0.0, alpha: float = 2.5) -> QualityTable:
    """A consistent quality table for fixtures without an activity log.

    NOT follows a discretised Pareto coupled to in-degree at ``rho``; the
    other counts are drawn so every quality invariant holds.
    """
    rng = np.random.default_rng(seed + 1)
    spec = AttrSpec(Distribution.PARETO, rho=rho, seed=seed, alpha=alpha)
    try:
        base = assign_attributes(g, spec)
    except RankCouplingError:
        if rho != 0:
            raise
        # small graphs cannot always land inside the tolerance; an
        # uncoupled draw is the honest reading of rho = 0
        log.warning("rank tolerance unattainable on %d nodes; using an uncoupled draw", g.n)
        base = _draw(spec, g.n, np.random.default_rng(seed))
    not_ = np.floor(base).astype(np.int64) - 1
    nt = not_ + rng.poisson(np.maximum(not_, 0) * 0.1)
    ntr = rng.binomial(np.maximum(not_, 0), 0.2)
    ttr = ntr + rng.poisson(ntr * 2.0)
    return QualityTable.from_counts(nt, not_, ttr, ntr)


def _oracle_verdict(own, nbr_vals: list, aggregate: Aggregate) -> bool | None:
    if not nbr_vals:
        return None
    L = len(nbr_vals)
    if aggregate is Aggregate.MEAN:
        return own * L < sum(nbr_vals)
    vals = sorted(nbr_vals)
    if L % 2:
        return own < vals[L // 2]
    return 2 * own < vals[L // 2 - 1] + vals[L // 2]


def _rational(v) -> int | Fraction:
    # plain ints keep the arithmetic exact and much cheaper than Fraction
    f = Fraction(v)
    return f.numerator if f.denominator == 1 else f


def oracle_verdicts(g: DirectedGraph, values, t: SuperiorityType, nodes=None) -> list[bool | None]:
    """Per-node verdicts by brute force: materialise every neighbourhood and compare rationals.

    ``nodes`` restricts the check to a sample (neighbourhoods stay complete).
    """
    nodes = range(g.n) if nodes is None else [int(x) for x in nodes]
    if len(nodes) > ORACLE_MAX_NODES:
        raise ValueError(f"oracle is limited to {ORACLE_MAX_NODES} nodes")
    raw = np.asarray(values).tolist()
    exact = [_rational(v) for v in raw] if len(nodes) == g.n else None
    out = []
    for x in nodes:
        if t.direction is Direction.FOLLOWER:
            nbrs = g.followers(x).tolist()
        else:
            nbrs = g.followees(x).tolist()
        if exact is None:
            own, ys = _rational(raw[x]), [_rational(raw[y]) for y in nbrs]
        else:
            own, ys = exact[x], [exact[y] for y in nbrs]
        out.append(_oracle_verdict(own, ys, t.aggregate))
    return out


def oracle_report(g: DirectedGraph, values, t: SuperiorityType) -> SuperiorityReport:
    raw = list(np.asarray(values).tolist())
    verdict = oracle_verdicts(g, values, t)
    defined = sum(v is not None for v in verdict)
    hits = [raw[x] for x, v in enumerate(verdict) if v]
    critical = max(hits, key=Fraction) if hits else None
    prevalence = len(hits) / defined if defined else 0.0
    return SuperiorityReport(t, len(hits), defined, prevalence, critical)


def oracle_undirected(adjacency, values, aggregate: Aggregate) -> list[bool | None]:
    raw = np.asarray(values).tolist()
    exact = [_rational(v) for v in raw]
    items = adjacency.items() if isinstance(adjacency, dict) else enumerate(adjacency)
    nb: dict[int, set[int]] = {}
    for x, ys in items:
        for y in ys:
            if x != y:
                nb.setdefault(int(x), set()).add(int(y))
                nb.setdefault(int(y), set()).add(int(x))
    return [_oracle_verdict(exact[x], [exact[y] for y in nb.get(x, ())], aggregate) for x in range(len(raw))]
