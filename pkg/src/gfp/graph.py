"""Immutable directed follow graph over dense node indices.

Edges are stored twice in compressed sparse row form: once keyed by the
follower (its followees, out-neighbours) and once keyed by the followee
(its followers, in-neighbours).  Both neighbour lists are sorted.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import EmptyGraphError, ParseError

log = logging.getLogger(__name__)


class Direction(enum.Enum):
    FOLLOWER = "follower"
    FOLLOWEE = "followee"


@dataclass(frozen=True)
class BuildStats:
    input_edges: int
    kept: int
    duplicates: int
    self_loops: int
    restricted_out: int
    isolated: int = 0


class IdMap:
    """Bijection between external user ids and dense node indices.

    Node indices follow ascending external id, so the mapping is a sorted
    array plus binary search; ``forward`` materialises a dict on demand.
    """

    def __init__(self, ext_ids: Iterable[int]):
        arr = np.asarray(list(ext_ids) if not isinstance(ext_ids, np.ndarray) else ext_ids, dtype=np.int64)
        uniq = np.unique(arr)
        if len(uniq) != len(arr) or (len(arr) and not np.all(arr[:-1] < arr[1:])):
            raise ValueError("external ids must be unique and ascending")
        self.reverse = arr
        self.reverse.setflags(write=False)
        self._forward: dict[int, int] | None = None

    def __len__(self) -> int:
        return len(self.reverse)

    def __contains__(self, ext: int) -> bool:
        i = np.searchsorted(self.reverse, ext)
        return bool(i < len(self.reverse) and self.reverse[i] == ext)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, IdMap) and np.array_equal(self.reverse, other.reverse)

    @property
    def forward(self) -> dict[int, int]:
        if self._forward is None:
            self._forward = {int(e): i for i, e in enumerate(self.reverse)}
        return self._forward

    def node(self, ext: int) -> int:
        i = int(np.searchsorted(self.reverse, ext))
        if i >= len(self.reverse) or self.reverse[i] != ext:
            raise KeyError(ext)
        return i

    def ext(self, node: int) -> int:
        return int(self.reverse[node])

    def lookup(self, ext_ids: np.ndarray) -> np.ndarray:
        """Vectorised ``node``; unknown ids map to -1."""
        ext_ids = np.asarray(ext_ids, dtype=np.int64)
        if len(self.reverse) == 0:
            return np.full(ext_ids.shape, -1, dtype=np.int64)
        pos = np.searchsorted(self.reverse, ext_ids)
        pos_c = np.minimum(pos, len(self.reverse) - 1)
        hit = self.reverse[pos_c] == ext_ids
        return np.where(hit, pos_c, -1).astype(np.int64)


def _csr(n: int, keys: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((vals, keys))
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(keys, minlength=n), out=ptr[1:])
    idx = np.ascontiguousarray(vals[order], dtype=np.int64)
    return ptr, idx


class DirectedGraph:
    """Follower/followee adjacency; ``A follows B`` puts B in A's followees."""

    def __init__(self, n: int, out_ptr, out_idx, in_ptr, in_idx):
        self.n = int(n)
        self.out_ptr = out_ptr
        self.out_idx = out_idx
        self.in_ptr = in_ptr
        self.in_idx = in_idx
        for a in (out_ptr, out_idx, in_ptr, in_idx):
            a.setflags(write=False)
        self.build_stats: BuildStats | None = None

    @classmethod
    def from_edges(cls, n: int, src, dst) -> "DirectedGraph":
        """Build from index-level edge arrays.

        Self-loops are dropped and duplicates collapsed.
        """
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise ValueError("src and dst differ in length")
        if len(src) and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise IndexError("edge endpoint outside [0, n)")
        keep = src != dst
        src, dst = src[keep], dst[keep]
        if len(src):
            key = np.unique(src * np.int64(max(n, 1)) + dst)
            src, dst = np.divmod(key, np.int64(max(n, 1)))
        out_ptr, out_idx = _csr(n, src, dst)
        in_ptr, in_idx = _csr(n, dst, src)
        return cls(n, out_ptr, out_idx, in_ptr, in_idx)

    @property
    def m(self) -> int:
        return len(self.out_idx)

    @property
    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_ptr)

    @property
    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    def adjacency(self, direction: Direction) -> tuple[np.ndarray, np.ndarray]:
        if direction is Direction.FOLLOWER:
            return self.in_ptr, self.in_idx
        return self.out_ptr, self.out_idx

    def degree(self, direction: Direction) -> np.ndarray:
        return np.diff(self.adjacency(direction)[0])

    def neighbors(self, x: int, direction: Direction) -> np.ndarray:
        if not 0 <= x < self.n:
            raise IndexError(f"node {x} outside graph of {self.n} nodes")
        ptr, idx = self.adjacency(direction)
        return idx[ptr[x]:ptr[x + 1]]

    def followers(self, x: int) -> np.ndarray:
        return self.neighbors(x, Direction.FOLLOWER)

    def followees(self, x: int) -> np.ndarray:
        return self.neighbors(x, Direction.FOLLOWEE)

    def has_edge(self, a: int, b: int) -> bool:
        row = self.followees(a)
        i = np.searchsorted(row, b)
        return bool(i < len(row) and row[i] == b)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """(follower, followee) index arrays ordered by follower then followee."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.out_degree)
        return src, self.out_idx.copy()

    def subgraph(self, nodes) -> "DirectedGraph":
        """Induced subgraph; node i of the result is ``sorted(nodes)[i]``."""
        nodes = np.unique(np.asarray(nodes, dtype=np.int64))
        remap = np.full(self.n, -1, dtype=np.int64)
        remap[nodes] = np.arange(len(nodes))
        src, dst = self.edges()
        s, d = remap[src], remap[dst]
        keep = (s >= 0) & (d >= 0)
        return DirectedGraph.from_edges(len(nodes), s[keep], d[keep])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return self.n == other.n and all(
            np.array_equal(a, b)
            for a, b in ((self.out_ptr, other.out_ptr), (self.out_idx, other.out_idx),
                         (self.in_ptr, other.in_ptr), (self.in_idx, other.in_idx))
        )

    def __repr__(self) -> str:
        return f"DirectedGraph(n={self.n}, m={self.m})"


def build_graph(edges, restrict_to=None) -> tuple[DirectedGraph, IdMap]:
    """Build a graph from ``(follower_id, followee_id)`` pairs of external ids.

    Duplicates collapse, self-loops are dropped with a warning, and when
    ``restrict_to`` is given only edges with both endpoints inside it survive.
    Ids listed in ``restrict_to`` stay in the graph even without edges.
    """
    arr = _edge_array(edges)
    total = len(arr)
    src, dst = arr[:, 0], arr[:, 1]

    loops = src == dst
    n_loops = int(loops.sum())
    if n_loops:
        warnings.warn(f"dropped {n_loops} self-loop edge(s)", stacklevel=2)
        src, dst = src[~loops], dst[~loops]

    keep_ids = None
    n_restricted = 0
    if restrict_to is not None:
        keep_ids = np.unique(np.fromiter((int(v) for v in restrict_to), dtype=np.int64)) \
            if not isinstance(restrict_to, np.ndarray) else np.unique(restrict_to.astype(np.int64))
        inside = np.isin(src, keep_ids) & np.isin(dst, keep_ids)
        n_restricted = int((~inside).sum())
        src, dst = src[inside], dst[inside]

    if len(src) == 0:
        raise EmptyGraphError("no edges survive ingestion")

    node_ids = keep_ids if keep_ids is not None else np.unique(np.concatenate([src, dst]))
    ids = IdMap(node_ids)
    s, d = ids.lookup(src), ids.lookup(dst)
    g = DirectedGraph.from_edges(len(ids), s, d)
    endpoints = np.zeros(len(ids), dtype=bool)
    endpoints[s] = True
    endpoints[d] = True
    g.build_stats = BuildStats(
        input_edges=total,
        kept=g.m,
        duplicates=len(src) - g.m,
        self_loops=n_loops,
        restricted_out=n_restricted,
        isolated=int((~endpoints).sum()),
    )
    if g.build_stats.isolated:
        log.info("retained %d isolated node(s) from the restriction set", g.build_stats.isolated)
    return g, ids


def _edge_array(edges) -> np.ndarray:
    if isinstance(edges, np.ndarray):
        if edges.ndim != 2 or edges.shape[1] != 2:
            if edges.size == 0:
                return np.empty((0, 2), dtype=np.int64)
            raise ParseError("edge array must have shape (m, 2)")
        return edges.astype(np.int64, copy=False)
    rows = []
    for lineno, pair in enumerate(edges, start=1):
        try:
            a, b = pair
            rows.append((int(a), int(b)))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"malformed edge record {pair!r}", line=lineno) from exc
    return np.array(rows, dtype=np.int64).reshape(-1, 2)


def read_edges(path) -> np.ndarray:
    """Read a tab-separated edge file into an (m, 2) int64 array."""
    path = Path(path)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            arr = np.loadtxt(path, dtype=np.int64, comments="#", delimiter="\t", ndmin=2, encoding="utf-8")
    except (ValueError, IndexError):
        _scan_for_error(path, fields=2)
        raise
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if arr.shape[1] != 2:
        _scan_for_error(path, fields=2)
    return arr


def _scan_for_error(path: Path, fields: int) -> None:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.startswith("#") or not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != fields:
                raise ParseError(f"expected {fields} tab-separated fields, got {len(parts)}", lineno, str(path))
            for p in parts:
                try:
                    int(p)
                except ValueError:
                    raise ParseError(f"not an integer id: {p!r}", lineno, str(path)) from None
    raise ParseError("unreadable edge file", None, str(path))


def read_id_list(path) -> np.ndarray:
    """One external id per line; ``#`` comments and blank lines ignored."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                out.append(int(s))
            except ValueError:
                raise ParseError(f"not an integer id: {s!r}", lineno, str(path)) from None
    return np.array(out, dtype=np.int64)


def write_edges(path, g: DirectedGraph, ids: IdMap) -> None:
    src, dst = g.edges()
    pairs = np.column_stack([ids.reverse[src], ids.reverse[dst]])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        np.savetxt(fh, pairs, fmt="%d", delimiter="\t")


def write_id_list(path, ids: IdMap) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        np.savetxt(fh, ids.reverse, fmt="%d")
