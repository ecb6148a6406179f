"""Post/repost logs: deduplication, cascade roots, and per-user quality counts.

A repost is credited only to the root post of its cascade and to the user
who wrote that root; intermediate reposters receive nothing.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CascadeCycleError, ParseError
from .graph import IdMap

log = logging.getLogger(__name__)

#: RPT and FTR are persisted with six fractional digits and handled as
#: integer multiples of 1e-6 everywhere downstream.
MICRO = 10**6

NO_PARENT = -1


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: int
    user: int
    timestamp: int
    content_hash: int
    parent: int | None = None

    def __post_init__(self):
        if self.parent is not None and self.parent == self.tweet_id:
            raise ValueError(f"tweet {self.tweet_id} cannot repost itself")


class ActivityLog(Sequence[TweetRecord]):
    """Columnar store of tweet records; iterates as ``TweetRecord``."""

    def __init__(self, tweet_id, user, timestamp, content_hash, parent, *, check: bool = True):
        self.tweet_id = np.asarray(tweet_id, dtype=np.int64)
        self.user = np.asarray(user, dtype=np.int64)
        self.timestamp = np.asarray(timestamp, dtype=np.int64)
        self.content_hash = np.asarray(content_hash, dtype=np.uint64)
        self.parent = np.asarray(parent, dtype=np.int64)
        n = len(self.tweet_id)
        if not all(len(a) == n for a in (self.user, self.timestamp, self.content_hash, self.parent)):
            raise ValueError("column lengths differ")
        if check and n:
            if len(np.unique(self.tweet_id)) != n:
                raise ValueError("tweet ids must be unique within a log")
            if np.any(self.parent == self.tweet_id):
                raise ValueError("a tweet cannot repost itself")

    @classmethod
    def from_records(cls, records: Iterable[TweetRecord]) -> "ActivityLog":
        if isinstance(records, ActivityLog):
            return records
        recs = list(records)
        return cls(
            [r.tweet_id for r in recs],
            [r.user for r in recs],
            [r.timestamp for r in recs],
            np.array([r.content_hash for r in recs], dtype=np.uint64),
            [NO_PARENT if r.parent is None else r.parent for r in recs],
        )

    @property
    def has_parent(self) -> np.ndarray:
        return self.parent != NO_PARENT

    def take(self, positions) -> "ActivityLog":
        p = np.asarray(positions, dtype=np.int64)
        return ActivityLog(self.tweet_id[p], self.user[p], self.timestamp[p],
                           self.content_hash[p], self.parent[p], check=False)

    def __len__(self) -> int:
        return len(self.tweet_id)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return self.take(np.arange(len(self))[i])
        parent = int(self.parent[i])
        return TweetRecord(int(self.tweet_id[i]), int(self.user[i]), int(self.timestamp[i]),
                           int(self.content_hash[i]), None if parent == NO_PARENT else parent)

    def __iter__(self) -> Iterator[TweetRecord]:
        for i in range(len(self)):
            yield self[i]


def _as_log(log_) -> ActivityLog:
    return log_ if isinstance(log_, ActivityLog) else ActivityLog.from_records(log_)


def dedup(records) -> ActivityLog:
    """Keep the earliest record per (user, content hash); ties go to the smaller id.

    Survivors keep their original relative order.
    """
    lg = _as_log(records)
    if len(lg) == 0:
        return lg
    order = np.lexsort((lg.tweet_id, lg.timestamp, lg.content_hash, lg.user))
    u, h = lg.user[order], lg.content_hash[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = (u[1:] != u[:-1]) | (h[1:] != h[:-1])
    return lg.take(np.sort(order[first]))


@dataclass
class CascadeIndex:
    """Root of every record, as positions into ``log``.

    ``orphan`` marks reposts whose parent is absent from the log; they act
    as roots of their own (partial) cascades.
    """

    log: ActivityLog
    root_pos: np.ndarray
    orphan: np.ndarray

    def __post_init__(self):
        self._order = np.argsort(self.log.tweet_id, kind="stable")
        self._sorted_ids = self.log.tweet_id[self._order]

    @property
    def is_root(self) -> np.ndarray:
        return self.root_pos == np.arange(len(self.root_pos))

    @property
    def orphan_count(self) -> int:
        return int(self.orphan.sum())

    def _pos(self, tweet_id: int) -> int:
        i = int(np.searchsorted(self._sorted_ids, tweet_id))
        if i >= len(self._sorted_ids) or self._sorted_ids[i] != tweet_id:
            raise KeyError(tweet_id)
        return int(self._order[i])

    def root_of(self, tweet_id: int) -> tuple[int, int]:
        """(root tweet id, root user) of ``tweet_id``."""
        r = self.root_pos[self._pos(tweet_id)]
        return int(self.log.tweet_id[r]), int(self.log.user[r])

    def is_orphan(self, tweet_id: int) -> bool:
        return bool(self.orphan[self._pos(tweet_id)])


def resolve_cascades(records) -> CascadeIndex:
    """Follow parent links to each record's cascade root."""
    lg = _as_log(records)
    n = len(lg)
    pos = np.arange(n, dtype=np.int64)
    if n == 0:
        return CascadeIndex(lg, pos, np.zeros(0, dtype=bool))

    order = np.argsort(lg.tweet_id, kind="stable")
    sorted_ids = lg.tweet_id[order]
    has_parent = lg.has_parent
    at = np.minimum(np.searchsorted(sorted_ids, lg.parent), n - 1)
    found = has_parent & (sorted_ids[at] == lg.parent)
    orphan = has_parent & ~found
    parent_pos = np.where(found, order[at], pos)
    anchor = parent_pos == pos

    root = parent_pos.copy()
    # pointer doubling: depth d resolves in ceil(log2 d) rounds
    for _ in range(max(1, int(np.ceil(np.log2(n + 1)))) + 1):
        nxt = root[root]
        if np.array_equal(nxt, root):
            break
        root = nxt
    bad = ~anchor[root]
    if bad.any():
        raise CascadeCycleError(_smallest_cycle_id(lg.tweet_id, parent_pos, np.flatnonzero(bad)))
    return CascadeIndex(lg, root, orphan)


def _smallest_cycle_id(tweet_id: np.ndarray, parent_pos: np.ndarray, starts: np.ndarray) -> int:
    done = np.zeros(len(parent_pos), dtype=bool)
    best = None
    for s in starts:
        path: dict[int, int] = {}
        v = int(s)
        while not done[v] and v not in path:
            path[v] = len(path)
            v = int(parent_pos[v])
        if v in path:
            members = list(path)[path[v]:]
            low = int(tweet_id[members].min())
            best = low if best is None else min(best, low)
        done[list(path)] = True
    assert best is not None
    return best


@dataclass(frozen=True)
class QualityVector:
    nt: int
    not_: int
    ttr: int
    ntr: int
    rpt: Fraction
    ftr: Fraction


@dataclass
class QualityTable:
    """Per-node quality counts, indexed by dense node id.

    ``rpt_micro`` and ``ftr_micro`` hold RPT and FTR in units of 1e-6.
    """

    nt: np.ndarray
    not_: np.ndarray
    ttr: np.ndarray
    ntr: np.ndarray
    rpt_micro: np.ndarray
    ftr_micro: np.ndarray
    skipped_records: int = 0
    skipped_users: int = 0
    self_reposts: int = 0
    orphans: int = 0
    rows_read: int = 0

    def __len__(self) -> int:
        return len(self.nt)

    def __getitem__(self, node: int) -> QualityVector:
        nt, no, ttr, ntr = (int(a[node]) for a in (self.nt, self.not_, self.ttr, self.ntr))
        rpt = Fraction(ttr, no) if no else Fraction(0)
        ftr = Fraction(ntr, no) if no else Fraction(0)
        return QualityVector(nt, no, ttr, ntr, rpt, ftr)

    @classmethod
    def from_counts(cls, nt, not_, ttr, ntr, **extra) -> "QualityTable":
        not_ = np.asarray(not_, dtype=np.int64)
        ttr = np.asarray(ttr, dtype=np.int64)
        ntr = np.asarray(ntr, dtype=np.int64)
        return cls(np.asarray(nt, dtype=np.int64), not_, ttr, ntr,
                   micro_ratio(ttr, not_), micro_ratio(ntr, not_), **extra)


def micro_ratio(num, den) -> np.ndarray:
    """round(num / den, 6) in integer micro-units (half up); 0 where den == 0."""
    num = np.asarray(num, dtype=np.int64)
    den = np.asarray(den, dtype=np.int64)
    safe = np.where(den > 0, den, 1)
    out = (2 * num * MICRO + safe) // (2 * safe)
    return np.where(den > 0, out, 0).astype(np.int64)


def compute_qualities(records, index: CascadeIndex, ids: IdMap) -> QualityTable:
    """NT, NOT, TTR, NTR, RPT and FTR for every node of ``ids``.

    Cascade roots (originals and orphaned reposts) count as initiated posts.
    Reposts of one's own cascade are excluded from TTR and NTR.
    """
    lg = _as_log(records)
    n = len(ids)
    node = ids.lookup(lg.user)
    known = node >= 0
    skipped_records = int((~known).sum())
    skipped_users = len(np.unique(lg.user[~known]))
    if skipped_records:
        log.warning("skipped %d record(s) from %d user(s) outside the id map", skipped_records, skipped_users)

    is_root = index.is_root
    nt = np.bincount(node[known], minlength=n)
    not_ = np.bincount(node[known & is_root], minlength=n)

    reposts = np.flatnonzero(~is_root)
    root_rec = index.root_pos[reposts]
    self_rt = lg.user[root_rec] == lg.user[reposts]
    credited = root_rec[~self_rt]
    root_node = node[credited]
    ttr = np.bincount(root_node[root_node >= 0], minlength=n)

    got_repost = np.zeros(len(lg), dtype=bool)
    got_repost[credited] = True
    ntr = np.bincount(node[known & is_root & got_repost], minlength=n)

    return QualityTable.from_counts(
        nt, not_, ttr, ntr,
        skipped_records=skipped_records,
        skipped_users=skipped_users,
        self_reposts=int(self_rt.sum()),
        orphans=index.orphan_count,
    )


_DECIMAL = re.compile(r"(-?)(\d+(?=\.|$)|\d*(?=\.\d))(?:\.(\d{1,6}))?")


def format_micro(v: int) -> str:
    sign = "-" if v < 0 else ""
    q, r = divmod(abs(int(v)), MICRO)
    return f"{sign}{q}.{r:06d}"


def parse_micro(s: str) -> int:
    """Exact decimal string to micro-units; more than 6 digits is an error."""
    m = _DECIMAL.fullmatch(s.strip())
    if m is None:
        raise ValueError(f"not a decimal with at most 6 fractional digits: {s!r}")
    sign, whole, frac = m.groups()
    v = int(whole or "0") * MICRO + int((frac or "").ljust(6, "0"))
    neg = sign == "-"
    return -v if neg else v


def read_activity(path) -> tuple[ActivityLog, int]:
    """Parse an activity file; returns the log and the number of data lines."""
    cols: list[list[int]] = [[], [], [], [], []]
    seen: dict[int, int] = {}
    lines = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.startswith("#") or not line.strip():
                continue
            lines += 1
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 5:
                raise ParseError(f"expected 5 tab-separated fields, got {len(parts)}", lineno, str(path))
            try:
                tid, user, ts = int(parts[0]), int(parts[1]), int(parts[2])
                if len(parts[3]) != 16:
                    raise ValueError("content hash must be 16 hex digits")
                h = int(parts[3], 16)
                parent = NO_PARENT if parts[4] == "-" else int(parts[4])
            except ValueError as exc:
                raise ParseError(str(exc), lineno, str(path)) from None
            if parent == tid:
                raise ParseError(f"tweet {tid} names itself as parent", lineno, str(path))
            if tid in seen:
                raise ParseError(f"duplicate tweet id {tid} (first on line {seen[tid]})", lineno, str(path))
            seen[tid] = lineno
            for c, v in zip(cols, (tid, user, ts, h, parent)):
                c.append(v)
    return ActivityLog(cols[0], cols[1], cols[2], np.array(cols[3], dtype=np.uint64), cols[4], check=False), lines


def write_activity(path, records) -> None:
    lg = _as_log(records)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in lg:
            parent = "-" if r.parent is None else str(r.parent)
            fh.write(f"{r.tweet_id}\t{r.user}\t{r.timestamp}\t{r.content_hash:016x}\t{parent}\n")


def write_qualities(path, table: QualityTable, ids: IdMap) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(len(ids)):
            fh.write(
                f"{ids.reverse[i]}\t{table.nt[i]}\t{table.not_[i]}\t{table.ttr[i]}\t{table.ntr[i]}\t"
                f"{format_micro(table.rpt_micro[i])}\t{format_micro(table.ftr_micro[i])}\n"
            )


def read_qualities(path, ids: IdMap) -> QualityTable:
    """Read a qualities file; nodes of ``ids`` missing from it get zeros."""
    n = len(ids)
    cols = [np.zeros(n, dtype=np.int64) for _ in range(6)]
    seen = np.zeros(n, dtype=bool)
    skipped = rows = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.startswith("#") or not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 7:
                raise ParseError(f"expected 7 tab-separated fields, got {len(parts)}", lineno, str(path))
            try:
                user = int(parts[0])
                vals = [int(p) for p in parts[1:5]] + [parse_micro(parts[5]), parse_micro(parts[6])]
            except ValueError as exc:
                raise ParseError(str(exc), lineno, str(path)) from None
            rows += 1
            if user not in ids:
                skipped += 1
                continue
            i = ids.node(user)
            if seen[i]:
                raise ParseError(f"duplicate user {user}", lineno, str(path))
            seen[i] = True
            for c, v in zip(cols, vals):
                c[i] = v
    return QualityTable(*cols, skipped_records=skipped, rows_read=rows)
