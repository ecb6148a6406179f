from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfp.activity import (
    ActivityLog,
    QualityVector,
    TweetRecord,
    compute_qualities,
    dedup,
    micro_ratio,
    read_activity,
    read_qualities,
    resolve_cascades,
    write_activity,
    write_qualities,
)
from gfp.errors import CascadeCycleError, ParseError
from gfp.graph import IdMap


class LogBuilder:
    """Hands out fresh tweet ids and distinct content hashes."""

    def __init__(self):
        self.records = []
        self.next_id = 1

    def post(self, user, parent=None, ts=0):
        tid = self.next_id
        self.next_id += 1
        self.records.append(TweetRecord(tid, user, ts, tid, parent))
        return tid


def hypothetical_log():
    b = LogBuilder()
    fan = 1000
    originals = [b.post(1) for _ in range(100)]
    for _ in range(1000):
        b.post(fan, originals[0])
        fan += 1
    for _ in range(100):
        t = b.post(2)
        for _ in range(10):
            b.post(fan, t)
            fan += 1
    for _ in range(10):
        t = b.post(3)
        for _ in range(50):
            b.post(fan, t)
            fan += 1
    return b.records, fan


def qualities_of(records, users):
    lg = dedup(records)
    idx = resolve_cascades(lg)
    ids = IdMap(sorted(users))
    return compute_qualities(lg, idx, ids), ids


def test_dedup_keeps_earliest():
    recs = [TweetRecord(1, 7, 9, 0xAB), TweetRecord(2, 7, 5, 0xAB)]
    out = list(dedup(recs))
    assert [r.tweet_id for r in out] == [2]


def test_dedup_different_users_kept():
    recs = [TweetRecord(1, 7, 9, 0xAB), TweetRecord(2, 8, 5, 0xAB)]
    assert len(dedup(recs)) == 2


def test_dedup_tie_break_smaller_id():
    recs = [TweetRecord(i, 7, 4, 0xCD) for i in (7, 3, 9)]
    assert [r.tweet_id for r in dedup(recs)] == [3]


def test_dedup_collapses_distinct_parents():
    recs = [TweetRecord(1, 1, 0, 5), TweetRecord(2, 1, 1, 5, parent=1), TweetRecord(3, 2, 0, 9)]
    assert [r.tweet_id for r in dedup(recs)] == [1, 3]


def test_dedup_preserves_order():
    recs = [TweetRecord(10, 1, 3, 1), TweetRecord(4, 2, 1, 1), TweetRecord(6, 1, 9, 2), TweetRecord(2, 1, 1, 1)]
    assert [r.tweet_id for r in dedup(recs)] == [4, 6, 2]


def test_chain_roots():
    recs = [TweetRecord(1, 10, 0, 1), TweetRecord(2, 20, 1, 2, 1), TweetRecord(3, 30, 2, 3, 2)]
    idx = resolve_cascades(recs)
    assert idx.root_of(3) == (1, 10)
    assert idx.root_of(2) == (1, 10)
    assert idx.root_of(1) == (1, 10)


def test_single_original_maps_to_itself():
    idx = resolve_cascades([TweetRecord(5, 1, 0, 1)])
    assert idx.root_of(5) == (5, 1)
    assert not idx.is_orphan(5)


def test_orphan_is_pseudo_root():
    recs = [TweetRecord(5, 1, 0, 1, parent=99), TweetRecord(6, 2, 1, 2, parent=5)]
    idx = resolve_cascades(recs)
    assert idx.root_of(5) == (5, 1)
    assert idx.is_orphan(5)
    assert idx.root_of(6) == (5, 1)
    q, ids = qualities_of(recs, [1, 2])
    assert q[ids.node(1)].ttr == 1
    assert q[ids.node(1)].ntr == 1


def test_cycle_error_names_smallest_id():
    recs = [TweetRecord(8, 1, 0, 1, 5), TweetRecord(5, 1, 0, 2, 12), TweetRecord(12, 1, 0, 3, 8),
            TweetRecord(20, 2, 0, 4, 8), TweetRecord(30, 2, 0, 5)]
    with pytest.raises(CascadeCycleError) as err:
        resolve_cascades(recs)
    assert err.value.tweet_id == 5


def test_two_cycle_detected():
    with pytest.raises(CascadeCycleError) as err:
        resolve_cascades([TweetRecord(4, 1, 0, 1, 3), TweetRecord(3, 2, 0, 2, 4)])
    assert err.value.tweet_id == 3


def test_self_parent_rejected():
    with pytest.raises(ValueError):
        TweetRecord(1, 1, 0, 0, parent=1)


def test_hypothetical_users():
    recs, fan = hypothetical_log()
    q, ids = qualities_of(recs, [1, 2, 3] + list(range(1000, fan)))
    got = [q[ids.node(u)] for u in (1, 2, 3)]
    assert [v.ttr for v in got] == [1000, 1000, 500]
    assert [v.rpt for v in got] == [10, 10, 50]
    assert [v.ftr for v in got] == [Fraction(1, 100), 1, 1]
    assert [v.ntr for v in got] == [1, 100, 10]


def test_intermediate_gets_nothing():
    recs = [TweetRecord(1, 10, 0, 1), TweetRecord(2, 20, 1, 2, 1), TweetRecord(3, 30, 2, 3, 2),
            TweetRecord(4, 40, 3, 4, 3)]
    q, ids = qualities_of(recs, [10, 20, 30, 40])
    assert q[ids.node(10)].ttr == 3
    assert q[ids.node(20)].ttr == 0
    assert q[ids.node(30)].ttr == 0


def test_silent_user_all_zero():
    q, ids = qualities_of([TweetRecord(1, 5, 0, 1)], [5, 6])
    assert q[ids.node(6)] == QualityVector(0, 0, 0, 0, Fraction(0), Fraction(0))


def test_self_repost_excluded():
    recs = [TweetRecord(1, 1, 0, 1), TweetRecord(2, 1, 1, 2, 1), TweetRecord(3, 2, 1, 3, 1)]
    q, ids = qualities_of(recs, [1, 2])
    assert q[ids.node(1)].ttr == 1
    assert q.self_reposts == 1


def test_unknown_users_skipped_but_their_reposts_count():
    recs = [TweetRecord(1, 1, 0, 1), TweetRecord(2, 99, 1, 2, 1)]
    q, ids = qualities_of(recs, [1])
    assert q.skipped_records == 1 and q.skipped_users == 1
    assert q[ids.node(1)].ttr == 1


def test_micro_ratio_rounding():
    assert list(micro_ratio([1, 2, 1, 0], [3, 3, 0, 5])) == [333333, 666667, 0, 0]


def test_activity_file_roundtrip(tmp_path):
    recs = [TweetRecord(1, 1, 0, 0xDEADBEEF, None), TweetRecord(2, 2, 5, 0xFFFFFFFFFFFFFFFF, 1)]
    p = tmp_path / "a.tsv"
    write_activity(p, recs)
    lg, lines = read_activity(p)
    assert lines == 2
    assert list(lg) == recs


def test_activity_file_errors(tmp_path):
    p = tmp_path / "a.tsv"
    p.write_text("1\t1\t0\t0000000000000001\t-\n1\t2\t0\t0000000000000002\t-\n")
    with pytest.raises(ParseError) as err:
        read_activity(p)
    assert err.value.line == 2
    p.write_text("1\t1\t0\tnothex\t-\n")
    with pytest.raises(ParseError) as err:
        read_activity(p)
    assert err.value.line == 1


def test_qualities_file_roundtrip(tmp_path):
    recs, fan = hypothetical_log()
    q, ids = qualities_of(recs, [1, 2, 3] + list(range(1000, fan)))
    p = tmp_path / "q.tsv"
    write_qualities(p, q, ids)
    first = p.read_text().splitlines()[0]
    assert first == "1\t100\t100\t1000\t1\t10.000000\t0.010000"
    q2 = read_qualities(p, ids)
    for a, b in zip((q.nt, q.not_, q.ttr, q.ntr, q.rpt_micro, q.ftr_micro),
                    (q2.nt, q2.not_, q2.ttr, q2.ntr, q2.rpt_micro, q2.ftr_micro)):
        assert np.array_equal(a, b)


@st.composite
def activity_logs(draw):
    n = draw(st.integers(1, 30))
    users = draw(st.lists(st.integers(1, 5), min_size=n, max_size=n))
    hashes = draw(st.lists(st.integers(0, 6), min_size=n, max_size=n))
    stamps = draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    recs = []
    for i in range(n):
        parent = None
        if i and draw(st.booleans()):
            parent = draw(st.integers(1, i + 3))  # may point past the log: orphan
            if parent == i + 1:
                parent = None
        if parent is not None and parent > i:
            parent = parent + 100  # only earlier ids are real, keeps the log acyclic
        recs.append(TweetRecord(i + 1, users[i], stamps[i], hashes[i], parent))
    return recs


def brute_qualities(recs, users):
    by_id = {r.tweet_id: r for r in recs}

    def root(r):
        while r.parent is not None and r.parent in by_id:
            r = by_id[r.parent]
        return r

    out = {}
    for u in users:
        mine = [r for r in recs if r.user == u]
        roots = [r for r in mine if root(r) is r]
        credited = [r for r in recs if root(r) is not r and root(r).user == u and r.user != u]
        hit = {root(r).tweet_id for r in credited}
        out[u] = (len(mine), len(roots), len(credited), len(hit))
    return out


@settings(max_examples=150)
@given(activity_logs(), st.randoms(use_true_random=False))
def test_qualities_match_brute_force_and_are_order_free(recs, rnd):
    users = [1, 2, 3, 4, 5]
    kept = list(dedup(recs))
    q, ids = qualities_of(recs, users)
    expect = brute_qualities(kept, users)
    for u in users:
        v = q[ids.node(u)]
        assert (v.nt, v.not_, v.ttr, v.ntr) == expect[u]
        assert v.not_ <= v.nt and v.ntr <= v.not_ and v.ntr <= v.ttr
        assert (v.ntr == 0) == (v.ttr == 0)
        assert 0 <= v.ftr <= 1
        if v.not_:
            assert v.rpt == Fraction(v.ttr, v.not_)
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    q2, _ = qualities_of(shuffled, users)
    for a, b in zip((q.nt, q.not_, q.ttr, q.ntr), (q2.nt, q2.not_, q2.ttr, q2.ntr)):
        assert np.array_equal(a, b)
    idx = resolve_cascades(kept)
    reposts = ~idx.is_root
    non_self = reposts & (idx.log.user[idx.root_pos] != idx.log.user)
    assert q.ttr.sum() == non_self.sum()
    nrep = np.bincount(ids.lookup(idx.log.user)[reposts], minlength=len(ids))
    assert np.array_equal(q.nt, q.not_ + nrep)


def test_activity_log_sequence_protocol():
    recs = [TweetRecord(1, 1, 0, 1), TweetRecord(2, 1, 0, 2, 1)]
    lg = ActivityLog.from_records(recs)
    assert len(lg) == 2 and lg[1] == recs[1] and list(lg[0:1]) == recs[:1]


def test_qualities_file_duplicate_user(tmp_path):
    p = tmp_path / "q.tsv"
    p.write_text("1\t1\t1\t0\t0\t0.000000\t0.000000\n1\t2\t1\t0\t0\t0.000000\t0.000000\n")
    with pytest.raises(ParseError) as err:
        read_qualities(p, IdMap([1]))
    assert err.value.line == 2
