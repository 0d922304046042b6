"""Circular (moving-window) queue tests."""

import random

import pytest

from pktsched.circular_pq import CffsQueue
from pktsched.errors import QueueStateError, StaleRankError


def test_window_mapping_q8():
    q = CffsQueue(8)
    q.insert(6, "in-window")
    q.insert(13, "buffer")
    q.insert(99, "overflow")
    # rank 6 -> primary bucket 6; rank 13 -> buffer bucket 5;
    # rank 99 -> last buffer bucket, flagged overflow
    assert q.primary.bucket_len(6) == 1
    assert q.secondary.bucket_len(5) == 1
    assert q.secondary.bucket_len(7) == 1
    entry = q.secondary.bucket_items(7)[0]
    assert entry.overflow and entry.rank == 99


def test_rotation_advances_window():
    q = CffsQueue(8)
    for r in range(8):
        q.insert(r, r)
    q.insert(9, 9)
    assert q.h_index == 0
    for r in range(8):
        assert q.pop_min() == (r, r)
    assert q.pop_min() == (9, 9)  # forces a rotation first
    assert q.h_index == 8
    assert q.rotations == 1


def test_overflow_survives_multiple_rotations():
    q = CffsQueue(8)
    q.insert(3, "a")
    q.insert(99, "z")  # lands 12 windows ahead
    assert q.pop_min() == (3, "a")
    assert q.pop_min() == (99, "z")
    assert q.h_index == 96  # 99 lives in window [96, 104)
    assert q.pop_min() is None


def test_stale_rank_rejected():
    q = CffsQueue(8)
    q.insert(20, "x")
    assert q.pop_min() == (20, "x")
    assert q.h_index == 16
    with pytest.raises(StaleRankError):
        q.insert(15, "late")


def test_snap_on_empty_insert():
    q = CffsQueue(8)
    q.insert(1000, "far")
    assert q.h_index == 1000  # (1000 // 8) * 8
    assert q.pop_min() == (1000, "far")


def test_rotate_requires_empty_primary():
    q = CffsQueue(8)
    q.insert(2, "x")
    with pytest.raises(QueueStateError):
        q.rotate()


def test_peek_and_min_rank_transparent():
    q = CffsQueue(4)
    q.insert(7, "later")
    q.insert(30, "way-later")
    assert q.min_rank() == 7
    assert q.peek_min() == (7, "later")
    assert q.pop_min() == (7, "later")
    assert q.min_rank() == 30


def test_fifo_within_rank():
    q = CffsQueue(16)
    q.insert(5, "a")
    q.insert(5, "b")
    assert q.pop_min() == (5, "a")
    assert q.pop_min() == (5, "b")


def test_overflow_fifo_among_equal_ranks():
    q = CffsQueue(4)
    q.insert(0, "now")
    for tag in ("p", "q", "r"):
        q.insert(50, tag)
    assert q.pop_min() == (0, "now")
    assert [q.pop_min()[1] for _ in range(3)] == ["p", "q", "r"]


def test_windowed_random_ops_match_fifo_oracle():
    """Ranks kept inside the two live windows: FIFO ties must hold exactly."""
    rng = random.Random(777)
    q = CffsQueue(32)
    pending = []  # (rank, seq) oracle
    seq = 0
    for _ in range(30_000):
        if pending and rng.random() < 0.5:
            best = min(pending)
            pending.remove(best)
            assert q.pop_min() == best
        else:
            rank = q.h_index + rng.randrange(2 * q.q_size)
            q.insert(rank, seq)
            pending.append((rank, seq))
            seq += 1
    while pending:
        best = min(pending)
        pending.remove(best)
        assert q.pop_min() == best


def test_overflow_random_ops_preserve_rank_order():
    """Far-future ranks park in the overflow bucket and lose FIFO among ties,
    but pop order by rank must still be exact."""
    rng = random.Random(333)
    q = CffsQueue(32)
    pending = []  # ranks only
    low = 0
    for _ in range(20_000):
        if pending and rng.random() < 0.5:
            best = min(pending)
            pending.remove(best)
            rank, _ = q.pop_min()
            assert rank == best
            low = max(low, rank)
        else:
            rank = max(low, q.h_index) + rng.randrange(200)
            q.insert(rank, rank)
            pending.append(rank)
    while pending:
        best = min(pending)
        pending.remove(best)
        assert q.pop_min()[0] == best


def test_count_tracks_content():
    q = CffsQueue(8)
    assert len(q) == 0
    q.insert(0, 0)
    q.insert(100, 1)
    assert len(q) == 2
    q.pop_min()
    q.pop_min()
    assert len(q) == 0
    assert q.pop_min() is None
