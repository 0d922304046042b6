"""Circular bucketed queues over a moving rank window.

Two fixed-range inner queues cover adjacent windows of q_size ranks each:
a primary window [h_index, h_index + q_size) and a buffer window immediately
after it. When the primary drains, the two queues swap roles by pointer
exchange and h_index advances by q_size. Ranks are absolute integers mapped
by subtraction, never by modulo, so the occupancy bitmaps stay truthful.

Items whose rank lies beyond both windows land in the LAST buffer bucket and
lose ordering among themselves until the windows catch up; they are re-filed
lazily one window at a time as pops reach them.
"""

from __future__ import annotations

from .bitmap_pq import DEFAULT_WORD_WIDTH, FfsQueue
from .errors import QueueStateError, StaleRankError


class _Entry:
    __slots__ = ("rank", "item", "overflow")

    def __init__(self, rank, item, overflow):
        self.rank = rank
        self.item = item
        self.overflow = overflow


class CircularWindowQueue:
    """Window-swap machinery shared by cFFS and the circular approximate queue.

    Subclasses provide _make_inner() building a fixed-range min-queue with the
    insert/pop_min/peek_min/min_rank/__len__ surface of FfsQueue.
    """

    def __init__(self, q_size: int):
        if q_size <= 0:
            raise ValueError("q_size must be positive")
        self.q_size = q_size
        self.h_index = 0
        self.primary = self._make_inner()
        self.secondary = self._make_inner()
        self.count = 0
        self.rotations = 0
        self._overflow = 0  # entries parked in the last buffer bucket

    def _make_inner(self):
        raise NotImplementedError

    def __len__(self) -> int:
        return self.count

    def insert(self, rank: int, item):
        if rank < self.h_index:
            raise StaleRankError(f"rank {rank} below window start {self.h_index}")
        q = self.q_size
        if self.count == 0 and rank >= self.h_index + 2 * q:
            # nothing to drain, so snap the window to cover the rank
            self.h_index = (rank // q) * q
        self._file(rank, item)
        self.count += 1

    def _file(self, rank: int, item) -> None:
        q = self.q_size
        offset = rank - self.h_index
        if offset < q:
            self.primary.insert(offset, _Entry(rank, item, False))
        elif offset < 2 * q:
            self.secondary.insert(offset - q, _Entry(rank, item, False))
        else:
            self.secondary.insert(q - 1, _Entry(rank, item, True))
            self._overflow += 1

    def rotate(self) -> None:
        """Swap primary/buffer roles and advance the window by q_size."""
        if len(self.primary) != 0:
            raise QueueStateError("rotate requires an empty primary window")
        self.primary, self.secondary = self.secondary, self.primary
        self.h_index += self.q_size

    def _normalize(self) -> None:
        # Rotate past empty windows and re-file overflow leftovers sitting at
        # the head so the primary head is a genuinely in-window item. Refiling
        # only moves items to their proper bucket; logical content is unchanged.
        if self.count == 0:
            return
        if self._overflow == self.count:
            # everything left is parked past both windows: rotating there one
            # window at a time could take arbitrarily long, so jump directly
            self._resnap()
            return
        window_end = self.h_index + self.q_size
        while True:
            head = self.primary.peek_min()
            if head is None:
                self.rotate()
                self.rotations += 1
                window_end += self.q_size
                continue
            entry = head[1]
            if entry.rank < window_end:
                return
            self.primary.pop_min()
            self._overflow -= 1  # only overflow entries sit past the window
            self._file(entry.rank, entry.item)

    def _resnap(self) -> None:
        entries = []
        for inner in (self.primary, self.secondary):
            while True:
                got = inner.pop_min()
                if got is None:
                    break
                entries.append(got[1])
        self._overflow = 0
        q = self.q_size
        self.h_index = (min(e.rank for e in entries) // q) * q
        for e in entries:
            self._file(e.rank, e.item)

    def _settle(self) -> None:
        # with no overflow entries every filed rank is truthful, so the only
        # normalization ever needed is rotating past drained windows
        if self._overflow:
            self._normalize()
            return
        primary = self.primary
        while len(primary) == 0:
            self.rotate()
            self.rotations += 1
            primary = self.primary

    def pop_min(self):
        if self.count == 0:
            return None
        self._settle()
        _, entry = self.primary.pop_min()
        self.count -= 1
        return entry.rank, entry.item

    def min_rank(self) -> int | None:
        if self.count == 0:
            return None
        self._settle()
        return self.primary.peek_min()[1].rank

    def peek_min(self):
        if self.count == 0:
            return None
        self._settle()
        entry = self.primary.peek_min()[1]
        return entry.rank, entry.item


class CffsQueue(CircularWindowQueue):
    """Circular hierarchical FFS queue: two FFS windows with pointer swap."""

    def __init__(self, q_size: int, word_width: int = DEFAULT_WORD_WIDTH):
        self.word_width = word_width
        super().__init__(q_size)

    def _make_inner(self) -> FfsQueue:
        return FfsQueue(self.q_size, self.word_width)
