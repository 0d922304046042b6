"""Flat and hierarchical FFS-based bucketed integer priority queues.

Buckets are doubly-linked FIFO lists indexed by integer rank. A hierarchy of
occupancy bitmaps (one bit per bucket at the leaf, one bit per word above)
lets pop_min locate the lowest nonempty bucket with one find-first-set probe
per level. All queues here are MIN-queues: find-first-set means the lowest
set bit.
"""

from __future__ import annotations

from .errors import InvalidHandleError, RankRangeError

DEFAULT_WORD_WIDTH = 64


def find_first_set(word: int) -> int | None:
    """Index of the lowest set bit of a nonnegative word, or None if zero."""
    if word == 0:
        return None
    return (word & -word).bit_length() - 1


class BucketNode:
    """Handle to one enqueued item; supports O(1) unlink from its bucket."""

    __slots__ = ("item", "rank", "prev", "next", "in_queue")

    def __init__(self, item, rank):
        self.item = item
        self.rank = rank
        self.prev = None
        self.next = None
        self.in_queue = True


class FfsQueue:
    """Hierarchical FFS-based bucketed min-queue over ranks [0, num_buckets).

    With word width w the bitmap has ceil(log_w N) levels; level 0 carries one
    bit per bucket and each level above carries one bit per word below it.
    pop_min touches exactly one word per level.
    """

    def __init__(self, num_buckets: int, word_width: int = DEFAULT_WORD_WIDTH):
        if num_buckets <= 0:
            raise ValueError("num_buckets must be positive")
        if word_width < 2:
            raise ValueError("word_width must be at least 2")
        self.num_buckets = num_buckets
        self.word_width = word_width
        self._heads: list[BucketNode | None] = [None] * num_buckets
        self._tails: list[BucketNode | None] = [None] * num_buckets
        # levels[0] covers buckets; levels[k] covers the words of levels[k-1]
        levels = []
        n = num_buckets
        while True:
            words = (n + word_width - 1) // word_width
            levels.append([0] * words)
            if words == 1:
                break
            n = words
        self._levels = levels
        self._top_down = levels[::-1]
        self.depth = len(levels)
        self._len = 0
        # instrumentation
        self.probe_count = 0
        self.insert_count = 0
        self.remove_count = 0

    def __len__(self) -> int:
        return self._len

    def _set_bit(self, index: int) -> None:
        w = self.word_width
        for level in self._levels:
            word_idx, bit = divmod(index, w)
            old = level[word_idx]
            level[word_idx] = old | (1 << bit)
            if old != 0:
                return
            index = word_idx

    def _clear_bit(self, index: int) -> None:
        w = self.word_width
        for level in self._levels:
            word_idx, bit = divmod(index, w)
            level[word_idx] &= ~(1 << bit)
            if level[word_idx] != 0:
                return
            index = word_idx

    def insert(self, rank: int, item) -> BucketNode:
        """Append item to bucket[rank]; returns a handle for O(1) removal."""
        if not 0 <= rank < self.num_buckets:
            raise RankRangeError(f"rank {rank} outside [0, {self.num_buckets})")
        node = BucketNode(item, rank)
        tail = self._tails[rank]
        if tail is None:
            self._heads[rank] = node
            self._set_bit(rank)
        else:
            tail.next = node
            node.prev = tail
        self._tails[rank] = node
        self._len += 1
        self.insert_count += 1
        return node

    def _min_bucket(self) -> int | None:
        if self._len == 0:
            return None
        idx = 0
        w = self.word_width
        for level in self._top_down:
            word = level[idx]
            idx = idx * w + (word & -word).bit_length() - 1
        self.probe_count += self.depth  # one FFS probe per level
        return idx

    def min_rank(self) -> int | None:
        return self._min_bucket()

    def peek_min(self):
        """(rank, item) that pop_min would return, without removing it."""
        rank = self._min_bucket()
        if rank is None:
            return None
        return rank, self._heads[rank].item

    def pop_min(self):
        """Remove and return (rank, item) from the lowest nonempty bucket."""
        rank = self._min_bucket()
        if rank is None:
            return None
        # the head of a bucket has no predecessor, so unlinking is simpler
        # than the general-handle case
        node = self._heads[rank]
        nxt = node.next
        self._heads[rank] = nxt
        if nxt is None:
            self._tails[rank] = None
            self._clear_bit(rank)
        else:
            nxt.prev = None
            node.next = None
        node.in_queue = False
        self._len -= 1
        self.remove_count += 1
        return rank, node.item

    def remove(self, handle: BucketNode):
        """Detach a previously inserted item; the handle becomes stale."""
        if not isinstance(handle, BucketNode) or not handle.in_queue:
            raise InvalidHandleError("handle is stale or foreign")
        item = handle.item
        self._unlink(handle)
        return item

    def _unlink(self, node: BucketNode) -> None:
        rank = node.rank
        if node.prev is None:
            self._heads[rank] = node.next
        else:
            node.prev.next = node.next
        if node.next is None:
            self._tails[rank] = node.prev
        else:
            node.next.prev = node.prev
        if self._heads[rank] is None:
            self._clear_bit(rank)
        node.prev = node.next = None
        node.in_queue = False
        self._len -= 1
        self.remove_count += 1

    def bucket_len(self, rank: int) -> int:
        n = 0
        node = self._heads[rank]
        while node is not None:
            n += 1
            node = node.next
        return n

    def bucket_items(self, rank: int) -> list:
        out = []
        node = self._heads[rank]
        while node is not None:
            out.append(node.item)
            node = node.next
        return out

    def check_bitmap(self) -> bool:
        """Recompute every bitmap level from scratch and compare. Test hook."""
        w = self.word_width
        expected = [0] * len(self._levels[0])
        for i in range(self.num_buckets):
            if self._heads[i] is not None:
                expected[i // w] |= 1 << (i % w)
        levels = [expected]
        while len(levels[-1]) > 1:
            below = levels[-1]
            above = [0] * ((len(below) + w - 1) // w)
            for j, word in enumerate(below):
                if word:
                    above[j // w] |= 1 << (j % w)
            levels.append(above)
        return levels == self._levels
