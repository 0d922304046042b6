"""Baseline queues for benchmarking and differential testing.

BhQueue is a bucketed queue whose nonempty bucket indices live in an indexed
binary heap (eager removal, so pop sequences match the bitmap queues bit for
bit). HeapQueue is the plain comparison-based reference; it is written in
Python on purpose so that throughput comparisons against the (also
pure-Python) bucketed queues measure the algorithms rather than the runtime.
TimingWheel releases items in slot order as a cursor sweeps a fixed horizon.
"""

from __future__ import annotations

from collections import deque

from .errors import HorizonError, RankRangeError


class _IndexedMinHeap:
    """Min-heap of distinct integers with O(log n) arbitrary removal."""

    def __init__(self):
        self._heap: list[int] = []
        self._pos: dict[int, int] = {}

    def __len__(self):
        return len(self._heap)

    def __contains__(self, value):
        return value in self._pos

    def peek(self) -> int:
        return self._heap[0]

    def push(self, value: int) -> None:
        heap = self._heap
        heap.append(value)
        self._pos[value] = len(heap) - 1
        self._sift_up(len(heap) - 1)

    def remove(self, value: int) -> None:
        pos = self._pos.pop(value)
        heap = self._heap
        last = heap.pop()
        if pos < len(heap):
            heap[pos] = last
            self._pos[last] = pos
            self._sift_down(pos)
            self._sift_up(pos)

    def _sift_up(self, pos: int) -> None:
        heap, posmap = self._heap, self._pos
        value = heap[pos]
        while pos > 0:
            parent = (pos - 1) >> 1
            if heap[parent] <= value:
                break
            heap[pos] = heap[parent]
            posmap[heap[pos]] = pos
            pos = parent
        heap[pos] = value
        posmap[value] = pos

    def _sift_down(self, pos: int) -> None:
        heap, posmap = self._heap, self._pos
        n = len(heap)
        value = heap[pos]
        while True:
            child = 2 * pos + 1
            if child >= n:
                break
            if child + 1 < n and heap[child + 1] < heap[child]:
                child += 1
            if heap[child] >= value:
                break
            heap[pos] = heap[child]
            posmap[heap[pos]] = pos
            pos = child
        heap[pos] = value
        posmap[value] = pos


class BhQueue:
    """Bucketed min-queue tracking nonempty bucket indices in a binary heap."""

    def __init__(self, num_buckets: int):
        if num_buckets <= 0:
            raise ValueError("num_buckets must be positive")
        self.num_buckets = num_buckets
        self._buckets: list[deque] = [deque() for _ in range(num_buckets)]
        self._heap = _IndexedMinHeap()
        self._len = 0

    def __len__(self):
        return self._len

    def insert(self, rank: int, item) -> None:
        if not 0 <= rank < self.num_buckets:
            raise RankRangeError(f"rank {rank} outside [0, {self.num_buckets})")
        bucket = self._buckets[rank]
        if not bucket:
            self._heap.push(rank)
        bucket.append(item)
        self._len += 1

    def min_rank(self) -> int | None:
        if self._len == 0:
            return None
        return self._heap.peek()

    def pop_min(self):
        if self._len == 0:
            return None
        rank = self._heap.peek()
        bucket = self._buckets[rank]
        item = bucket.popleft()
        if not bucket:
            self._heap.remove(rank)
        self._len -= 1
        return rank, item


class HeapQueue:
    """Comparison-based min-queue (binary heap) with FIFO tie-break."""

    def __init__(self):
        self._heap: list[tuple[int, int, object]] = []
        self._seq = 0

    def __len__(self):
        return len(self._heap)

    def insert(self, rank: int, item) -> None:
        heap = self._heap
        entry = (rank, self._seq, item)
        self._seq += 1
        heap.append(entry)
        pos = len(heap) - 1
        while pos > 0:
            parent = (pos - 1) >> 1
            if heap[parent][:2] <= entry[:2]:
                break
            heap[pos] = heap[parent]
            pos = parent
        heap[pos] = entry

    def min_rank(self) -> int | None:
        if not self._heap:
            return None
        return self._heap[0][0]

    def pop_min(self):
        heap = self._heap
        if not heap:
            return None
        rank, _, item = heap[0]
        last = heap.pop()
        n = len(heap)
        if n:
            pos = 0
            key = last[:2]
            while True:
                child = 2 * pos + 1
                if child >= n:
                    break
                if child + 1 < n and heap[child + 1][:2] < heap[child][:2]:
                    child += 1
                if heap[child][:2] >= key:
                    break
                heap[pos] = heap[child]
                pos = child
            heap[pos] = last
        return rank, item


class TimingWheel:
    """Slot array over a fixed time horizon; items release in slot order.

    Within the horizon there is no min-extraction: a slot's items come out
    only when the cursor passes the slot, FIFO within the slot.
    """

    def __init__(self, horizon_ns: int = 2_000_000_000, num_slots: int = 20_000):
        if horizon_ns <= 0 or num_slots <= 0:
            raise ValueError("horizon and slot count must be positive")
        self.num_slots = num_slots
        self.granularity = horizon_ns // num_slots
        if self.granularity <= 0:
            raise ValueError("horizon too small for slot count")
        self.horizon_ns = self.granularity * num_slots
        self._slots: list[deque] = [deque() for _ in range(num_slots)]
        self.now = 0
        self._len = 0

    def __len__(self):
        return self._len

    def insert(self, ts: int, item) -> None:
        slot_time = max(ts, self.now)
        tick = slot_time // self.granularity
        if tick - self.now // self.granularity >= self.num_slots:
            raise HorizonError(f"timestamp {ts} beyond horizon of {self.now}")
        slot = tick % self.num_slots
        self._slots[slot].append(item)
        self._len += 1

    def advance(self, now: int) -> list:
        """Move the cursor to `now`, releasing every slot with time <= now."""
        released = []
        cur = self.now // self.granularity
        target = now // self.granularity
        # a full lap covers the entire wheel; no need to loop further
        for tick in range(cur, min(target, cur + self.num_slots) + 1):
            slot = self._slots[tick % self.num_slots]
            while slot:
                released.append(slot.popleft())
                self._len -= 1
        self.now = max(self.now, now)
        return released
