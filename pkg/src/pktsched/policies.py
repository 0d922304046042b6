"""Reference scheduling policies.

LQF, pFabric, and FIFO are hook pairs plugged into the scheduler tree: the
engine appends to the flow FIFO, calls on_enqueue/on_dequeue, and asks key()
where the flow now belongs in its leaf queue. hClock needs three virtual-time
ranks per flow and an eligibility clock, so it ships as its own scheduler
built on the same circular queues.
"""

from __future__ import annotations

import math
from collections import deque

from .circular_pq import CffsQueue
from .core import FlowState, Packet, compute_timestamp
from .errors import ConfigError

NS_PER_SEC = 1_000_000_000


class FifoPolicy:
    """Global FIFO: flows keyed by the arrival order of their head packet."""

    queue_type = "hffs"

    def __init__(self):
        self._seq = 0

    def on_enqueue(self, flow: FlowState, packet: Packet) -> None:
        packet.rank = self._seq
        self._seq += 1

    def on_dequeue(self, flow: FlowState, packet: Packet) -> None:
        pass

    def key(self, flow: FlowState, num_buckets: int):
        front = flow.front()
        if front is None:
            return None
        return front.rank % num_buckets


class LqfPolicy:
    """Longest Queue First: f.rank = f.len on both hooks, max-orientation
    (ranks are mirrored into the min-queue)."""

    queue_type = "hffs"

    def on_enqueue(self, flow: FlowState, packet: Packet) -> None:
        flow.rank = flow.len

    def on_dequeue(self, flow: FlowState, packet: Packet) -> None:
        flow.rank = flow.len

    def key(self, flow: FlowState, num_buckets: int):
        if flow.len == 0:
            return None
        return num_buckets - 1 - min(int(flow.rank), num_buckets - 1)


class PfabricPolicy:
    """Shortest-remaining-first: p.rank carries the flow's remaining size at
    packet creation; f.rank tracks the policy's min rule, min-orientation."""

    queue_type = "hffs"
    SENTINEL = math.inf

    def on_enqueue(self, flow: FlowState, packet: Packet) -> None:
        if flow.len == 1:
            flow.rank = packet.rank
        else:
            flow.rank = min(packet.rank, flow.rank)

    def on_dequeue(self, flow: FlowState, packet: Packet) -> None:
        front = flow.front()
        if front is None:
            flow.rank = self.SENTINEL
        else:
            flow.rank = min(packet.rank, front.rank)

    def key(self, flow: FlowState, num_buckets: int):
        if flow.len == 0:
            return None
        return min(int(flow.rank), num_buckets - 1)


def pacing_timestamp(flow: FlowState, packet: Packet, now: int,
                     pacing_rate: float | None = None) -> int | None:
    """Shaper timestamp for a paced flow: the stricter of the flow's
    configured max rate and a transport-supplied pacing rate. Returns None
    (unshaped passthrough) when neither rate is set."""
    rates = [r for r in (flow.limit, pacing_rate) if r is not None and r > 0]
    if not rates:
        return None
    return compute_timestamp(flow, packet.size, min(rates), now)


class HClockFlow(FlowState):
    """Flow with reservation / limit / share virtual-time tags per packet."""

    __slots__ = ("tags",)

    def __init__(self, fid, reservation=None, limit=None, share=1.0):
        if reservation is not None and limit is not None and reservation > limit:
            raise ConfigError(f"flow {fid}: reservation exceeds limit")
        if share <= 0:
            raise ConfigError(f"flow {fid}: share must be positive")
        super().__init__(fid, leaf=None, reservation=reservation,
                         limit=limit, share=share)
        self.tags: deque[tuple[float, float, float]] = deque()

    def head_tags(self):
        return self.tags[0]


class HClockScheduler:
    """Hierarchical-clock scheduler: reservations first, then proportional
    shares, with per-flow rate limits always binding.

    Each packet carries start tags (r, l, s): the cumulative virtual time of
    its flow's reservation, limit, and share clocks at enqueue. pick(now)
    phase 1 serves the minimum r-tag among flows whose head r and l tags have
    both come due; phase 2 falls back to the minimum s-tag among flows whose
    head l tag has come due. Flows live in circular queues keyed by quantized
    tags; the l-constraint is checked by popping ineligible heads into a
    stash and restoring them after the pick.
    """

    GRANULARITY_NS = 1_000  # 1 us rank buckets

    # nominal byte rate a share of 1.0 corresponds to; shares are relative,
    # so any positive scale preserves ordering, but anchoring them near link
    # speed keeps the share virtual clock on the same timescale as the
    # reservation/limit clocks (and within the circular queues' windows)
    SHARE_RATE = 12_500_000.0  # bytes/sec

    def __init__(self, num_buckets: int = 20_000):
        self.flows: dict[str, HClockFlow] = {}
        self._r_queue = CffsQueue(num_buckets)
        self._s_queue = CffsQueue(num_buckets)

    def add_flow(self, fid: str, reservation=None, limit=None, share=1.0) -> HClockFlow:
        if fid in self.flows:
            raise ConfigError(f"duplicate flow {fid}")
        flow = HClockFlow(fid, reservation, limit, share)
        self.flows[fid] = flow
        return flow

    def _quantize(self, tag_ns: float) -> int:
        return max(0, int(tag_ns // self.GRANULARITY_NS))

    def enqueue(self, packet: Packet, now: int = 0) -> None:
        flow = self.flows.get(packet.flow_id)
        if flow is None:
            raise ConfigError(f"unknown flow {packet.flow_id}")
        if flow.share is None or flow.share <= 0:
            raise ConfigError(f"flow {flow.id}: missing share parameter")
        if flow.len == 0:
            # idle catch-up: a reactivating flow gets no accumulated credit
            flow.r_rank = max(flow.r_rank, float(now))
            flow.l_rank = max(flow.l_rank, float(now))
            active = [f.head_tags()[2] for f in self.flows.values() if f.len]
            if active:
                flow.s_rank = max(flow.s_rank, min(active))
        r_tag = flow.r_rank if flow.reservation else math.inf
        l_tag = flow.l_rank if flow.limit else 0.0
        s_tag = flow.s_rank
        size = packet.size
        if flow.reservation:
            flow.r_rank += size * NS_PER_SEC / flow.reservation
        if flow.limit:
            flow.l_rank += size * NS_PER_SEC / flow.limit
        flow.s_rank += size * NS_PER_SEC / (flow.share * self.SHARE_RATE)
        flow.fifo.append(packet)
        flow.tags.append((r_tag, l_tag, s_tag))
        if flow.len == 1:
            self._enqueue_flow(flow)

    def _enqueue_flow(self, flow: HClockFlow) -> None:
        r_tag, _, s_tag = flow.head_tags()
        if math.isfinite(r_tag):
            self._insert(self._r_queue, r_tag, flow)
        self._insert(self._s_queue, s_tag, flow)

    def _insert(self, queue: CffsQueue, tag: float, flow: HClockFlow) -> None:
        queue.insert(max(self._quantize(tag), queue.h_index), flow)

    def _pick_from(self, queue: CffsQueue, now: int, need_r: bool):
        """Pop heads until one is eligible at `now`; restore the rest."""
        now_ns = float(now)
        stash = []
        chosen = None
        while len(queue):
            rank, flow = queue.peek_min()
            if flow.len == 0:  # lazily discard entries for drained flows
                queue.pop_min()
                continue
            r_tag, l_tag, _ = flow.head_tags()
            if need_r and rank * self.GRANULARITY_NS > now_ns:
                break  # min tag not yet due; nothing later can be due either
            if l_tag <= now_ns and (not need_r or r_tag <= now_ns):
                chosen = flow
                break
            stash.append(queue.pop_min())
        for rank, flow in stash:
            queue.insert(max(rank, queue.h_index), flow)
        return chosen

    def pick(self, now: int):
        """Flow to serve at `now`, or None if every limit binds."""
        flow = self._pick_from(self._r_queue, now, need_r=True)
        if flow is None:
            flow = self._pick_from(self._s_queue, now, need_r=False)
        return flow

    def dequeue(self, now: int) -> Packet | None:
        flow = self.pick(now)
        if flow is None:
            return None
        packet = flow.fifo.popleft()
        flow.tags.popleft()
        self._remove_flow_entries(flow)
        if flow.len:
            self._enqueue_flow(flow)
        return packet

    def _remove_flow_entries(self, flow: HClockFlow) -> None:
        # entries are keyed by head tags; after serving the head both queues
        # must be re-keyed. The circular queues have no handle removal, so we
        # pop until the flow's entry surfaces and restore the rest.
        queues = [self._s_queue]
        if flow.reservation:
            queues.append(self._r_queue)
        for queue in queues:
            stash = []
            while len(queue):
                rank, f = queue.peek_min()
                queue.pop_min()
                if f is flow:
                    break
                stash.append((rank, f))
            for rank, f in stash:
                queue.insert(max(rank, queue.h_index), f)

    def next_eligible_time(self, now: int) -> int | None:
        """Earliest future time any pending flow becomes servable (the share
        phase needs only the head limit tag to come due)."""
        best = None
        for flow in self.flows.values():
            if flow.len == 0:
                continue
            t = max(flow.head_tags()[1], float(now))
            if best is None or t < best:
                best = t
        if best is None:
            return None
        return int(math.ceil(best))

    def backlog(self) -> int:
        return sum(f.len for f in self.flows.values())
