"""Programmable scheduler engine.

A scheduling tree orders flows (and subtrees) with one bucketed priority
queue per node; policy hooks re-rank a flow on enqueue and on dequeue, and a
handle-based reposition touches exactly two buckets. Every rate limit in the
hierarchy is enforced by ONE shaper: a timestamp-keyed circular queue whose
entries carry a next-stage handle, so a packet climbs its shaped ancestors
stage by stage and only becomes schedulable once the last limit has released
it. Work-conserving dequeue never consults the clock; shaping alone is
time-driven.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .bitmap_pq import FfsQueue
from .circular_pq import CffsQueue
from .errors import ConfigError, HorizonError

NS_PER_SEC = 1_000_000_000


@dataclass
class Packet:
    id: int
    flow_id: str
    size: int  # bytes
    rank: int = 0  # policy-assigned integer rank
    enqueue_ts: int = 0  # ns
    release_ts: int = 0  # ns, set when the shaper finishes with the packet

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError("packet size must be positive")


def compute_timestamp(entity, size: int, rate: float, now: int) -> int:
    """Next release timestamp for `size` bytes at `rate` bytes/sec.

    ts = max(now, entity.last_ts) + size/rate, in integer nanoseconds;
    entity.last_ts is advanced to the result.
    """
    if rate is None or rate <= 0:
        raise ConfigError("rate must be positive")
    ts = max(now, entity.last_ts) + round(size * NS_PER_SEC / rate)
    entity.last_ts = ts
    return ts


class ShaperEntry:
    __slots__ = ("packet", "ts", "next_stage")

    def __init__(self, packet, ts: int, next_stage):
        self.packet = packet
        self.ts = ts
        self.next_stage = next_stage


class Shaper:
    """Single timestamp-keyed queue serving every rate limit in a tree.

    Timestamps are quantized to bucket granularity, so an entry may release
    up to one granule before its exact timestamp, never later than the pass
    that covers it.
    """

    def __init__(self, horizon_ns: int = 2_000_000_000, num_buckets: int = 20_000):
        self.num_buckets = num_buckets
        self.granularity = horizon_ns // num_buckets
        if self.granularity <= 0:
            raise ConfigError("shaper horizon too small for bucket count")
        self._queue = CffsQueue(num_buckets)

    def __len__(self):
        return len(self._queue)

    def insert(self, packet, ts: int, next_stage) -> None:
        rank = ts // self.granularity
        if rank < self._queue.h_index:
            rank = self._queue.h_index  # past due: eligible on next pass
        elif len(self._queue) and rank >= self._queue.h_index + 2 * self.num_buckets:
            raise HorizonError(f"timestamp {ts} beyond shaper horizon")
        self._queue.insert(rank, ShaperEntry(packet, ts, next_stage))

    def release(self, now: int, handler) -> int:
        """Pop every entry with ts <= now and hand it to `handler(entry, now)`.

        The handler may re-insert at a later stage; re-insertions that are
        already due are processed within the same call.
        """
        limit = now // self.granularity
        released = 0
        while True:
            rank = self._queue.min_rank()
            if rank is None or rank > limit:
                return released
            _, entry = self._queue.pop_min()
            released += 1
            handler(entry, now)

    def next_event_time(self) -> int | None:
        rank = self._queue.min_rank()
        if rank is None:
            return None
        return rank * self.granularity


class FlowState:
    """Per-flow FIFO plus the rank fields policy hooks operate on."""

    __slots__ = ("id", "leaf", "fifo", "rank", "r_rank", "l_rank", "s_rank",
                 "reservation", "limit", "share", "last_ts", "in_flight",
                 "handle", "key", "remaining")

    def __init__(self, fid: str, leaf, reservation=None, limit=None, share=1.0):
        self.id = fid
        self.leaf = leaf
        self.fifo: deque[Packet] = deque()
        self.rank = 0.0
        self.r_rank = 0.0
        self.l_rank = 0.0
        self.s_rank = 0.0
        self.reservation = reservation
        self.limit = limit
        self.share = share
        self.last_ts = 0
        self.in_flight = 0
        self.handle = None  # position in the leaf node's queue
        self.key = None
        self.remaining = 0

    @property
    def len(self) -> int:
        return len(self.fifo)

    def front(self) -> Packet | None:
        return self.fifo[0] if self.fifo else None


class PolicyNode:
    """One node of the scheduling tree; non-leaves own a queue of children."""

    def __init__(self, node_id: str, parent=None, share: float = 1.0,
                 reservation: float | None = None, limit: float | None = None,
                 num_buckets: int = 1024, granularity: float = 1.0):
        self.id = node_id
        self.parent = parent
        self.children: list[PolicyNode] = []
        self.share = share
        self.reservation = reservation
        self.limit = limit
        self.num_buckets = num_buckets
        self.granularity = granularity
        self.queue = FfsQueue(num_buckets)
        self.last_ts = 0  # shaper timestamp state when this node is rate limited
        self.handle = None
        self.key = None

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class TreeStats:
    enqueued: int = 0
    dequeued: int = 0
    shaped: int = 0
    deferred: int = 0
    released: int = 0


class SchedulerTree:
    """Scheduling-transaction tree with per-flow ranking, on-dequeue
    re-ranking, and one decoupled shaper for every rate limit."""

    def __init__(self, root: PolicyNode, policy, flow_leaf: dict[str, str],
                 shaper: Shaper | None = None, flow_cap: int | None = None,
                 flow_params: dict[str, dict] | None = None):
        self.root = root
        self.policy = policy
        self.shaper = shaper if shaper is not None else Shaper()
        self.flow_cap = flow_cap
        self.nodes: dict[str, PolicyNode] = {}
        self._index_nodes(root)
        self.flows: dict[str, FlowState] = {}
        params = flow_params or {}
        for fid, leaf_id in flow_leaf.items():
            leaf = self.nodes.get(leaf_id)
            if leaf is None or not leaf.is_leaf:
                raise ConfigError(f"flow {fid} maps to unknown or non-leaf node {leaf_id}")
            self.flows[fid] = FlowState(fid, leaf, **params.get(fid, {}))
        # shaped ancestor chain (leaf upward) per leaf, root pacing last
        self._chains: dict[str, list[PolicyNode]] = {}
        for node in self.nodes.values():
            if node.is_leaf:
                chain, cur = [], node
                while cur is not None:
                    if cur.limit is not None:
                        chain.append(cur)
                    cur = cur.parent
                self._chains[node.id] = chain
        self.stats = TreeStats()

    def _index_nodes(self, node: PolicyNode) -> None:
        if node.id in self.nodes:
            raise ConfigError(f"duplicate node id {node.id}")
        self.nodes[node.id] = node
        for child in node.children:
            self._index_nodes(child)

    # -- enqueue path ------------------------------------------------------

    def enqueue(self, packet: Packet, now: int = 0) -> bool:
        """Admit a packet; returns False (backpressure) when the flow cap
        would be exceeded. Shaped packets detour through the shaper before
        becoming schedulable."""
        flow = self.flows.get(packet.flow_id)
        if flow is None:
            raise ConfigError(f"unknown flow {packet.flow_id}")
        if self.flow_cap is not None and flow.in_flight >= self.flow_cap:
            self.stats.deferred += 1
            return False
        packet.enqueue_ts = now
        flow.in_flight += 1
        self.stats.enqueued += 1
        chain = self._chains[flow.leaf.id]
        if chain:
            self.stats.shaped += 1
            node = chain[0]
            ts = compute_timestamp(node, packet.size, node.limit, now)
            self.shaper.insert(packet, ts, (flow, 1))
        else:
            packet.release_ts = now
            self._deliver(flow, packet)
        return True

    def _deliver(self, flow: FlowState, packet: Packet) -> None:
        flow.fifo.append(packet)
        self.policy.on_enqueue(flow, packet)
        self._reposition(flow)

    # -- shaper ------------------------------------------------------------

    def _on_shaper_release(self, entry: ShaperEntry, now: int) -> None:
        flow, stage = entry.next_stage
        chain = self._chains[flow.leaf.id]
        if stage < len(chain):
            node = chain[stage]
            ts = compute_timestamp(node, entry.packet.size, node.limit, now)
            self.shaper.insert(entry.packet, ts, (flow, stage + 1))
        else:
            entry.packet.release_ts = max(now, entry.ts)
            self._deliver(flow, entry.packet)

    def shaper_release(self, now: int) -> int:
        n = self.shaper.release(now, self._on_shaper_release)
        self.stats.released += n
        return n

    def next_event_time(self) -> int | None:
        return self.shaper.next_event_time()

    # -- dequeue path ------------------------------------------------------

    def _reposition(self, flow: FlowState) -> None:
        """Move a flow to the bucket matching its current policy key, then
        refresh rank-of-min-child entries up the tree."""
        leaf = flow.leaf
        key = self.policy.key(flow, leaf.num_buckets)
        if key == flow.key and flow.handle is not None:
            self._update_ancestors(leaf)
            return
        if flow.handle is not None:
            leaf.queue.remove(flow.handle)
            flow.handle = None
        if key is not None:
            flow.handle = leaf.queue.insert(key, flow)
        flow.key = key
        self._update_ancestors(leaf)

    def _update_ancestors(self, node: PolicyNode) -> None:
        while node.parent is not None:
            parent = node.parent
            key = node.queue.min_rank()
            if key == node.key and (key is None) == (node.handle is None):
                return
            if node.handle is not None:
                parent.queue.remove(node.handle)
                node.handle = None
            if key is not None:
                node.handle = parent.queue.insert(key, node)
            node.key = key
            node = parent

    def _pick_flow(self) -> FlowState | None:
        node = self.root
        while True:
            head = node.queue.peek_min()
            if head is None:
                return None
            obj = head[1]
            if isinstance(obj, FlowState):
                return obj
            node = obj

    def dequeue(self, now: int = 0) -> Packet | None:
        """Pop the next packet work-conservingly; None when nothing is
        schedulable (shaped packets still in flight do not count)."""
        flow = self._pick_flow()
        if flow is None:
            return None
        packet = flow.fifo.popleft()
        flow.in_flight -= 1
        self.stats.dequeued += 1
        self.policy.on_dequeue(flow, packet)
        self._reposition(flow)
        return packet

    def dequeue_batch(self, now: int = 0, max_bytes: int = 10_240) -> list[Packet]:
        """Serve one flow turn, aggregating packets up to max_bytes of
        payload (0 means one packet per turn)."""
        flow = self._pick_flow()
        if flow is None:
            return []
        out = []
        total = 0
        while flow.fifo:
            packet = flow.fifo.popleft()
            flow.in_flight -= 1
            self.stats.dequeued += 1
            self.policy.on_dequeue(flow, packet)
            out.append(packet)
            total += packet.size
            if total >= max_bytes:
                break
        self._reposition(flow)
        return out

    # -- introspection -----------------------------------------------------

    def pending(self) -> int:
        """Packets admitted but not yet dequeued (fifos plus shaper)."""
        return sum(f.in_flight for f in self.flows.values())

    def schedulable(self) -> bool:
        return self.root.queue.min_rank() is not None
