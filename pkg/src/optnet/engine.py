"""Deterministic message-passing runtime for optimization networks.

A network is a set of nodes with typed input and output ports plus the
connections between them. Execution proceeds in rounds: every node with
pending input handles exactly one message per round (from its first
non-empty input port, oldest message first), handlers may run on a
thread pool, and all emitted messages are routed in a single merge step
ordered by node declaration order. Because the merge order and the
per-node random streams are independent of scheduling, a run produces
bit-identical results for any worker count.

Output ports left unconnected are sinks; whatever is emitted there is
collected and returned. An entry payload can be injected into one node
before the first round to kick off networks whose flow starts from a
stimulus rather than external input.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .errors import (
    DeadlockError,
    HandlerFailureError,
    InvalidConfigError,
    UnconnectedPortError,
)
from .payloads import PAYLOAD_KINDS


@dataclass(frozen=True)
class Port:
    name: str
    kind: str


class Node:
    """Base class for network nodes.

    Subclasses declare input_ports and output_ports (tuples of Port) and
    implement handle(port_name, payload, ctx). A node that must act
    before any message arrives implements handle_entry(payload, ctx).
    Handlers emit through ctx.emit(port_name, payload) and draw
    randomness only from ctx.rng, never from module-level generators, so
    a node's behavior depends only on its state, its messages, and its
    own stream.
    """

    input_ports: tuple[Port, ...] = ()
    output_ports: tuple[Port, ...] = ()

    def __init__(self, node_id: str):
        self.id = str(node_id)

    def handle(self, port_name: str, payload, ctx) -> None:
        raise NotImplementedError(
            f"node {self.id!r} does not handle input messages")

    def handle_entry(self, payload, ctx) -> None:
        raise NotImplementedError(
            f"node {self.id!r} does not accept an entry payload")

    def input_port(self, name: str) -> Port | None:
        for p in self.input_ports:
            if p.name == name:
                return p
        return None

    def output_port(self, name: str) -> Port | None:
        for p in self.output_ports:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class Connection:
    """Directed edge from a node's output port to a node's input port."""

    src_node: str
    src_port: str
    dst_node: str
    dst_port: str

    def __str__(self):
        return (f"{self.src_node}.{self.src_port} -> "
                f"{self.dst_node}.{self.dst_port}")


@dataclass(frozen=True)
class Message:
    """A payload in flight, stamped with its origin.

    correlation_id counts messages per source port starting at 0, so
    request/response pairs can be matched and ordering audited.
    """

    source_node: str
    source_port: str
    correlation_id: int
    kind: str
    payload: object


@dataclass(frozen=True)
class DeliveryReceipt:
    dest_node: str
    dest_port: str
    position: int  # FIFO position in the destination queue at enqueue time


@dataclass(frozen=True)
class TopologyError:
    """A structural problem found by validate(); code names the rule."""

    code: str
    detail: str

    def __str__(self):
        return f"{self.code}: {self.detail}"


@dataclass
class Topology:
    """Nodes plus connections; declaration order is the canonical order
    used for scheduling and routing."""

    nodes: list[Node] = field(default_factory=list)
    connections: list[Connection] = field(default_factory=list)

    def add(self, node: Node) -> Node:
        self.nodes.append(node)
        return node

    def connect(self, src_node: str, src_port: str, dst_node: str,
                dst_port: str) -> None:
        self.connections.append(
            Connection(src_node, src_port, dst_node, dst_port))

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def validate(self) -> list[TopologyError]:
        """Check structural rules; an empty list means the topology is
        runnable. Problems are returned, not raised, so callers can
        report all of them at once."""
        errors: list[TopologyError] = []
        by_id: dict[str, Node] = {}
        for n in self.nodes:
            if n.id in by_id:
                errors.append(TopologyError(
                    "DuplicateNodeId", f"node id {n.id!r} declared twice"))
            by_id[n.id] = n
            seen_ports: set[str] = set()
            for p in list(n.input_ports) + list(n.output_ports):
                if p.name in seen_ports:
                    errors.append(TopologyError(
                        "DuplicatePort",
                        f"port name {p.name!r} reused on node {n.id!r}"))
                seen_ports.add(p.name)
                if p.kind not in PAYLOAD_KINDS:
                    errors.append(TopologyError(
                        "UnknownKind",
                        f"port {n.id}.{p.name} declares kind {p.kind!r}"))
        writers: dict[tuple[str, str], Connection] = {}
        for c in self.connections:
            src = by_id.get(c.src_node)
            dst = by_id.get(c.dst_node)
            if src is None or src.output_port(c.src_port) is None:
                errors.append(TopologyError(
                    "MissingEndpoint",
                    f"{c}: no output port {c.src_node}.{c.src_port}"))
                continue
            if dst is None or dst.input_port(c.dst_port) is None:
                errors.append(TopologyError(
                    "MissingEndpoint",
                    f"{c}: no input port {c.dst_node}.{c.dst_port}"))
                continue
            src_kind = src.output_port(c.src_port).kind
            dst_kind = dst.input_port(c.dst_port).kind
            if src_kind != dst_kind:
                errors.append(TopologyError(
                    "KindMismatch",
                    f"{c}: {src_kind!r} flows into {dst_kind!r}"))
            key = (c.dst_node, c.dst_port)
            if key in writers:
                errors.append(TopologyError(
                    "DuplicateWriter",
                    f"input {c.dst_node}.{c.dst_port} fed by both "
                    f"{writers[key]} and {c}"))
            else:
                writers[key] = c
        return errors


@dataclass(frozen=True)
class MessageBudget:
    """Stop once exactly this many messages have been handled (the entry
    payload counts as one)."""

    limit: int


@dataclass(frozen=True)
class SinksEmitted:
    """Stop once every listed (node, port) sink has collected at least
    one payload."""

    ports: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class TraceEvent:
    round_index: int
    event: str  # "deliver" or "emit"
    node: str
    port: str
    kind: str
    correlation_id: int


class Network:
    """A validated topology with live queues.

    Message injection from outside goes through send(), which stamps
    correlation ids and returns where the message landed. run_network
    drives a Network to termination; the class is exposed separately so
    queue behavior is testable and external code can preload messages.
    """

    def __init__(self, topology: Topology):
        problems = topology.validate()
        if problems:
            raise InvalidConfigError(
                "topology is invalid: " + "; ".join(str(p) for p in problems))
        self.topology = topology
        self.route: dict[tuple[str, str], tuple[str, str]] = {}
        for c in topology.connections:
            self.route[(c.src_node, c.src_port)] = (c.dst_node, c.dst_port)
        self.queues: dict[tuple[str, str], deque[Message]] = {
            (n.id, p.name): deque() for n in topology.nodes
            for p in n.input_ports}
        self.sink_ports = [
            (n.id, p.name) for n in topology.nodes
            for p in n.output_ports if (n.id, p.name) not in self.route]
        self.sink_outputs: dict[tuple[str, str], list] = {
            p: [] for p in self.sink_ports}
        self._correlation: dict[tuple[str, str], int] = {}

    def _next_correlation(self, source: tuple[str, str]) -> int:
        cid = self._correlation.get(source, 0)
        self._correlation[source] = cid + 1
        return cid

    def send(self, source_node: str, source_port: str,
             payload) -> DeliveryReceipt:
        """Inject a message as if source_node emitted it on source_port.

        Raises UnconnectedPortError when that port has no connection;
        external sends to sink ports make no sense.
        """
        try:
            node = self.topology.node(source_node)
        except KeyError:
            raise UnconnectedPortError(
                f"unknown node {source_node!r}") from None
        port = node.output_port(source_port)
        if port is None:
            raise UnconnectedPortError(
                f"node {source_node!r} has no output port {source_port!r}")
        dst = self.route.get((source_node, source_port))
        if dst is None:
            raise UnconnectedPortError(
                f"output port {source_node}.{source_port} is not connected")
        if not PAYLOAD_KINDS[port.kind](payload):
            raise InvalidConfigError(
                f"payload {type(payload).__name__} does not match kind "
                f"{port.kind!r} of {source_node}.{source_port}")
        msg = Message(source_node, source_port,
                      self._next_correlation((source_node, source_port)),
                      port.kind, payload)
        q = self.queues[dst]
        position = len(q)
        q.append(msg)
        return DeliveryReceipt(dst[0], dst[1], position)

    def emit_from(self, node: Node, port_name: str, payload) -> None:
        """Route one handler emission: connected ports enqueue, sinks
        collect. Used by the engine's merge step."""
        port = node.output_port(port_name)
        msg = Message(node.id, port_name,
                      self._next_correlation((node.id, port_name)),
                      port.kind, payload)
        dst = self.route.get((node.id, port_name))
        if dst is None:
            self.sink_outputs[(node.id, port_name)].append(payload)
        else:
            self.queues[dst].append(msg)

    def pending(self) -> int:
        return sum(len(q) for q in self.queues.values())


@dataclass
class NetworkRun:
    """Everything a finished run reports.

    sink_outputs maps each unconnected output port to the payloads
    emitted there, in emission order. Message conservation holds:
    entry_count + messages_produced == messages_handled +
    messages_remaining + total sink payloads.
    """

    sink_outputs: dict[tuple[str, str], list]
    rounds: int
    messages_handled: int
    messages_produced: int
    messages_remaining: int
    entry_count: int
    stopped_by: str  # "budget" or "sinks"
    node_message_counts: dict[str, int]
    trace: list[TraceEvent] = field(default_factory=list)

    def sink(self, node_id: str, port_name: str) -> list:
        return self.sink_outputs.get((node_id, port_name), [])


class NodeContext:
    """Hands a handler its node's random stream and an emit buffer."""

    def __init__(self, node: Node, rng: np.random.Generator):
        self._node = node
        self.rng = rng
        self.emitted: list[tuple[str, object]] = []

    def emit(self, port_name: str, payload) -> None:
        port = self._node.output_port(port_name)
        if port is None:
            raise InvalidConfigError(
                f"node {self._node.id!r} has no output port {port_name!r}")
        if not PAYLOAD_KINDS[port.kind](payload):
            raise InvalidConfigError(
                f"payload {type(payload).__name__} does not match kind "
                f"{port.kind!r} of {self._node.id}.{port_name}")
        self.emitted.append((port_name, payload))


def run_network(topology: Topology, termination,
                entry: tuple[str, object] | None = None, seed: int = 0,
                workers: int = 1, trace: bool = False) -> NetworkRun:
    """Execute a validated topology until the termination rule fires.

    termination is a MessageBudget or SinksEmitted instance. entry, when
    given, is (node_id, payload) delivered to that node's handle_entry
    before any other message. Each node draws randomness from its own
    stream derived from (seed, node id), so results do not depend on
    scheduling or worker count.

    Raises InvalidConfigError for an invalid topology,
    UnconnectedPortError if SinksEmitted names a port that is not a
    sink, DeadlockError if the network drains with the termination rule
    unmet, and HandlerFailureError if a handler raises.
    """
    net = Network(topology)
    if workers < 1:
        raise InvalidConfigError("workers must be at least 1")
    if not isinstance(termination, (MessageBudget, SinksEmitted)):
        raise InvalidConfigError(
            "termination must be MessageBudget or SinksEmitted")
    if isinstance(termination, MessageBudget) and termination.limit < 1:
        raise InvalidConfigError("message budget must be at least 1")
    if isinstance(termination, SinksEmitted):
        for want in termination.ports:
            if tuple(want) not in net.sink_outputs:
                raise UnconnectedPortError(
                    f"termination waits on {want[0]}.{want[1]}, which is "
                    f"not an unconnected output port")

    handled = 0
    produced = 0
    entry_count = 0
    rounds = 0
    events: list[TraceEvent] = []
    node_counts = {n.id: 0 for n in topology.nodes}
    rngs = {n.id: substream(seed, "node", n.id) for n in topology.nodes}

    pending_entry: tuple[str, object] | None = None
    if entry is not None:
        entry_node, entry_payload = entry
        try:
            topology.node(entry_node)
        except KeyError:
            raise InvalidConfigError(
                f"entry node {entry_node!r} is not in the topology") from None
        pending_entry = (entry_node, entry_payload)
        entry_count = 1

    def met() -> str | None:
        if isinstance(termination, MessageBudget):
            return "budget" if handled >= termination.limit else None
        if all(len(net.sink_outputs[tuple(p)]) > 0
               for p in termination.ports):
            return "sinks"
        return None

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while True:
            reason = met()
            if reason is not None:
                return NetworkRun(net.sink_outputs, rounds, handled, produced,
                                  net.pending(), entry_count, reason,
                                  node_counts, events)

            # pick at most one message per node, in canonical order
            batch: list[tuple[Node, str | None, Message | None, object]] = []
            for n in topology.nodes:
                if pending_entry is not None and pending_entry[0] == n.id:
                    batch.append((n, None, None, pending_entry[1]))
                    pending_entry = None
                    continue
                for p in n.input_ports:
                    q = net.queues[(n.id, p.name)]
                    if q:
                        msg = q.popleft()
                        batch.append((n, p.name, msg, msg.payload))
                        break
            if not batch:
                raise DeadlockError(
                    "network drained before the termination rule was met")
            if isinstance(termination, MessageBudget):
                # deliver exactly limit messages: put the overflow back
                room = termination.limit - handled
                if len(batch) > room:
                    for n, port_name, msg, payload in batch[room:]:
                        if port_name is None:
                            pending_entry = (n.id, payload)
                        else:
                            net.queues[(n.id, port_name)].appendleft(msg)
                    batch = batch[:room]

            contexts = []
            for node, port_name, msg, payload in batch:
                ctx = NodeContext(node, rngs[node.id])
                contexts.append(ctx)
                if trace:
                    if port_name is None:
                        events.append(TraceEvent(rounds, "deliver", node.id,
                                                 "<entry>", "entry", 0))
                    else:
                        events.append(TraceEvent(
                            rounds, "deliver", node.id, port_name, msg.kind,
                            msg.correlation_id))

            def invoke(i: int) -> None:
                node, port_name, _, payload = batch[i]
                try:
                    if port_name is None:
                        node.handle_entry(payload, contexts[i])
                    else:
                        node.handle(port_name, payload, contexts[i])
                except Exception as exc:
                    raise HandlerFailureError(node.id, exc) from exc

            if pool is not None and len(batch) > 1:
                list(pool.map(invoke, range(len(batch))))
            else:
                for i in range(len(batch)):
                    invoke(i)
            handled += len(batch)
            for node, _, _, _ in batch:
                node_counts[node.id] += 1

            # deterministic merge: canonical node order, emission order
            for (node, _, _, _), ctx in zip(batch, contexts):
                for port_name, payload in ctx.emitted:
                    produced += 1
                    if trace:
                        events.append(TraceEvent(
                            rounds, "emit", node.id, port_name,
                            node.output_port(port_name).kind,
                            net._correlation.get((node.id, port_name), 0)))
                    net.emit_from(node, port_name, payload)
            rounds += 1
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
