"""Message-passing engine: validation, routing, scheduling, accounting."""

import pytest

from optnet.engine import (
    Connection,
    MessageBudget,
    Network,
    Node,
    NodeContext,
    Port,
    SinksEmitted,
    Topology,
    TopologyError,
    run_network,
)
from optnet.errors import (
    DeadlockError,
    HandlerFailureError,
    InvalidConfigError,
    UnconnectedPortError,
)
from optnet._rng import substream


class Producer(Node):
    output_ports = (Port("out", "scalar-quality"),)


class Consumer(Node):
    input_ports = (Port("in", "scalar-quality"),)

    def handle(self, port_name, payload, ctx):
        pass


class Echo(Node):
    """Self-loop building block: re-emits whatever arrives, plus one."""

    input_ports = (Port("in", "scalar-quality"),)
    output_ports = (Port("out", "scalar-quality"),)

    def handle_entry(self, payload, ctx):
        ctx.emit("out", payload)

    def handle(self, port_name, payload, ctx):
        ctx.emit("out", payload + 1.0)


def echo_loop():
    topo = Topology()
    topo.add(Echo("echo"))
    topo.connect("echo", "out", "echo", "in")
    return topo


# ---------------------------------------------------------------------------
# Topology validation

def codes(topo):
    return [e.code for e in topo.validate()]


def test_valid_topology_has_no_errors():
    topo = Topology()
    topo.add(Producer("p"))
    topo.add(Consumer("c"))
    topo.connect("p", "out", "c", "in")
    assert topo.validate() == []


def test_duplicate_node_id():
    topo = Topology()
    topo.add(Producer("a"))
    topo.add(Producer("a"))
    assert "DuplicateNodeId" in codes(topo)


def test_duplicate_port_name_across_directions():
    class Clashing(Node):
        input_ports = (Port("p", "scalar-quality"),)
        output_ports = (Port("p", "scalar-quality"),)

    topo = Topology()
    topo.add(Clashing("n"))
    assert "DuplicatePort" in codes(topo)


def test_unknown_payload_kind():
    class Odd(Node):
        output_ports = (Port("out", "mystery"),)

    topo = Topology()
    topo.add(Odd("n"))
    errors = topo.validate()
    assert [e.code for e in errors] == ["UnknownKind"]
    assert "mystery" in errors[0].detail


def test_missing_endpoints():
    topo = Topology()
    topo.add(Producer("p"))
    topo.add(Consumer("c"))
    topo.connect("p", "nope", "c", "in")
    topo.connect("p", "out", "c", "nope")
    topo.connect("ghost", "out", "c", "in")
    assert codes(topo) == ["MissingEndpoint"] * 3


def test_kind_mismatch():
    class MaskConsumer(Node):
        input_ports = (Port("in", "feature-mask"),)

    topo = Topology()
    topo.add(Producer("p"))
    topo.add(MaskConsumer("c"))
    topo.connect("p", "out", "c", "in")
    errors = topo.validate()
    assert [e.code for e in errors] == ["KindMismatch"]
    assert "flows into" in errors[0].detail
    assert str(errors[0]).startswith("KindMismatch: ")


def test_duplicate_writer():
    topo = Topology()
    topo.add(Producer("p1"))
    topo.add(Producer("p2"))
    topo.add(Consumer("c"))
    topo.connect("p1", "out", "c", "in")
    topo.connect("p2", "out", "c", "in")
    assert codes(topo) == ["DuplicateWriter"]


def test_network_rejects_invalid_topology():
    topo = Topology()
    topo.add(Producer("a"))
    topo.add(Producer("a"))
    with pytest.raises(InvalidConfigError, match="DuplicateNodeId"):
        Network(topo)


def test_topology_node_lookup():
    topo = Topology()
    node = topo.add(Producer("p"))
    assert topo.node("p") is node
    with pytest.raises(KeyError):
        topo.node("missing")


def test_connection_str():
    c = Connection("a", "out", "b", "in")
    assert str(c) == "a.out -> b.in"
    assert str(TopologyError("X", "y")) == "X: y"


# ---------------------------------------------------------------------------
# Network queue behavior

def test_send_receipts_and_fifo_positions():
    topo = Topology()
    topo.add(Producer("p"))
    topo.add(Consumer("c"))
    topo.connect("p", "out", "c", "in")
    net = Network(topo)
    first = net.send("p", "out", 1.0)
    second = net.send("p", "out", 2.0)
    assert (first.dest_node, first.dest_port, first.position) == ("c", "in", 0)
    assert second.position == 1
    assert net.pending() == 2
    queued = net.queues[("c", "in")]
    assert [m.correlation_id for m in queued] == [0, 1]
    assert [m.payload for m in queued] == [1.0, 2.0]


def test_send_error_cases():
    topo = Topology()
    topo.add(Producer("p"))
    topo.add(Consumer("c"))
    topo.connect("p", "out", "c", "in")
    net = Network(topo)
    with pytest.raises(UnconnectedPortError, match="unknown node"):
        net.send("ghost", "out", 1.0)
    with pytest.raises(UnconnectedPortError, match="no output port"):
        net.send("p", "sideways", 1.0)
    with pytest.raises(UnconnectedPortError, match="no output port"):
        net.send("c", "in", 1.0)  # input ports are not send sources


def test_send_to_sink_port_rejected():
    topo = Topology()
    topo.add(Producer("p"))
    net = Network(topo)  # p.out is a sink
    with pytest.raises(UnconnectedPortError, match="not connected"):
        net.send("p", "out", 1.0)


def test_send_enforces_payload_kind():
    topo = Topology()
    topo.add(Producer("p"))
    topo.add(Consumer("c"))
    topo.connect("p", "out", "c", "in")
    net = Network(topo)
    with pytest.raises(InvalidConfigError, match="scalar-quality"):
        net.send("p", "out", "not a number")
    with pytest.raises(InvalidConfigError):
        net.send("p", "out", True)  # bools are not qualities


def test_node_context_emit_validation():
    ctx = NodeContext(Producer("p"), substream(0, "t"))
    with pytest.raises(InvalidConfigError, match="no output port"):
        ctx.emit("missing", 1.0)
    with pytest.raises(InvalidConfigError, match="does not match kind"):
        ctx.emit("out", object())
    ctx.emit("out", 3.5)
    assert ctx.emitted == [("out", 3.5)]


# ---------------------------------------------------------------------------
# run_network argument validation

def test_run_network_argument_validation():
    topo = echo_loop()
    with pytest.raises(InvalidConfigError, match="workers"):
        run_network(topo, MessageBudget(3), entry=("echo", 0.0), workers=0)
    with pytest.raises(InvalidConfigError, match="termination"):
        run_network(topo, "whenever", entry=("echo", 0.0))
    with pytest.raises(InvalidConfigError, match="budget"):
        run_network(topo, MessageBudget(0), entry=("echo", 0.0))
    with pytest.raises(InvalidConfigError, match="entry node"):
        run_network(topo, MessageBudget(3), entry=("ghost", 0.0))


def test_sinks_termination_must_name_sinks():
    topo = echo_loop()  # echo.out is connected, so it is not a sink
    with pytest.raises(UnconnectedPortError, match="echo.out"):
        run_network(topo, SinksEmitted((("echo", "out"),)),
                    entry=("echo", 0.0))


# ---------------------------------------------------------------------------
# Execution semantics

def test_echo_loop_budget_accounting():
    run = run_network(echo_loop(), MessageBudget(5), entry=("echo", 0.0))
    assert run.stopped_by == "budget"
    assert run.rounds == 5
    assert run.messages_handled == 5
    assert run.messages_produced == 5
    assert run.messages_remaining == 1
    assert run.entry_count == 1
    assert run.node_message_counts == {"echo": 5}
    # entry + produced == handled + remaining + sunk
    assert 1 + 5 == 5 + 1 + 0


def test_budget_puts_batch_overflow_back():
    """With two nodes ready each round and one message of budget left,
    the second delivery must return to its queue unconsumed."""

    class Fan(Node):
        output_ports = (Port("left", "scalar-quality"),
                        Port("right", "scalar-quality"))

        def handle_entry(self, payload, ctx):
            ctx.emit("left", payload)
            ctx.emit("right", payload)

    class Relay(Node):
        input_ports = (Port("start", "scalar-quality"),
                       Port("loop", "scalar-quality"))
        output_ports = (Port("out", "scalar-quality"),)

        def handle(self, port_name, payload, ctx):
            ctx.emit("out", payload + 1.0)

    topo = Topology()
    topo.add(Fan("fan"))
    topo.add(Relay("a1"))
    topo.add(Echo("a2"))
    topo.add(Relay("b1"))
    topo.add(Echo("b2"))
    topo.connect("fan", "left", "a1", "start")
    topo.connect("fan", "right", "b1", "start")
    topo.connect("a1", "out", "a2", "in")
    topo.connect("a2", "out", "a1", "loop")
    topo.connect("b1", "out", "b2", "in")
    topo.connect("b2", "out", "b1", "loop")
    run = run_network(topo, MessageBudget(4), entry=("fan", 0.0))
    assert run.messages_handled == 4
    # round 2 has room for one of [a2, b2]; declaration order keeps a2
    assert run.node_message_counts == {"fan": 1, "a1": 1, "a2": 1,
                                       "b1": 1, "b2": 0}
    assert run.messages_produced == 5
    assert run.messages_remaining == 2
    assert run.rounds == 3
    assert (run.entry_count + run.messages_produced
            == run.messages_handled + run.messages_remaining)


def test_sinks_termination_and_collection():
    class Doubler(Node):
        input_ports = (Port("in", "scalar-quality"),)
        output_ports = (Port("twice", "scalar-quality"),)

        def handle_entry(self, payload, ctx):
            ctx.emit("twice", payload * 2.0)

    topo = Topology()
    topo.add(Doubler("d"))
    run = run_network(topo, SinksEmitted((("d", "twice"),)),
                      entry=("d", 21.0))
    assert run.stopped_by == "sinks"
    assert run.sink("d", "twice") == [42.0]
    assert run.sink("d", "absent") == []
    assert run.messages_remaining == 0
    # conservation with one sunk payload
    assert (run.entry_count + run.messages_produced
            == run.messages_handled + run.messages_remaining + 1)


def test_deadlock_when_network_drains():
    class Quiet(Node):
        output_ports = (Port("out", "scalar-quality"),)

        def handle_entry(self, payload, ctx):
            pass  # swallows the stimulus

    topo = Topology()
    topo.add(Quiet("q"))
    with pytest.raises(DeadlockError):
        run_network(topo, SinksEmitted((("q", "out"),)), entry=("q", 0.0))


def test_handler_failure_is_wrapped():
    class Broken(Node):
        input_ports = (Port("in", "scalar-quality"),)
        output_ports = (Port("out", "scalar-quality"),)

        def handle_entry(self, payload, ctx):
            ctx.emit("out", payload)

        def handle(self, port_name, payload, ctx):
            raise ValueError("boom")

    topo = Topology()
    topo.add(Broken("b"))
    topo.connect("b", "out", "b", "in")
    with pytest.raises(HandlerFailureError) as info:
        run_network(topo, MessageBudget(5), entry=("b", 0.0))
    assert info.value.node_id == "b"
    assert isinstance(info.value.original, ValueError)
    assert "boom" in str(info.value)


def build_rng_fanout():
    """Entry fans out to two transformers that each mix in their own
    random stream; both feed sinks. Exercises parallel handling."""

    class Fan(Node):
        output_ports = (Port("a", "scalar-quality"),
                        Port("b", "scalar-quality"))

        def handle_entry(self, payload, ctx):
            for _ in range(5):
                ctx.emit("a", payload)
                ctx.emit("b", payload)

    class Jitter(Node):
        input_ports = (Port("in", "scalar-quality"),)
        output_ports = (Port("out", "scalar-quality"),)

        def handle(self, port_name, payload, ctx):
            ctx.emit("out", payload + float(ctx.rng.random()))

    topo = Topology()
    topo.add(Fan("fan"))
    topo.add(Jitter("ja"))
    topo.add(Jitter("jb"))
    topo.connect("fan", "a", "ja", "in")
    topo.connect("fan", "b", "jb", "in")
    return topo


def test_worker_count_invariance():
    termination = MessageBudget(11)  # entry + 10 transforms
    solo = run_network(build_rng_fanout(), termination, entry=("fan", 1.0),
                       seed=7, workers=1)
    pooled = run_network(build_rng_fanout(), termination, entry=("fan", 1.0),
                         seed=7, workers=8)
    assert solo.sink_outputs == pooled.sink_outputs
    assert solo.rounds == pooled.rounds
    assert solo.messages_handled == pooled.messages_handled
    assert solo.messages_produced == pooled.messages_produced
    assert solo.node_message_counts == pooled.node_message_counts
    assert len(solo.sink("ja", "out")) == 5
    assert len(solo.sink("jb", "out")) == 5


def test_node_streams_depend_on_seed():
    termination = MessageBudget(11)
    first = run_network(build_rng_fanout(), termination, entry=("fan", 1.0),
                        seed=0)
    second = run_network(build_rng_fanout(), termination, entry=("fan", 1.0),
                         seed=1)
    assert first.sink("ja", "out") != second.sink("ja", "out")


def test_trace_events():
    run = run_network(echo_loop(), MessageBudget(3), entry=("echo", 0.0),
                      trace=True)
    deliveries = [e for e in run.trace if e.event == "deliver"]
    emissions = [e for e in run.trace if e.event == "emit"]
    assert deliveries[0].port == "<entry>"
    assert deliveries[0].kind == "entry"
    assert deliveries[0].round_index == 0
    assert [e.port for e in deliveries[1:]] == ["in", "in"]
    assert [e.correlation_id for e in deliveries[1:]] == [0, 1]
    assert [e.correlation_id for e in emissions] == [0, 1, 2]
    assert all(e.kind == "scalar-quality" for e in emissions)
    assert [e.round_index for e in emissions] == [0, 1, 2]


def test_trace_off_by_default():
    run = run_network(echo_loop(), MessageBudget(3), entry=("echo", 0.0))
    assert run.trace == []


def test_first_nonempty_input_port_wins():
    """A node with two input ports consumes from the first declared one
    until it is empty, preserving per-port FIFO order."""
    received = []

    class TwoIn(Node):
        input_ports = (Port("high", "scalar-quality"),
                       Port("low", "scalar-quality"))
        output_ports = (Port("seen", "scalar-quality"),)

        def handle(self, port_name, payload, ctx):
            received.append((port_name, payload))
            ctx.emit("seen", payload)

    class Feeder(Node):
        output_ports = (Port("h", "scalar-quality"),
                        Port("l", "scalar-quality"))

        def handle_entry(self, payload, ctx):
            ctx.emit("l", 1.0)
            ctx.emit("l", 2.0)
            ctx.emit("h", 10.0)
            ctx.emit("h", 20.0)

    topo = Topology()
    topo.add(Feeder("f"))
    topo.add(TwoIn("t"))
    topo.connect("f", "h", "t", "high")
    topo.connect("f", "l", "t", "low")
    run = run_network(topo, MessageBudget(5), entry=("f", 0.0))
    assert received == [("high", 10.0), ("high", 20.0), ("low", 1.0),
                        ("low", 2.0)]
    assert run.sink("t", "seen") == [10.0, 20.0, 1.0, 2.0]
