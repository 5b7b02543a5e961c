"""
Nodes, ports, and messages
==========================

The smallest possible network: one node that splits a number into two
streams, one node that accumulates what it receives. Everything else in
this package is built from the same three pieces shown here: typed
ports, a topology, and a deterministic run loop.
"""

from optnet.engine import Node, Port, SinksEmitted, Topology, run_network


class Splitter(Node):
    """Emits each entry payload on two ports, doubled on the second."""

    input_ports = ()
    output_ports = (Port("plain", "scalar-quality"),
                    Port("doubled", "scalar-quality"))

    def handle_entry(self, payload, ctx):
        ctx.emit("plain", float(payload))
        ctx.emit("doubled", 2.0 * float(payload))


class Accumulator(Node):
    input_ports = (Port("values", "scalar-quality"),)
    output_ports = (Port("total", "scalar-quality"),)

    def __init__(self, node_id):
        super().__init__(node_id)
        self.total = 0.0

    def handle(self, port, payload, ctx):
        self.total += payload
        ctx.emit("total", self.total)


topology = Topology()
topology.add(Splitter("split"))
topology.add(Accumulator("acc"))
topology.connect("split", "plain", "acc", "values")

# "split.doubled" and "acc.total" are left unconnected, so they act as
# sinks: whatever is emitted there is collected into the run result.
problems = topology.validate()
print("validation problems:", problems)

# Run until the accumulator's sink has collected something.
run = run_network(topology, SinksEmitted((("acc", "total"),)),
                  entry=("split", 3.0), seed=0, trace=True)

print("rounds:", run.rounds)
print("messages handled:", run.messages_handled)
print("sink split.doubled:", run.sink("split", "doubled"))
print("sink acc.total:", run.sink("acc", "total"))
print("stopped by:", run.stopped_by)

# The trace records every delivery and emission in execution order.
for event in run.trace:
    print(f"  round {event.round_index}: {event.event:8s} "
          f"{event.node}.{event.port} ({event.kind})")
