"""
Assembly of an R-GNN from switched networks.

A node's vector is laid out as `[n, k, rbe(Z), boot, ready, message]`, then
one block per switched network, then `[result, finished]`. One recurrence
applies the MLP to the node's vector, the sum of its neighbors' vectors
and, for global readout, the sum over all nodes:

1. a prelude feeds the synchronizer its external inputs,
2. every block takes one step in parallel,
3. the routing layers move values between blocks and raise switches,
4. the neighbor (and global) sums are dropped.

Per iteration of the sum-aggregation algorithm, a node converts the summed
messages to quaternary, runs the machine on its two stacks, reads the
finished flag and result off stack 1, and converts stack 2 back to the
binary message. The synchronizer starts the next iteration once every node
of the component is idle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Literal

from rgnn_compiler.encodings import encode_rq, tuple_encode
from rgnn_compiler.errors import MissingProgram
from rgnn_compiler.mlp.code import Lin, MlpCode, V
from rgnn_compiler.mlp.listings import (
    binary_to_quaternary_network,
    concat_network,
    initial_message_network,
    message_width_network,
    quaternary_to_binary_network,
    result_reader_network,
    synchronizer,
    unary_prefix_network,
)
from rgnn_compiler.mlp.machine import compile_stack_machine, switched_machine
from rgnn_compiler.mlp.network import Layer, Mlp, identity_layer, parallel
from rgnn_compiler.mlp.switched import SwitchedCode
from rgnn_compiler.utils.params import get_setting

if TYPE_CHECKING:
    from rgnn_compiler.algorithms import SMpGa
    from rgnn_compiler.mlp.network import Number
    from rgnn_compiler.mlp.switched import SwitchedNetwork

logger = logging.getLogger(__name__)

Mode = Literal["full", "hybrid"]

HEAD = ("n", "k", "zb", "boot", "ready", "msg")
TAIL = ("result", "finished")
STATE_PREFIX = "0100"


def machine_port() -> SwitchedNetwork:
    """
    Stand-in for the compiled machine in hybrid runs.

    The runner fills `pend0`, `pend1` and `countdown` when the switch rises;
    the port then turns off after `countdown` recurrences with the pending
    stacks as outputs, exactly when the compiled machine would.

    Returns
    -------
    SwitchedNetwork
        Same outer layout as the wrapped machine.
    """
    c = SwitchedCode("machine-port", ["in0", "in1"], ["out0", "out1"])
    for name in ("pend0", "pend1", "countdown"):
        c.state(name)
    c.var("near")
    c.lsig("near", 2 - V("countdown"))
    c.var("fin")
    c.relu("fin", V("switch") + V("near") - 1)
    c.set_if("out0", "fin", "pend0")
    c.set_if("out1", "fin", "pend1")
    c.let("countdown", V("countdown") - V("switch"))
    c.finish("fin")
    return c.build()


@dataclass(frozen=True)
class AssembledRgnn:
    """
    One assembled network with its layout.

    Attributes
    ----------
    mode
        "full" embeds the compiled machine; "hybrid" embeds `machine_port`.
    network
        The MLP from 2d (3d with global readout) inputs to d outputs.
    names
        Qualified dimension names, `block.variable` inside blocks.
    initial
        The vector A, the node vector without its first three entries.
    global_readout
        Whether the network takes the global sum as a third input.
    width_factor
        Factor of the message width W = width_factor 3 max(k, 1) n^4.
    blocks
        Dimension range `(start, stop)` of every embedded block.
    """

    mode: Mode
    network: Mlp
    names: tuple[str, ...]
    initial: tuple[Number, ...]
    global_readout: bool
    width_factor: int = 1
    blocks: dict[str, tuple[int, int]] = field(default_factory=dict, hash=False)

    def width(self, k: int, n: int) -> int:
        """Message width W in bits."""
        return self.width_factor * 3 * max(k, 1) * n**4

    @property
    def d(self) -> int:
        """Node vector dimension."""
        return len(self.names)

    def index(self, name: str) -> int:
        """Position of a named dimension."""
        return self.names.index(name)

    def initial_state(self, n: int, k: int, zb: Fraction) -> tuple[Number, ...]:
        """The node vector (n, k, rbe(Z), A)."""
        return (Fraction(n), Fraction(k), Fraction(zb), *self.initial)


@dataclass(frozen=True)
class Rgnn:
    """
    A compiled sum-aggregation algorithm.

    Attributes
    ----------
    algorithm
        The source algorithm.
    networks
        The assembled network per mode.
    """

    algorithm: SMpGa
    networks: dict[str, AssembledRgnn]

    def network(self, mode: Mode | None = None) -> AssembledRgnn:
        """The network for a mode, "full" when available by default."""
        if mode is None:
            mode = "full" if "full" in self.networks else "hybrid"
        if mode not in self.networks:
            raise MissingProgram(
                f"No {mode} network for {self.algorithm.step.name!r}; "
                "full mode needs a stack program"
            )
        return self.networks[mode]


def assemble_rgnn(algorithm: SMpGa, modes: tuple[Mode, ...] | None = None) -> Rgnn:
    """
    Compile a sum-aggregation algorithm into an R-GNN.

    Parameters
    ----------
    algorithm
        The algorithm.
    modes
        Modes to assemble. By default "hybrid", plus "full" when the step
        has a stack program.

    Returns
    -------
    Rgnn
        The assembled networks.
    """
    program = algorithm.step.program
    if modes is None:
        modes = ("full", "hybrid") if program is not None else ("hybrid",)
    networks = {}
    for mode in modes:
        if mode == "full":
            if program is None:
                raise MissingProgram(f"Step {algorithm.step.name!r} has no stack program")
            machine = switched_machine(compile_stack_machine(program))
        else:
            machine = machine_port()
        networks[mode] = _assemble(algorithm, mode, machine)
    return Rgnn(algorithm, networks)


def _blocks(algorithm: SMpGa, machine: SwitchedNetwork) -> list[tuple[str, object]]:
    factor = algorithm.width_factor or get_setting("width_factor")
    blocks: list[tuple[str, object]] = [
        ("width", message_width_network(3 * factor)),
        ("feature", binary_to_quaternary_network()),
        ("prefix", unary_prefix_network()),
        ("init", initial_message_network()),
        ("receive", binary_to_quaternary_network()),
    ]
    if algorithm.global_readout:
        blocks += [("receive_all", binary_to_quaternary_network()), ("concat", concat_network())]
    blocks += [
        ("machine", machine),
        ("reader", result_reader_network()),
        ("send", quaternary_to_binary_network()),
        ("sync", synchronizer()),
    ]
    return blocks


def _assemble(algorithm: SMpGa, mode: Mode, machine: SwitchedNetwork) -> AssembledRgnn:
    factor = algorithm.width_factor or get_setting("width_factor")
    names: list[str] = list(HEAD)
    initial: list[Number] = [0] * len(HEAD)
    initial[HEAD.index("boot")] = 1
    cores: list[Mlp] = [Mlp((identity_layer(len(HEAD)),))]
    switched: list[str] = []
    ranges: dict[str, tuple[int, int]] = {}
    for block, net in _blocks(algorithm, machine):
        start = len(names)
        if isinstance(net, MlpCode):
            names += [f"{block}.{k}" for k in net.names]
            initial += net.initial_vector()
            cores.append(net.compile().core)
        else:
            names += [f"{block}.{k}" for k in net.dim_names]
            initial += net.initial
            cores.append(net.network.core)
            switched.append(block)
        ranges[block] = (start, len(names))
    names += TAIL
    initial += [0] * len(TAIL)
    cores.append(Mlp((identity_layer(len(TAIL)),)))

    d = len(names)
    sums = ["nb." + k for k in names]
    if algorithm.global_readout:
        sums += ["all." + k for k in names]
    cores.append(Mlp((identity_layer(len(sums)),)))
    everything = names + sums

    prelude = _prelude(everything, switched)
    body = parallel(*cores)
    routing = _routing(everything, algorithm)
    projection = Layer(len(everything), tuple(((i, 1),) for i in range(d)), (0,) * d)
    network = Mlp(
        prelude.compile().core.layers
        + body.layers
        + routing.compile().core.layers
        + (projection,)
    )
    logger.info(
        "Assembled %s R-GNN for %r: d = %d, depth %d, %d weights",
        mode,
        algorithm.step.name,
        d,
        network.depth,
        network.size,
    )
    return AssembledRgnn(
        mode,
        network,
        tuple(names),
        tuple(initial[3:]),
        algorithm.global_readout,
        factor,
        ranges,
    )


def _declare(name: str, everything: list[str]) -> MlpCode:
    code = MlpCode(name)
    for k in everything:
        code.state(k)
    return code


def _prelude(everything: list[str], switched: list[str]) -> MlpCode:
    """Synchronizer inputs: N = n + 1, neighbors' flags, and the busy flag."""
    c = _declare("prelude", everything)
    c.let("sync.N", V("n") + 1)
    c.let("sync.neighbors", V("nb.sync.flag"))
    activity = sum(
        (V(f"{b}.switch") + V(f"{b}.turned_off") for b in switched), Lin()
    )
    c.lsig("sync.busy", activity + 1 - V("ready"))
    return c


def _routing(everything: list[str], algorithm: SMpGa) -> MlpCode:
    """Move results between blocks and raise switches."""
    c = _declare("routing", everything)
    code_a = tuple_encode((algorithm.initial_state,))

    # boot: width, then feature conversion, unary prefix and initial message
    c.var("kk")
    c.relu("kk", V("k") - 1)
    c.let("width.switch", V("width.switch") + V("boot"))
    c.let("boot", Lin())
    c.let("width.k", V("kk") + 1)
    c.let("width.n", V("n"))
    c.let("feature.switch", V("feature.switch") + V("width.turned_off"))
    c.let("feature.length", V("k"))
    c.let("feature.x", V("zb"))
    c.let("prefix.switch", V("prefix.switch") + V("feature.turned_off"))
    c.let("prefix.count", V("n"))
    c.var("tail")
    c.lsig("tail", encode_rq(code_a) + V("feature.q") / 4 ** len(code_a))
    c.set_if("prefix.tail", "feature.turned_off", "tail")
    c.var("stack")
    c.lsig("stack", encode_rq(STATE_PREFIX) + V("prefix.q") / 4 ** len(STATE_PREFIX))
    c.set_if("machine.out0", "prefix.turned_off", "stack")
    c.let("init.switch", V("init.switch") + V("prefix.turned_off"))
    c.relu("init.total", V("width.width") - V("k"))
    c.let("init.at", V("kk") + 1 + V("n") - V("k"))
    c.let("init.z", V("zb"))
    c.set_if("msg", "init.turned_off", "init.m")

    # iteration start: sums of messages to quaternary
    c.var("go")
    c.relu("go", V("sync.start") + V("ready") - 1)
    c.let("ready", V("ready") + V("init.turned_off"))
    c.let("receive.switch", V("receive.switch") + V("go"))
    c.let("receive.length", V("width.width"))
    c.set_if("receive.x", "go", "nb.msg")
    received = "receive.turned_off"
    if algorithm.global_readout:
        c.let("receive_all.switch", V("receive_all.switch") + V("receive.turned_off"))
        c.let("receive_all.length", V("width.width"))
        c.set_if("receive_all.x", "go", "all.msg")
        c.let("concat.switch", V("concat.switch") + V("receive_all.turned_off"))
        c.set_if("concat.head", "receive_all.turned_off", "receive.q")
        c.set_if("concat.tail", "receive_all.turned_off", "receive_all.q")
        c.let("concat.length", V("width.width"))
        received = "concat.turned_off"
    stack2 = "concat.q" if algorithm.global_readout else "receive.q"

    # machine, then result reader, then message
    c.let("machine.switch", V("machine.switch") + V(received))
    c.set_if("machine.in0", received, "machine.out0")
    c.set_if("machine.in1", received, stack2)
    c.let("reader.switch", V("reader.switch") + V("machine.turned_off"))
    c.set_if("reader.q", "machine.turned_off", "machine.out0")
    c.let("send.switch", V("send.switch") + V("reader.turned_off"))
    c.set_if("send.q", "reader.turned_off", "machine.out1")
    c.set_if("msg", "send.turned_off", "send.b")

    c.var("latch")
    c.relu("latch", V("reader.turned_off") + V("reader.flag") - V("finished") - 1)
    c.set_if("result", "latch", "reader.result")
    c.let("finished", V("finished") + V("latch"))
    return c
