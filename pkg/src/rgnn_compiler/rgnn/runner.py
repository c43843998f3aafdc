"""
Simulation of assembled R-GNNs on featured graphs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, log2
from typing import TYPE_CHECKING

import numpy as np

from rgnn_compiler.encodings import decode_rb, decode_rq, encode_rb, encode_rq
from rgnn_compiler.errors import (
    DimensionMismatch,
    DisconnectedInput,
    MaxStepsExceeded,
    MessageBoundExceeded,
    MissingProgram,
    NotInRB,
)
from rgnn_compiler.machines import pair_encode, run_stack_program, split_tape
from rgnn_compiler.mlp.network import Layer, Mlp
from rgnn_compiler.utils.params import get_setting

if TYPE_CHECKING:
    from collections.abc import Sequence

    from rgnn_compiler.algorithms import SMpGa
    from rgnn_compiler.graphs import FeaturedGraph
    from rgnn_compiler.mlp.network import Number
    from rgnn_compiler.rgnn.assembler import AssembledRgnn, Mode, Rgnn

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunStats:
    """
    Time and space measures of one run.

    Attributes
    ----------
    finished_at
        I_v, the first recurrence with the finished dimension at 1.
    bit_lengths
        L(G, v), the largest bit length of a weight or of a value of the
        node's vector over the run.
    recurrences
        Recurrences simulated.
    starts
        Recurrences at which each node started an iteration of the
        sum-aggregation algorithm.
    max_message_bits
        Largest number of binary digits of a message dimension.
    stable
        Whether the result and finished dimensions kept their values after
        I_v at every node.
    """

    finished_at: tuple[int, ...]
    bit_lengths: tuple[int, ...]
    recurrences: int
    starts: tuple[tuple[int, ...], ...]
    max_message_bits: int
    stable: bool

    @property
    def time(self) -> int:
        """T(G), the largest I_v."""
        return max(self.finished_at, default=0)

    @property
    def space(self) -> int:
        """L(G), the sum of L(G, v)."""
        return sum(self.bit_lengths)


@dataclass(frozen=True)
class RgnnRun:
    """
    Result of an R-GNN run.

    Attributes
    ----------
    outputs
        Decoded result per node.
    stats
        Time and space measures.
    final
        Node vectors at the last recurrence.
    messages
        Message dimension per recurrence and node, when recorded.
    """

    outputs: tuple[str, ...]
    stats: RunStats
    final: tuple[tuple[Number, ...], ...]
    messages: tuple[tuple[Number, ...], ...] | None = None


def decode_result(value: Number) -> str:
    """
    Decode the result dimension rbe(y 1) into y.

    Parameters
    ----------
    value
        The result dimension.

    Returns
    -------
    str
        The bitstring y.
    """
    q = Fraction(value)
    length = q.denominator.bit_length() - 1
    if q <= 0 or q.denominator != 1 << length:
        raise NotInRB(f"Result dimension {q} is not rbe(y1) for any y")
    return decode_rb(q, length)[:-1]


def bit_length(value: Number) -> int:
    """Bits of numerator and denominator together."""
    q = Fraction(value)
    return q.numerator.bit_length() + q.denominator.bit_length()


def parameter_bits(network: Mlp) -> int:
    """Largest bit length of a weight or bias."""
    return max(
        (
            bit_length(w)
            for layer in network.layers
            for row, b in zip(layer.rows, layer.bias)
            for w in (b, *(w for _, w in row))
        ),
        default=0,
    )


def run_rgnn(
    rgnn: Rgnn,
    graph: FeaturedGraph,
    mode: Mode | None = None,
    max_steps: int | None = None,
    record_messages: bool = False,
    extra_steps: int = 0,
) -> RgnnRun:
    """
    Run an R-GNN until every node is finished.

    Every recurrence applies F to each node's vector and the sum of its
    neighbors' vectors (and the sum over all nodes when the network has
    global readout). In hybrid mode the machine block is a port: when its
    switch rises the runner executes the step function directly and loads
    the result together with the machine's step count, so the port turns
    off on the same recurrence as the compiled machine would.

    Parameters
    ----------
    rgnn
        The compiled algorithm.
    graph
        The graph.
    mode
        "full" or "hybrid"; by default full when assembled.
    max_steps
        Recurrence cap.
    record_messages
        Keep the message dimension of every recurrence.
    extra_steps
        Recurrences simulated after the last node finished, for stability
        checks.

    Returns
    -------
    RgnnRun
        Outputs, statistics and the final vectors.
    """
    return simulate(
        rgnn.network(mode),
        graph,
        rgnn.algorithm,
        max_steps=max_steps,
        record_messages=record_messages,
        extra_steps=extra_steps,
    )


def run_rgnn_global(
    rgnn: Rgnn,
    graph: FeaturedGraph,
    mode: Mode | None = None,
    max_steps: int | None = None,
) -> RgnnRun:
    """
    Run an R-GNN with global readout.

    Parameters
    ----------
    rgnn
        An R-GNN assembled from an algorithm with global readout.
    graph
        The graph.
    mode
        "full" or "hybrid".
    max_steps
        Recurrence cap.

    Returns
    -------
    RgnnRun
        Outputs and statistics.
    """
    if not rgnn.algorithm.global_readout:
        raise DimensionMismatch(
            f"{rgnn.algorithm.step.name!r} was not assembled with global readout"
        )
    return run_rgnn(rgnn, graph, mode, max_steps)


def simulate(
    network: AssembledRgnn,
    graph: FeaturedGraph,
    algorithm: SMpGa | None = None,
    max_steps: int | None = None,
    record_messages: bool = False,
    extra_steps: int = 0,
) -> RgnnRun:
    """
    Simulate one assembled network.

    Parameters
    ----------
    network
        The assembled network.
    graph
        The graph.
    algorithm
        The source algorithm, required in hybrid mode.
    max_steps
        Recurrence cap.
    record_messages
        Keep the message dimension of every recurrence.
    extra_steps
        Recurrences simulated after the last node finished.

    Returns
    -------
    RgnnRun
        Outputs, statistics and the final vectors.
    """
    if network.mode == "hybrid" and algorithm is None:
        raise MissingProgram("A hybrid network needs its algorithm to run the machine port")
    n, k = graph.n, graph.k
    width = network.width(k, n)
    if max_steps is None:
        max_steps = _default_cap(network, n, k, algorithm)
    at = network.index
    msg, result, finished = at("msg"), at("result"), at("finished")
    start, ready = at("sync.start"), at("ready")
    port = _Port(network, algorithm, width) if network.mode == "hybrid" else None

    states = [
        network.initial_state(n, k, encode_rb(graph.features[v])) for v in range(n)
    ]
    weight_bits = parameter_bits(network.network)
    bits = [max(weight_bits, *map(bit_length, x)) for x in states]
    finished_at: list[int | None] = [None] * n
    outputs: list[str | None] = [None] * n
    starts: list[list[int]] = [[] for _ in range(n)]
    messages = [tuple(x[msg] for x in states)] if record_messages else None
    longest, stable, remaining = 0, True, None

    for t in range(1, max_steps + 1):
        for v, x in enumerate(states):
            longest = max(longest, _check_message(x[msg], width, v, t))
        if port is not None:
            states = [port.inject(x) for x in states]
        sums = [_sum(states, graph.neighbors(v), network.d) for v in range(n)]
        total = _sum(states, range(n), network.d) if network.global_readout else ()
        for v in range(n):
            if sums[v][msg] >= 1 or (total and total[msg] >= 1):
                raise MessageBoundExceeded(
                    f"Message sum at node {v} overflows {width} bits at recurrence {t}", v, t
                )
        new = [network.network(states[v] + sums[v] + total) for v in range(n)]
        for v, x in enumerate(new):
            bits[v] = max(bits[v], *map(bit_length, x))
            if x[start] == 1 and x[ready] == 1:
                starts[v].append(t)
            if finished_at[v] is None and x[finished] == 1:
                finished_at[v] = t
                outputs[v] = decode_result(x[result])
                logger.debug("Node %d finished at recurrence %d", v, t)
            elif finished_at[v] is not None and (
                x[finished] != states[v][finished] or x[result] != states[v][result]
            ):
                stable = False
        states = new
        if messages is not None:
            messages.append(tuple(x[msg] for x in states))
        if remaining is None and all(f is not None for f in finished_at):
            remaining = extra_steps
        if remaining is not None:
            if remaining == 0:
                break
            remaining -= 1
    else:
        if None in finished_at:
            node = finished_at.index(None)
            raise MaxStepsExceeded(f"Node {node} not finished after {max_steps} recurrences")

    stats = RunStats(
        tuple(finished_at),  # type: ignore[arg-type]
        tuple(bits),
        t,
        tuple(tuple(s) for s in starts),
        longest,
        stable,
    )
    logger.info(
        "R-GNN run on %d nodes: T = %d, L = %d, %d recurrences",
        n,
        stats.time,
        stats.space,
        t,
    )
    return RgnnRun(
        tuple(outputs),  # type: ignore[arg-type]
        stats,
        tuple(states),
        tuple(messages) if messages is not None else None,
    )


def run_graph_embedding(
    rgnn: Rgnn,
    graph: FeaturedGraph,
    readout: Mlp | None = None,
    mode: Mode | None = None,
    max_steps: int | None = None,
) -> str:
    """
    Graph-level output: run, average the final node vectors, apply a readout.

    Parameters
    ----------
    rgnn
        The compiled algorithm.
    graph
        A connected graph.
    readout
        An MLP from d inputs to one output, by default the projection onto
        the result dimension.
    mode
        "full" or "hybrid".
    max_steps
        Recurrence cap.

    Returns
    -------
    str
        The decoded readout value.
    """
    if not graph.is_connected():
        raise DisconnectedInput("Graph embeddings are only defined on connected graphs")
    network = rgnn.network(mode)
    if readout is None:
        readout = result_readout(network)
    if readout.d_in != network.d or readout.d_out != 1:
        raise DimensionMismatch(
            f"Readout maps {readout.d_in} to {readout.d_out} dims, need {network.d} to 1"
        )
    run = run_rgnn(rgnn, graph, mode, max_steps)
    mean = [
        sum((Fraction(x[i]) for x in run.final), Fraction(0)) / graph.n
        for i in range(network.d)
    ]
    return decode_result(readout(mean)[0])


def result_readout(network: AssembledRgnn) -> Mlp:
    """The projection of a node vector onto its result dimension."""
    return Mlp((Layer(network.d, (((network.index("result"), 1),),), (0,)),))


@dataclass(frozen=True)
class RniRun:
    """
    Result of a run with random node initialization.

    Attributes
    ----------
    outputs
        Per node the output, or None when the draw did not individualize the
        graph.
    individualized
        Whether all drawn strings were distinct.
    draws
        The random string of each node.
    run
        The underlying run on the extended features.
    """

    outputs: tuple[str | None, ...]
    individualized: bool
    draws: tuple[str, ...]
    run: RgnnRun


def rni_length(n: int) -> int:
    """3 ceil(log2 n) random bits per node."""
    return 3 * ceil(log2(n)) if n > 1 else 0


def individualization_probability(n: int, length: int | None = None) -> Fraction:
    """
    Probability that n uniform strings of the given length are distinct.

    Parameters
    ----------
    n
        The number of nodes.
    length
        Bits per string, by default `rni_length(n)`.

    Returns
    -------
    Fraction
        The exact probability.
    """
    length = rni_length(n) if length is None else length
    p, slots = Fraction(1), 1 << length
    for i in range(n):
        p *= Fraction(max(slots - i, 0), slots)
    return p


def draw_rni(n: int, seed: int) -> tuple[str, ...]:
    """Random strings of `rni_length(n)` bits, one per node."""
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(n, rni_length(n)))
    return tuple("".join(str(int(b)) for b in row) for row in bits)


def extend_features(graph: FeaturedGraph, draws: Sequence[str]) -> FeaturedGraph:
    """Pad every feature to the maximum length and append the draws."""
    k = graph.k
    return graph.with_features([z.ljust(k, "0") + r for z, r in zip(graph.features, draws)])


def run_rgnn_rni(
    rgnn: Rgnn,
    graph: FeaturedGraph,
    seed: int,
    mode: Mode | None = None,
    max_steps: int | None = None,
) -> RniRun:
    """
    Run an R-GNN on features extended by random strings.

    Parameters
    ----------
    rgnn
        The compiled algorithm, working on extended features.
    graph
        A connected graph.
    seed
        Seed of the random draws.
    mode
        "full" or "hybrid".
    max_steps
        Recurrence cap.

    Returns
    -------
    RniRun
        Outputs (None everywhere unless individualized) and the draws.
    """
    if not graph.is_connected():
        raise DisconnectedInput("Random node initialization needs a connected graph")
    draws = draw_rni(graph.n, seed)
    individualized = len(set(draws)) == graph.n
    run = run_rgnn(rgnn, extend_features(graph, draws), mode, max_steps)
    outputs = run.outputs if individualized else (None,) * graph.n
    if not individualized:
        logger.info("Random draw with seed %d did not individualize the graph", seed)
    return RniRun(outputs, individualized, draws, run)


@dataclass(frozen=True)
class AuditReport:
    """
    Measured time and space of one run against the message bound.

    Attributes
    ----------
    n
        Graph order.
    time
        T(G).
    space
        L(G).
    width
        The message width W.
    max_message_bits
        Longest message observed.
    stable
        Whether results stayed fixed after finishing.
    """

    n: int
    time: int
    space: int
    width: int
    max_message_bits: int
    stable: bool

    @property
    def within_bound(self) -> bool:
        """Every message fit in W bits."""
        return self.max_message_bits <= self.width

    def dumps(self) -> str:
        """One `audit` line."""
        return (
            f"audit n={self.n} T={self.time} L={self.space} W={self.width} "
            f"message_bits={self.max_message_bits} bound={'ok' if self.within_bound else 'exceeded'} "
            f"stable={int(self.stable)}\n"
        )


def audit_run(network: AssembledRgnn, graph: FeaturedGraph, run: RgnnRun) -> AuditReport:
    """
    Check a finished run against the message bound.

    Parameters
    ----------
    network
        The network that produced the run.
    graph
        The graph it ran on.
    run
        The run.

    Returns
    -------
    AuditReport
        T, L and the bound check.
    """
    stats = run.stats
    if len(stats.bit_lengths) != graph.n:
        raise DimensionMismatch(f"Run covers {len(stats.bit_lengths)} nodes, graph has {graph.n}")
    return AuditReport(
        graph.n,
        stats.time,
        stats.space,
        network.width(graph.k, graph.n),
        stats.max_message_bits,
        stats.stable,
    )


@dataclass(frozen=True)
class GrowthFit:
    """
    Polynomial growth of T and L over a sweep.

    Attributes
    ----------
    audits
        One audit per graph.
    time_exponent
        Slope of log T against log n.
    space_exponent
        Slope of log L against log n.
    """

    audits: tuple[AuditReport, ...]
    time_exponent: float
    space_exponent: float

    def dumps(self) -> str:
        """The audits followed by the fitted exponents."""
        return "".join(a.dumps() for a in self.audits) + (
            f"growth T~n^{self.time_exponent:.2f} L~n^{self.space_exponent:.2f}\n"
        )


def growth_sweep(
    rgnn: Rgnn,
    graphs: Sequence[FeaturedGraph],
    mode: Mode | None = None,
    max_steps: int | None = None,
) -> GrowthFit:
    """
    Run on graphs of growing order and fit the growth of T and L.

    Parameters
    ----------
    rgnn
        The compiled algorithm.
    graphs
        Graphs covering at least two distinct orders above 1.
    mode
        "full" or "hybrid".
    max_steps
        Recurrence cap per run.

    Returns
    -------
    GrowthFit
        The audits and the log-log slopes.
    """
    network = rgnn.network(mode)
    audits = tuple(
        audit_run(network, g, run_rgnn(rgnn, g, mode, max_steps)) for g in graphs
    )
    points = [a for a in audits if a.n > 1]
    if len({a.n for a in points}) < 2:
        raise DimensionMismatch("A growth fit needs at least two orders above 1")
    logn = np.log([a.n for a in points])
    time_exponent = np.polyfit(logn, np.log([a.time for a in points]), 1)[0]
    space_exponent = np.polyfit(logn, np.log([a.space for a in points]), 1)[0]
    return GrowthFit(audits, float(time_exponent), float(space_exponent))


class _Port:
    """Runs the step function for the machine port of a hybrid network."""

    def __init__(self, network: AssembledRgnn, algorithm: SMpGa, width: int) -> None:
        self.algorithm = algorithm
        self.width = width
        at = network.index
        self.switch, self.prev = at("machine.switch"), at("machine.prev")
        self.inputs = (at("machine.in0"), at("machine.in1"))
        self.pending = (at("machine.pend0"), at("machine.pend1"))
        self.countdown = at("machine.countdown")
        self.cap = get_setting("machine_step_cap")

    def inject(self, x: tuple[Number, ...]) -> tuple[Number, ...]:
        if x[self.switch] != 1 or x[self.prev] != 0:
            return x
        stack1, stack2 = (decode_rq(x[i]) for i in self.inputs)
        out1, out2, steps = self.execute(stack1, stack2)
        y = list(x)
        y[self.pending[0]], y[self.pending[1]] = encode_rq(out1), encode_rq(out2)
        y[self.countdown] = steps
        return tuple(y)

    def execute(self, stack1: str, stack2: str) -> tuple[str, str, int]:
        step = self.algorithm.step
        if step.program is not None:
            return run_stack_program(step.program, stack1, stack2, self.cap)
        x1, x3, x4 = split_tape(stack1)
        if self.algorithm.global_readout:
            out = step.callback(x1, stack2[: self.width], x3, x4, stack2[self.width :])
        else:
            out = step.callback(x1, stack2, x3, x4)
        y1, y2, y3, y4 = out
        return y4 + pair_encode(y3) + y1, y2, 1


def _sum(states: list[tuple[Number, ...]], nodes, d: int) -> tuple[Number, ...]:
    acc = [0] * d
    for w in nodes:
        for i, value in enumerate(states[w]):
            if value:
                acc[i] += value
    return tuple(acc)


def _check_message(value: Number, width: int, v: int, t: int) -> int:
    q = Fraction(value)
    digits = q.denominator.bit_length() - 1
    if q >= 1 or q.denominator != 1 << digits or digits > width:
        raise MessageBoundExceeded(
            f"Node {v} holds message {q}, not a {width}-bit string, at recurrence {t}", v, t
        )
    return digits


def _default_cap(
    network: AssembledRgnn, n: int, k: int, algorithm: SMpGa | None
) -> int:
    cap = get_setting("rgnn_max_steps")
    if cap:
        return cap
    iterations = 10 * (2 * n + 1) * n**3 + 64
    if algorithm is not None and algorithm.schedule is not None:
        iterations = max(iterations, 2 * algorithm.schedule(n, k) + 64)
    width = network.width(k, n)
    return 50 * iterations * (16 * width * width + 4 * n + 64)
