"""
The message-passing intermediate representations and their executors.

Every step function may carry a stack program, a host callback, or both.
Executors prefer the callback; the compiler needs the program.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Literal

from rgnn_compiler.encodings import (
    bti_inv,
    decode_rb,
    encode_rb,
    multiset_encode,
    read_code,
    tuple_encode,
)
from rgnn_compiler.errors import (
    DimensionMismatch,
    IllFormedProgram,
    MessageBoundExceeded,
    MissingProgram,
    StepCapExceeded,
)
from rgnn_compiler.machines import Arity
from rgnn_compiler.refinement import dag_encode, final_color_dag
from rgnn_compiler.utils.params import get_setting

if TYPE_CHECKING:
    from collections.abc import Callable

    from rgnn_compiler.graphs import FeaturedGraph
    from rgnn_compiler.machines import StackProgram

logger = logging.getLogger(__name__)

Execution = Literal["callback", "program", "cross"]


@dataclass(frozen=True)
class Step:
    """
    A computable step function given as a stack program and/or a callback.

    Attributes
    ----------
    arity
        Number of inputs and outputs.
    program
        The stack program, if any.
    callback
        A Python function with the same input/output behaviour, if any.
    name
        A label for logs and reports.
    """

    arity: Arity
    program: StackProgram | None = None
    callback: Callable[..., tuple[str, ...]] | None = None
    name: str = "step"

    def __post_init__(self) -> None:
        if self.program is None and self.callback is None:
            raise IllFormedProgram(f"Step {self.name!r} has neither program nor callback")
        if self.program is not None and self.program.arity != self.arity:
            raise IllFormedProgram(f"Step {self.name!r} has a program of the wrong arity")

    def __call__(
        self,
        *inputs: str,
        execution: Execution = "callback",
        max_steps: int | None = None,
    ) -> tuple[str, ...]:
        """
        Apply the step function.

        Parameters
        ----------
        *inputs
            The inputs.
        execution
            "callback" prefers the callback, "program" requires the program,
            and "cross" runs both and compares.
        max_steps
            Machine step cap for the program.

        Returns
        -------
        tuple[str, ...]
            The outputs.
        """
        if execution == "program" or self.callback is None:
            return self._run_program(inputs, max_steps)
        result = tuple(self.callback(*inputs))
        if execution == "cross" and self.program is not None:
            expected = self._run_program(inputs, max_steps)
            if expected != result:
                raise IllFormedProgram(
                    f"Program and callback of {self.name!r} disagree: {expected} != {result}"
                )
        return result

    def _run_program(
        self, inputs: tuple[str, ...], max_steps: int | None
    ) -> tuple[str, ...]:
        if self.program is None:
            raise MissingProgram(f"Step {self.name!r} has no stack program")
        return self.program.apply(inputs, max_steps or get_setting("machine_step_cap"))


@dataclass(frozen=True)
class MpAlgorithm:
    """
    A message-passing algorithm: initial state and a binary step function.

    Attributes
    ----------
    initial_state
        The state A.
    step
        f(state, multiset of messages) -> (state, message).
    """

    initial_state: str
    step: Step


@dataclass(frozen=True)
class Mpcga:
    """
    An algorithm that computes its output from the final color dag alone.

    Attributes
    ----------
    machine
        A unary step function applied to the dag encoding.
    """

    machine: Step


@dataclass(frozen=True)
class MpLga:
    """
    A message-passing algorithm that runs exactly 2n + 1 iterations with a
    bounded multiset length.

    Attributes
    ----------
    initial_state
        The state A.
    step
        f(state, multiset of messages) -> (state, message).
    bound_scale
        Factor in front of 3 max(k, 1) n^4 in the length bound.
    """

    initial_state: str
    step: Step
    bound_scale: int | None = None

    def bound(self, k: int, n: int) -> int:
        """Maximum bit length of a received multiset encoding."""
        scale = self.bound_scale or get_setting("bound_scale")
        return scale * 3 * max(k, 1) * n**4


@dataclass(frozen=True)
class SMpGa:
    """
    A message-passing algorithm with sum aggregation.

    Attributes
    ----------
    initial_state
        The state A.
    step
        f(state, neighbor sum, result, finished) -> (state, message,
        result, finished). With `global_readout` the callback also receives
        the sum over all nodes as a fifth argument, and a program receives
        it appended to the neighbor sum on stack 2.
    width_factor
        Factor in front of 3 max(k, 1) n^4 in the message width W.
    global_readout
        Whether the step also sees the global sum.
    schedule
        Optional estimate of the iteration count from (n, k), used to size
        the step cap.
    """

    initial_state: str
    step: Step
    width_factor: int | None = None
    global_readout: bool = False
    schedule: Callable[[int, int], int] | None = None

    def width(self, k: int, n: int) -> int:
        """Message width W in bits."""
        factor = self.width_factor or get_setting("width_factor")
        return factor * 3 * max(k, 1) * n**4


@dataclass(frozen=True)
class SMpGaTrace:
    """
    Record of an S-MP-GA run.

    Attributes
    ----------
    outputs
        Output of every node.
    finished_at
        First iteration with the finished flag set, per node.
    sums
        sums[t][v] is the neighbor sum node v received in iteration t + 1.
    messages
        messages[t][v] is the message node v holds after iteration t.
    max_sum_length
        Largest bit length of a received sum.
    """

    outputs: tuple[str, ...]
    finished_at: tuple[int, ...]
    sums: tuple[tuple[str, ...], ...]
    messages: tuple[tuple[str, ...], ...]
    max_sum_length: int


def initial_mp_state(initial_state: str, graph: FeaturedGraph, v: int) -> str:
    """theta(A, bin(n), Z(v)), the first state of a message-passing node."""
    return tuple_encode((initial_state, bti_inv(graph.n), graph.features[v]))


def run_mp_algorithm(
    algorithm: MpAlgorithm,
    graph: FeaturedGraph,
    step_cap: int | None = None,
    execution: Execution = "callback",
) -> tuple[str, ...]:
    """
    Run a general message-passing algorithm until every node finished.

    A node finishes at the first iteration t >= 1 whose state starts with 1;
    its output is its message at that iteration.

    Parameters
    ----------
    algorithm
        The algorithm.
    graph
        The graph.
    step_cap
        Maximum number of iterations.
    execution
        How to run the step function.

    Returns
    -------
    tuple[str, ...]
        The output of every node.
    """
    n = graph.n
    step_cap = step_cap or _default_cap(n)
    states = [initial_mp_state(algorithm.initial_state, graph, v) for v in range(n)]
    messages = [""] * n
    outputs: list[str | None] = [None] * n
    for t in range(1, step_cap + 1):
        received = [
            multiset_encode(messages[w] for w in graph.adjacency[v]) for v in range(n)
        ]
        for v in range(n):
            states[v], messages[v] = algorithm.step(
                states[v], received[v], execution=execution
            )
            if outputs[v] is None and states[v].startswith("1"):
                outputs[v] = messages[v]
        if all(out is not None for out in outputs):
            logger.debug("Message-passing run finished after %d iterations", t)
            return tuple(outputs)  # type: ignore[arg-type]
    node = outputs.index(None)
    raise StepCapExceeded(f"Node {node} did not finish in {step_cap} iterations", node)


def run_mpcga(
    algorithm: Mpcga,
    graph: FeaturedGraph,
    v: int,
    execution: Execution = "callback",
) -> str:
    """
    Apply the machine to the encoding of the final color of a node.

    Parameters
    ----------
    algorithm
        The algorithm.
    graph
        The graph.
    v
        The node.
    execution
        How to run the machine.

    Returns
    -------
    str
        The output.
    """
    graph.check_node(v)
    (out,) = algorithm.machine(dag_encode(final_color_dag(graph, v)), execution=execution)
    return out


def run_mpcga_all(
    algorithm: Mpcga, graph: FeaturedGraph, execution: Execution = "callback"
) -> tuple[str, ...]:
    """Run an MPC-GA on every node."""
    return tuple(run_mpcga(algorithm, graph, v, execution) for v in range(graph.n))


def run_mplga(
    algorithm: MpLga,
    graph: FeaturedGraph,
    execution: Execution = "callback",
    trace: list[tuple[str, ...]] | None = None,
) -> tuple[str, ...]:
    """
    Run exactly 2n + 1 synchronous iterations and return the messages.

    Parameters
    ----------
    algorithm
        The algorithm.
    graph
        The graph.
    execution
        How to run the step function.
    trace
        If given, receives the states after every iteration.

    Returns
    -------
    tuple[str, ...]
        The output of every node.
    """
    n = graph.n
    bound = algorithm.bound(graph.k, n)
    states = [initial_mp_state(algorithm.initial_state, graph, v) for v in range(n)]
    messages = list(graph.features)
    for t in range(1, 2 * n + 2):
        received = []
        for v in range(n):
            encoded = multiset_encode(messages[w] for w in graph.adjacency[v])
            if len(encoded) > bound:
                raise MessageBoundExceeded(
                    f"Node {v} received {len(encoded)} bits at iteration {t}, bound {bound}",
                    v,
                    t,
                )
            received.append(encoded)
        for v in range(n):
            states[v], messages[v] = algorithm.step(
                states[v], received[v], execution=execution
            )
        if trace is not None:
            trace.append(tuple(states))
    return tuple(messages)


def smpga_initial_state(
    algorithm: SMpGa, graph: FeaturedGraph, v: int
) -> tuple[str, str, str, str]:
    """
    The initial 4-tuple of a node.

    The state is 1^n 0 code(A) Z. The message is the sum-safe pair
    (1, Z) with slots of k' + n - 1 bits, k' = max(k, 1), right-aligned in
    a W-bit string; inside the message Z is right-padded to length k.
    Result and finished flag start at "0".

    Parameters
    ----------
    algorithm
        The algorithm.
    graph
        The graph.
    v
        The node.

    Returns
    -------
    tuple[str, str, str, str]
        State, message, result and finished flag.
    """
    n, k = graph.n, graph.k
    feature = graph.features[v]
    state = "1" * n + "0" + tuple_encode((algorithm.initial_state,)) + feature
    padded = feature.ljust(k, "0")
    return state, initial_message(padded, k, n, algorithm.width(k, n)), "0", "0"


def parse_initial_state(state: str) -> tuple[int, str, str]:
    """
    Split an initial S-MP-GA state 1^n 0 code(A) Z.

    Parameters
    ----------
    state
        The state.

    Returns
    -------
    tuple[int, str, str]
        The graph order, the initial state A and the feature.
    """
    n = len(state) - len(state.lstrip("1"))
    initial, pos = read_code(state, n + 1)
    return n, initial, state[pos:]


def initial_message(feature: str, k: int, n: int, width: int) -> str:
    """
    Right-aligned sum-safe pair (1, int(feature)).

    Parameters
    ----------
    feature
        The feature, padded to length k.
    k
        The maximum feature length.
    n
        The graph order.
    width
        The message width W.

    Returns
    -------
    str
        The W-bit message.
    """
    w = slot_width_for(k, n)
    value = int(feature, 2) if feature else 0
    return format(1, f"0{w}b").rjust(width - w, "0") + format(value, f"0{w}b")


def slot_width_for(k: int, n: int) -> int:
    """Slot width of the initial message, max(k, 1) + n - 1."""
    return max(k, 1) + n - 1


def feature_bound(width: int, n: int, width_factor: int) -> int:
    """
    Recover max(k, 1) from a message width W = width_factor 3 max(k, 1) n^4.

    Raises
    ------
    DimensionMismatch
        If the width is not a multiple of width_factor 3 n^4.
    """
    unit = width_factor * 3 * n**4
    if width <= 0 or width % unit:
        raise DimensionMismatch(f"Width {width} is not a multiple of {unit}")
    return width // unit


def read_initial_slots(received: str, k: int, n: int) -> tuple[int, int]:
    """
    Decode a sum of initial messages into (count, value sum).

    Parameters
    ----------
    received
        The W-bit neighbor sum.
    k
        The maximum feature length.
    n
        The graph order.

    Returns
    -------
    tuple[int, int]
        The number of senders and the sum of their feature values.
    """
    w = slot_width_for(k, n)
    if not received:
        return 0, 0
    total = int(received, 2)
    return total >> w, total & ((1 << w) - 1)


def run_smpga(
    algorithm: SMpGa,
    graph: FeaturedGraph,
    step_cap: int | None = None,
    execution: Execution = "callback",
) -> SMpGaTrace:
    """
    Run a sum-aggregation algorithm until every node finished.

    Messages are read as rational binary numbers, summed exactly, and handed
    back as W-bit strings.

    Parameters
    ----------
    algorithm
        The algorithm.
    graph
        The graph.
    step_cap
        Maximum number of iterations.
    execution
        How to run the step function.

    Returns
    -------
    SMpGaTrace
        Outputs, finishing iterations and the message trace.
    """
    n, k = graph.n, graph.k
    width = algorithm.width(k, n)
    if step_cap is None:
        step_cap = _default_cap(n)
        if algorithm.schedule is not None:
            step_cap = max(step_cap, 2 * algorithm.schedule(n, k) + 64)
    tuples = [list(smpga_initial_state(algorithm, graph, v)) for v in range(n)]
    outputs: list[str | None] = [None] * n
    finished_at = [0] * n
    sums_trace, message_trace = [], [tuple(c[1] for c in tuples)]
    longest = 0
    for t in range(1, step_cap + 1):
        values = [_message_value(c[1], width, v, t) for v, c in enumerate(tuples)]
        sums = [sum((values[w] for w in graph.adjacency[v]), Fraction(0)) for v in range(n)]
        total = sum(values, Fraction(0))
        received = [_render_sum(s, width, v, t) for v, s in enumerate(sums)]
        longest = max([longest, *(len(r.lstrip("0")) for r in received)])
        glob = _render_sum(total, width, -1, t) if algorithm.global_readout else None
        for v in range(n):
            x1, _, x3, x4 = tuples[v]
            if algorithm.global_readout:
                out = _call_global(algorithm.step, x1, received[v], x3, x4, glob, execution)
            else:
                out = algorithm.step(x1, received[v], x3, x4, execution=execution)
            if out[3] not in ("0", "1"):
                raise IllFormedProgram(f"Finished flag must be one bit, got {out[3]!r}")
            tuples[v] = list(out)
            if outputs[v] is None and out[3] == "1":
                outputs[v] = out[2]
                finished_at[v] = t
        sums_trace.append(tuple(received))
        message_trace.append(tuple(c[1] for c in tuples))
        if all(o is not None for o in outputs):
            logger.debug("S-MP-GA run finished after %d iterations", t)
            return SMpGaTrace(
                tuple(outputs),  # type: ignore[arg-type]
                tuple(finished_at),
                tuple(sums_trace),
                tuple(message_trace),
                longest,
            )
    node = outputs.index(None)
    raise StepCapExceeded(f"Node {node} did not finish in {step_cap} iterations", node)


def _call_global(
    step: Step,
    x1: str,
    nbr: str,
    x3: str,
    x4: str,
    glob: str | None,
    execution: Execution,
) -> tuple[str, ...]:
    if execution != "program" and step.callback is not None:
        result = tuple(step.callback(x1, nbr, x3, x4, glob))
        if execution == "cross" and step.program is not None:
            expected = step(x1, nbr + (glob or ""), x3, x4, execution="program")
            if expected != result:
                raise IllFormedProgram(f"Program and callback of {step.name!r} disagree")
        return result
    return step(x1, nbr + (glob or ""), x3, x4, execution="program")


def _message_value(message: str, width: int, v: int, t: int) -> Fraction:
    if len(message) > width:
        raise MessageBoundExceeded(
            f"Node {v} sent {len(message)} bits at iteration {t}, width {width}", v, t
        )
    return encode_rb(message)


def _render_sum(total: Fraction, width: int, v: int, t: int) -> str:
    if total >= 1:
        raise MessageBoundExceeded(
            f"Message sum at node {v} overflows {width} bits at iteration {t}", v, t
        )
    return decode_rb(total, width)


def _default_cap(n: int) -> int:
    cap = get_setting("mp_step_cap")
    return cap if cap else 10 * (2 * n + 1) * n**3 + 64
