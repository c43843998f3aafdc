"""
Lowering passes between the message-passing representations.

`lower_mpcga_to_mplga` builds the final color dag one round per iteration
and applies the machine once the dag is complete. `lower_mplga_to_smpga`
recovers every neighbor multiset from sums alone by isolating, one value
at a time, the largest message not yet delivered.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

from rgnn_compiler.algorithms import MpLga, SMpGa, Step, parse_initial_state
from rgnn_compiler.encodings import (
    bti,
    bti_inv,
    multiset_decode,
    multiset_encode,
    tuple_decode,
    tuple_encode,
)
from rgnn_compiler.errors import SlotOverflow
from rgnn_compiler.machines import Arity
from rgnn_compiler.refinement import combine_dags, dag_decode, dag_encode, leaf_dag
from rgnn_compiler.utils.params import get_setting

if TYPE_CHECKING:
    from collections.abc import Sequence

    from rgnn_compiler.algorithms import Execution, Mpcga
    from rgnn_compiler.graphs import FeaturedGraph

logger = logging.getLogger(__name__)

# Any A with |A| >= 2 makes theta(A, ...) start with "11".
LOWERED_INITIAL_STATE = "11"


def lower_mpcga_to_mplga(algorithm: Mpcga, execution: Execution = "callback") -> MpLga:
    """
    Lower a machine on final color dags to a bounded message-passing algorithm.

    The working state is "00" theta(bin t, bin n, de(D_t)) where D_t is the
    node's color dag after t rounds; the message is de(D_t). Iteration 1
    starts from the features, iterations 2..2n combine the received dags, and
    from iteration 2n + 1 on the message is the machine's output and the
    state is marked "10".

    Parameters
    ----------
    algorithm
        The machine.
    execution
        How to run the machine.

    Returns
    -------
    MpLga
        The lowered algorithm.
    """
    machine = algorithm.machine

    def step(state: str, received: str) -> tuple[str, str]:
        messages = multiset_decode(received)
        if state[1] == "1":
            _, n_bits, feature = tuple_decode(state, 3)
            dag = combine_dags(leaf_dag(feature), [leaf_dag(m) for m in messages])
            t = 1
        else:
            t_bits, n_bits, encoded = tuple_decode(state[2:], 3)
            t = bti(t_bits)
            if t == 2 * bti(n_bits):
                (out,) = machine(encoded, execution=execution)
                return "10" + state[2:], out
            dag = combine_dags(dag_decode(encoded), [dag_decode(m) for m in messages])
            t += 1
        encoded = dag_encode(dag)
        return "00" + tuple_encode((bti_inv(t), n_bits, encoded)), encoded

    step_fn = Step(Arity.BINARY, callback=step, name=f"dag-builder[{machine.name}]")
    logger.info("Lowered machine %s to a bounded message-passing algorithm", machine.name)
    return MpLga(LOWERED_INITIAL_STATE, step_fn)


@dataclass(frozen=True)
class ExtractionState:
    """
    Per-node state of the max-extraction protocol.

    Every distribution round runs n outer loops. In each loop the enabled
    nodes are candidates; they compare the bit length of their value and
    then its bits, most significant first. Every comparison floods an OR
    for n rounds through the count slot, and candidates whose bit is 0 drop
    out when the OR is 1. The survivors hold the largest value; they send
    (1, value) and get disabled, and every node reads (count, count value)
    from the sum.

    Attributes
    ----------
    value
        int("1" + message) of this node.
    n
        The graph order.
    width
        The message width W.
    enabled
        Not yet delivered in this distribution round.
    candidate
        Still competing in the current outer loop.
    flag
        The OR being flooded.
    outer
        Current outer loop.
    test
        Current comparison; the first bit_length(W) compare lengths.
    round
        Flood round inside the comparison.
    sending_value
        Whether the last message was a value delivery.
    max_length
        Bit length of the largest value, accumulated during the length tests.
    collected
        Messages received so far.
    """

    value: int
    n: int
    width: int
    enabled: bool = True
    candidate: bool = True
    flag: bool = False
    outer: int = 0
    test: int = 0
    round: int = 0
    sending_value: bool = False
    max_length: int = 0
    collected: tuple[str, ...] = ()

    @property
    def length_tests(self) -> int:
        """Number of comparisons spent on the bit length."""
        return self.width.bit_length()

    def bit(self, test: int) -> int:
        """The bit this node contributes to a comparison."""
        if test < self.length_tests:
            return (self.value.bit_length() >> (self.length_tests - 1 - test)) & 1
        return (self.value >> (self.value.bit_length() - 2 - (test - self.length_tests))) & 1


def start_extraction(message: str, n: int, width: int) -> tuple[ExtractionState, tuple[int, int]]:
    """
    Start a distribution round for a node.

    Parameters
    ----------
    message
        The message to distribute.
    n
        The graph order.
    width
        The message width W.

    Returns
    -------
    tuple[ExtractionState, tuple[int, int]]
        The node state and the (count, value) pair to send.
    """
    value = int("1" + message, 2)
    if value.bit_length() + n.bit_length() > width // 2:
        raise SlotOverflow(f"A {len(message)}-bit message does not fit in {width}-bit messages")
    return _begin_outer(ExtractionState(value, n, width))


def advance_extraction(
    state: ExtractionState, count: int, total: int
) -> tuple[ExtractionState, tuple[int, int] | None]:
    """
    Consume one received sum.

    Parameters
    ----------
    state
        The node state.
    count
        The count slot of the received sum.
    total
        The value slot of the received sum.

    Returns
    -------
    tuple[ExtractionState, tuple[int, int] | None]
        The new state and the pair to send, or None once all n outer loops
        are over.
    """
    if not state.sending_value:
        flag = state.flag or count > 0
        if state.round < state.n - 1:
            return replace(state, flag=flag, round=state.round + 1), (int(flag), 0)
        max_length = state.max_length
        if state.test < state.length_tests:
            max_length = 2 * max_length + int(flag)
        candidate = state.candidate and not (flag and not state.bit(state.test))
        return _next_test(
            replace(state, candidate=candidate, max_length=max_length), state.test + 1
        )

    collected = state.collected
    if count:
        collected += (format(total // count, "b")[1:],) * count
    state = replace(
        state,
        collected=collected,
        enabled=state.enabled and not state.candidate,
        outer=state.outer + 1,
    )
    if state.outer < state.n:
        return _begin_outer(state)
    return state, None


def _begin_outer(state: ExtractionState) -> tuple[ExtractionState, tuple[int, int]]:
    return _next_test(replace(state, candidate=state.enabled, max_length=0), 0)


def _next_test(
    state: ExtractionState, test: int
) -> tuple[ExtractionState, tuple[int, int]]:
    if test < state.length_tests + max(state.max_length - 1, 0):
        flag = state.candidate and state.bit(test) == 1
        return replace(state, test=test, round=0, flag=flag, sending_value=False), (
            int(flag),
            0,
        )
    state = replace(state, sending_value=True)
    return state, (1, state.value) if state.candidate else (0, 0)


def recover_neighbor_multisets(
    graph: FeaturedGraph, messages: Sequence[str], width: int | None = None
) -> list[tuple[str, ...]]:
    """
    Run one distribution round of the max-extraction protocol in isolation.

    Parameters
    ----------
    graph
        The graph.
    messages
        The message of every node.
    width
        The message width; large enough for the messages by default.

    Returns
    -------
    list[tuple[str, ...]]
        The recovered multiset of neighbor messages of every node, sorted.
    """
    return _distribute(graph, messages, width)[0]


def extraction_rounds(
    graph: FeaturedGraph, messages: Sequence[str], width: int | None = None
) -> int:
    """
    Number of S-MP-GA iterations one distribution round takes.

    At most n (n (bit_length(W) + l) + 1) for messages of at most l bits.

    Parameters
    ----------
    graph
        The graph.
    messages
        The message of every node.
    width
        The message width; large enough for the messages by default.

    Returns
    -------
    int
        Sum exchanges until every node recovered its multiset.
    """
    return _distribute(graph, messages, width)[1]


def _distribute(
    graph: FeaturedGraph, messages: Sequence[str], width: int | None
) -> tuple[list[tuple[str, ...]], int]:
    n = graph.n
    if width is None:
        longest = max((len(m) for m in messages), default=0)
        width = 2 * (longest + 1 + n.bit_length())
    states, sends = [], []
    for v in range(n):
        state, send = start_extraction(messages[v], n, width)
        states.append(state)
        sends.append(send)
    done = [False] * n
    rounds = 0
    while not all(done):
        rounds += 1
        received = [
            (
                sum(sends[w][0] for w in graph.adjacency[v]),
                sum(sends[w][1] for w in graph.adjacency[v]),
            )
            for v in range(n)
        ]
        for v in range(n):
            if done[v]:
                continue
            states[v], send = advance_extraction(states[v], *received[v])
            done[v] = send is None
            sends[v] = send or (0, 0)
    logger.debug("Distributed %d messages in %d rounds", n, rounds)
    return [tuple(sorted(state.collected)) for state in states], rounds


def _encode_state(mp_state: str, it: int, done: bool, st: ExtractionState | None, result: str) -> str:
    if st is None:
        fields = (mp_state, bti_inv(it), "1" if done else "0", result)
        return "0" + tuple_encode(fields)
    flags = "".join(
        "1" if f else "0" for f in (st.enabled, st.candidate, st.flag, st.sending_value)
    )
    fields = (
        mp_state,
        bti_inv(it),
        "1" if done else "0",
        result,
        bti_inv(st.value),
        bti_inv(st.n),
        bti_inv(st.width),
        flags,
        bti_inv(st.outer),
        bti_inv(st.test),
        bti_inv(st.round),
        bti_inv(st.max_length),
        tuple_encode(st.collected),
    )
    return "0" + tuple_encode(fields)


def _decode_state(state: str) -> tuple[str, int, bool, ExtractionState | None, str]:
    fields = tuple_decode(state[1:])
    mp_state, it, done, result = fields[0], bti(fields[1]), fields[2] == "1", fields[3]
    if len(fields) == 4:
        return mp_state, it, done, None, result
    enabled, candidate, flag, sending_value = (c == "1" for c in fields[7])
    st = ExtractionState(
        value=bti(fields[4]),
        n=bti(fields[5]),
        width=bti(fields[6]),
        enabled=enabled,
        candidate=candidate,
        flag=flag,
        sending_value=sending_value,
        outer=bti(fields[8]),
        test=bti(fields[9]),
        round=bti(fields[10]),
        max_length=bti(fields[11]),
        collected=tuple_decode(fields[12]),
    )
    return mp_state, it, done, st, result


def _pack(pair: tuple[int, int], width: int) -> str:
    count, value = pair
    if not count and not value:
        return ""
    half = width // 2
    return format(count, f"0{half}b") + format(value, f"0{width - half}b")


def _unpack(received: str, width: int) -> tuple[int, int]:
    total = int(received, 2) if received else 0
    low = width - width // 2
    return total >> low, total & ((1 << low) - 1)


def lower_mplga_to_smpga(algorithm: MpLga, execution: Execution = "callback") -> SMpGa:
    """
    Lower a bounded message-passing algorithm to sum aggregation.

    Each of the 2n + 1 iterations is emulated by one distribution round of
    the max-extraction protocol followed by one application of the original
    step function to the recovered multiset. Messages are W-bit pairs of a
    count slot and a value slot of W/2 bits each.

    Parameters
    ----------
    algorithm
        The bounded algorithm.
    execution
        How to run its step function.

    Returns
    -------
    SMpGa
        The lowered algorithm.
    """
    inner = algorithm.step
    bound_scale = algorithm.bound_scale or get_setting("bound_scale")

    def step(x1: str, x2: str, x3: str, x4: str) -> tuple[str, str, str, str]:
        width = len(x2)
        if x1.startswith("1"):
            n, _, feature = parse_initial_state(x1)
            mp_state = tuple_encode((algorithm.initial_state, bti_inv(n), feature))
            st, send = start_extraction(feature, n, width)
            return _encode_state(mp_state, 0, False, st, ""), _pack(send, width), x3, x4

        mp_state, it, done, st, result = _decode_state(x1)
        if done or st is None:
            return x1, "", result, "1"
        st, send = advance_extraction(st, *_unpack(x2, width))
        if send is not None:
            return _encode_state(mp_state, it, False, st, ""), _pack(send, width), x3, x4

        mp_state, message = inner(
            mp_state, multiset_encode(st.collected), execution=execution
        )
        it += 1
        if it == 2 * st.n + 1:
            return _encode_state(mp_state, it, True, None, message), "", message, "1"
        st, send = start_extraction(message, st.n, width)
        return _encode_state(mp_state, it, False, st, ""), _pack(send, width), x3, x4

    def schedule(n: int, k: int) -> int:
        width = (2 * bound_scale + 4) * 3 * max(k, 1) * n**4
        bound = bound_scale * 3 * max(k, 1) * n**4
        per_loop = n * (width.bit_length() + bound) + 1
        return (2 * n + 1) * n * per_loop + 2

    step_fn = Step(Arity.QUATERNARY, callback=step, name=f"max-extraction[{inner.name}]")
    logger.info("Lowered %s to sum aggregation", inner.name)
    return SMpGa("", step_fn, width_factor=2 * bound_scale + 4, schedule=schedule)
