"""
Built-in algorithms for examples, tests and verification campaigns.

Every entry of `LIBRARY` pairs an MPC-GA with a direct graph oracle, and
optionally a native S-MP-GA that computes the same function.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import networkx as nx

from rgnn_compiler.algorithms import (
    MpAlgorithm,
    Mpcga,
    SMpGa,
    Step,
    feature_bound,
    parse_initial_state,
    read_initial_slots,
)
from rgnn_compiler.encodings import multiset_decode, tuple_decode
from rgnn_compiler.lowering import lower_mpcga_to_mplga
from rgnn_compiler.machines import Arity, ProgramBuilder
from rgnn_compiler.refinement import (
    dag_decode,
    dag_encode,
    final_color_dag,
    stable_partition,
)
from rgnn_compiler.sketches import class_sizes, reconstruct_from_dag, weak_node_sketch_from_dag

if TYPE_CHECKING:
    from collections.abc import Callable

    from rgnn_compiler.graphs import FeaturedGraph


def to_bits(m: int) -> str:
    """Big-endian binary of a natural number, "0" for zero."""
    return format(m, "b")


# MPC-GA machines


def identity_program():
    """Unary program that halts at once."""
    builder = ProgramBuilder()
    builder.rule("start", "*", "*", "halt")
    return builder.build(Arity.UNARY)


def level_parity_program():
    """Unary program leaving "1" if the dag encoding has an odd number of levels."""
    builder = ProgramBuilder()
    builder.rule("start", "1", "*", "odd", "pop")
    builder.rule("start", "*", "*", "clear_even", "pop")
    builder.rule("odd", "1", "*", "start", "pop")
    builder.rule("odd", "*", "*", "clear_odd", "pop")
    for parity, bit in (("even", "push0"), ("odd", "push1")):
        builder.rule(f"clear_{parity}", "e", "*", "halt", bit)
        builder.rule(f"clear_{parity}", "*", "*", f"clear_{parity}", "pop")
    return builder.build(Arity.UNARY)


def _dag_identity(x: str) -> tuple[str]:
    return (x,)


def _level_parity(x: str) -> tuple[str]:
    levels = len(x) - len(x.lstrip("1"))
    return (to_bits(levels % 2),)


def _dag_degree(x: str) -> tuple[str]:
    dag = dag_decode(x)
    return (to_bits(sum(dag.neighbor_multiplicities(dag.depth, 0).values())),)


def _dag_on_a_cycle(x: str) -> tuple[str]:
    graph, root = reconstruct_from_dag(dag_decode(x))
    g = graph.to_networkx()
    bridges = {frozenset(e) for e in nx.bridges(g)}
    on_cycle = any(frozenset((root, w)) not in bridges for w in g[root])
    return ("1" if on_cycle else "0",)


def _dag_class_size(x: str) -> tuple[str]:
    dag = dag_decode(x)
    n = (dag.num_levels - 1) // 2
    s = weak_node_sketch_from_dag(dag)
    return (to_bits(class_sizes(s, n)[s.k]),)


DAG_IDENTITY = Mpcga(Step(Arity.UNARY, identity_program(), _dag_identity, "dag-identity"))
LEVEL_PARITY = Mpcga(
    Step(Arity.UNARY, level_parity_program(), _level_parity, "level-parity")
)
DEGREE = Mpcga(Step(Arity.UNARY, callback=_dag_degree, name="degree"))
ON_A_CYCLE = Mpcga(Step(Arity.UNARY, callback=_dag_on_a_cycle, name="on-a-cycle"))
CLASS_SIZE = Mpcga(Step(Arity.UNARY, callback=_dag_class_size, name="class-size"))


# General message-passing algorithms


def _constant_step(state: str, received: str) -> tuple[str, str]:
    _, _, feature = tuple_decode(state, 3)
    return "1" + state, feature


def _degree_step(state: str, received: str) -> tuple[str, str]:
    return "1", to_bits(len(multiset_decode(received)))


MP_CONSTANT = MpAlgorithm("", Step(Arity.BINARY, callback=_constant_step, name="constant"))
MP_DEGREE = MpAlgorithm("", Step(Arity.BINARY, callback=_degree_step, name="degree"))


def mpcga_as_mp_algorithm(algorithm: Mpcga) -> MpAlgorithm:
    """
    Run an MPC-GA as a general message-passing algorithm.

    The first iteration sends the feature; the following 2n + 1 iterations
    run the dag-building lowering. States are "11..." initially, "00" plus
    the lowered state while running and "10" plus it once finished.

    Parameters
    ----------
    algorithm
        The MPC-GA.

    Returns
    -------
    MpAlgorithm
        An algorithm whose outputs equal the MPC-GA outputs.
    """
    lowered = lower_mpcga_to_mplga(algorithm)

    def step(state: str, received: str) -> tuple[str, str]:
        if state.startswith("11"):
            return "00" + state, tuple_decode(state, 3)[2]
        inner_state, message = lowered.step(state[2:], received)
        return ("10" if inner_state.startswith("10") else "00") + inner_state, message

    return MpAlgorithm(
        lowered.initial_state, Step(Arity.BINARY, callback=step, name=algorithm.machine.name)
    )


MP_ON_A_CYCLE = mpcga_as_mp_algorithm(ON_A_CYCLE)


# Native sum-aggregation algorithms


def feature_echo_program():
    """
    Quaternary program that finishes at once with the node's own feature.

    Stack 1 holds `x4 pair(x3) 1^n 0 code("") Z`; the program drops
    everything up to Z, clears stack 2, and rebuilds `1 pair(Z)` on stack 1.
    """
    builder = ProgramBuilder()
    builder.rule("start", "*", "*", "skip_pair", "pop")
    builder.rule("skip_pair", "1", "*", "skip_bit", "pop")
    builder.rule("skip_pair", "*", "*", "skip_ones", "pop")
    builder.rule("skip_bit", "*", "*", "skip_pair", "pop")
    builder.rule("skip_ones", "1", "*", "skip_ones", "pop")
    builder.rule("skip_ones", "*", "*", "skip_code", "pop")
    builder.rule("skip_code", "*", "*", "clear", "pop")
    builder.rule("clear", "*", "e", "move")
    builder.rule("clear", "*", "*", "clear", "nop", "pop")
    builder.rule("move", "0", "*", "move", "pop", "push0")
    builder.rule("move", "1", "*", "move", "pop", "push1")
    builder.rule("move", "e", "*", "build", "push0")
    builder.rule("build", "*", "0", "mark", "push0", "pop")
    builder.rule("build", "*", "1", "mark", "push1", "pop")
    builder.rule("build", "*", "e", "halt", "push1")
    builder.rule("mark", "*", "*", "build", "push1")
    return builder.build(Arity.QUATERNARY)


def _echo_step(x1: str, x2: str, x3: str, x4: str) -> tuple[str, str, str, str]:
    _, _, feature = parse_initial_state(x1)
    return "", "", feature, "1"


def first_sum_algorithm(
    name: str,
    reader: Callable[[int, int, int], int],
    width_factor: int = 1,
    global_readout: bool = False,
) -> SMpGa:
    """
    S-MP-GA that finishes after reading the first neighbor sum.

    The width factor is fixed here and shared by the step, which uses it to
    locate the count slot in the W-bit sum.

    Parameters
    ----------
    name
        Name of the step.
    reader
        Output from (neighbor count, global count, n).
    width_factor
        Factor in front of 3 max(k, 1) n^4 in the message width.
    global_readout
        Whether the step also reads the sum over all nodes.

    Returns
    -------
    SMpGa
        The algorithm.
    """

    def step(
        x1: str, x2: str, x3: str, x4: str, glob: str | None = None
    ) -> tuple[str, str, str, str]:
        if x4 == "1":
            return x1, "", x3, x4
        n, _, _ = parse_initial_state(x1)
        k = feature_bound(len(x2), n, width_factor)
        count, _ = read_initial_slots(x2, k, n)
        total = read_initial_slots(glob, k, n)[0] if glob is not None else 0
        return x1, "", to_bits(reader(count, total, n)), "1"

    return SMpGa(
        "",
        Step(Arity.QUATERNARY, callback=step, name=name),
        width_factor,
        global_readout=global_readout,
    )


FEATURE_ECHO = SMpGa(
    "", Step(Arity.QUATERNARY, feature_echo_program(), _echo_step, "feature-echo"), 1
)
SMPGA_DEGREE = first_sum_algorithm("degree", lambda c, t, n: c)
GRAPH_SIZE = first_sum_algorithm("graph-size", lambda c, t, n: t, global_readout=True)
NON_NEIGHBORS = first_sum_algorithm("non-neighbors", lambda c, t, n: t - c, global_readout=True)


# Campaign registry


def _ref_degree(graph: FeaturedGraph, v: int) -> str:
    return to_bits(graph.degree(v))


def _ref_on_a_cycle(graph: FeaturedGraph, v: int) -> str:
    g = graph.to_networkx()
    return "1" if any(v in cycle for cycle in nx.cycle_basis(g)) else "0"


def _ref_class_size(graph: FeaturedGraph, v: int) -> str:
    partition = stable_partition(graph)
    return to_bits(len(partition.classes[partition.class_of(v)]))


def _ref_level_parity(graph: FeaturedGraph, v: int) -> str:
    return "1"


def _ref_dag(graph: FeaturedGraph, v: int) -> str:
    return dag_encode(final_color_dag(graph, v))


def _ref_feature(graph: FeaturedGraph, v: int) -> str:
    return graph.features[v]


@dataclass(frozen=True)
class LibraryEntry:
    """
    A campaign algorithm.

    Attributes
    ----------
    name
        The name used on the command line.
    reference
        Direct oracle (graph, node) -> output.
    mpcga
        The MPC-GA, if the function is mp-invariant.
    native
        A native S-MP-GA computing the same function, if any.
    connected_only
        Whether the function is only defined on connected graphs.
    """

    name: str
    reference: Callable[[FeaturedGraph, int], str]
    mpcga: Mpcga | None = None
    native: SMpGa | None = None
    connected_only: bool = False


LIBRARY: dict[str, LibraryEntry] = {
    entry.name: entry
    for entry in (
        LibraryEntry("degree", _ref_degree, DEGREE, SMPGA_DEGREE),
        LibraryEntry("on-a-cycle", _ref_on_a_cycle, ON_A_CYCLE),
        LibraryEntry("class-size", _ref_class_size, CLASS_SIZE, connected_only=True),
        LibraryEntry("dag-identity", _ref_dag, DAG_IDENTITY),
        LibraryEntry("level-parity", _ref_level_parity, LEVEL_PARITY),
        LibraryEntry("feature-echo", _ref_feature, native=FEATURE_ECHO),
        LibraryEntry("graph-size", lambda g, v: to_bits(g.n), native=GRAPH_SIZE),
        LibraryEntry(
            "non-neighbors", lambda g, v: to_bits(g.n - g.degree(v)), native=NON_NEIGHBORS
        ),
    )
}


def get_algorithm(name: str) -> LibraryEntry:
    """
    Look up a library algorithm.

    Parameters
    ----------
    name
        The algorithm name.

    Returns
    -------
    LibraryEntry
        The entry.
    """
    if name not in LIBRARY:
        raise KeyError(f"Unknown algorithm {name!r}; choose from {', '.join(sorted(LIBRARY))}")
    return LIBRARY[name]
