from fractions import Fraction

import pytest

from rgnn_compiler.algorithms import run_smpga
from rgnn_compiler.encodings import encode_rb
from rgnn_compiler.errors import (
    DimensionMismatch,
    DisconnectedInput,
    MaxStepsExceeded,
    MissingProgram,
    NotInRB,
)
from rgnn_compiler.graphs import FeaturedGraph, complete_graph
from rgnn_compiler.library import FEATURE_ECHO, GRAPH_SIZE, SMPGA_DEGREE
from rgnn_compiler.mlp.network import Layer, Mlp
from rgnn_compiler.rgnn.assembler import assemble_rgnn
from rgnn_compiler.rgnn.runner import (
    audit_run,
    decode_result,
    draw_rni,
    extend_features,
    growth_sweep,
    individualization_probability,
    rni_length,
    run_graph_embedding,
    run_rgnn,
    run_rgnn_global,
    run_rgnn_rni,
    simulate,
)

ECHO = assemble_rgnn(FEATURE_ECHO)


def test_decode_result():
    assert decode_result(encode_rb("1011")) == "101"
    assert decode_result(encode_rb("1")) == ""
    for bad in (0, Fraction(1, 3), Fraction(-1, 2)):
        with pytest.raises(NotInRB):
            decode_result(bad)


@pytest.mark.parametrize("feature", ["", "1", "01"])
def test_feature_echo_hybrid(feature):
    graph = FeaturedGraph([feature])
    run = run_rgnn(ECHO, graph, "hybrid")
    assert run.outputs == (feature,)
    assert run.outputs == run_smpga(FEATURE_ECHO, graph).outputs
    assert run.stats.time == run.stats.finished_at[0]
    assert run.stats.recurrences == run.stats.time
    assert run.stats.space > 0


def test_full_and_hybrid_agree():
    graph = FeaturedGraph(["1"])
    full = run_rgnn(ECHO, graph, "full")
    hybrid = run_rgnn(ECHO, graph, "hybrid")
    assert full.outputs == hybrid.outputs == ("1",)
    assert full.stats.stable
    assert hybrid.stats.stable


def test_full_and_hybrid_message_traces():
    graph = FeaturedGraph(["1", "0"], [(0, 1)])
    full = run_rgnn(ECHO, graph, "full", extra_steps=2, record_messages=True)
    hybrid = run_rgnn(ECHO, graph, "hybrid", extra_steps=2, record_messages=True)
    assert full.outputs == hybrid.outputs == ("1", "0")
    assert full.messages == hybrid.messages
    assert full.stats.finished_at == hybrid.stats.finished_at
    assert full.stats.starts == hybrid.stats.starts


def test_stable_after_finishing():
    graph = FeaturedGraph(["1"])
    run = run_rgnn(ECHO, graph, "hybrid", extra_steps=3, record_messages=True)
    assert run.stats.stable
    assert run.stats.recurrences == run.stats.time + 3
    assert len(run.messages) == run.stats.recurrences + 1
    assert run.messages[0] == (0,)
    assert run.stats.max_message_bits <= ECHO.network("hybrid").width(1, 1)
    assert len(run.stats.starts[0]) >= 1


def test_degree_on_an_edge():
    rgnn = assemble_rgnn(SMPGA_DEGREE)
    assert run_rgnn(rgnn, complete_graph(2)).outputs == ("1", "1")


def test_global_readout():
    rgnn = assemble_rgnn(GRAPH_SIZE)
    assert run_rgnn_global(rgnn, FeaturedGraph([""])).outputs == ("1",)
    with pytest.raises(DimensionMismatch, match="global readout"):
        run_rgnn_global(ECHO, FeaturedGraph([""]))


def test_run_errors():
    graph = FeaturedGraph(["1"])
    with pytest.raises(MaxStepsExceeded, match="not finished"):
        run_rgnn(ECHO, graph, "hybrid", max_steps=2)
    with pytest.raises(MissingProgram):
        simulate(ECHO.network("hybrid"), graph)
    with pytest.raises(MissingProgram):
        run_rgnn(assemble_rgnn(SMPGA_DEGREE), graph, "full")


def test_graph_embedding():
    graph = FeaturedGraph(["1"])
    assert run_graph_embedding(ECHO, graph, mode="hybrid") == "1"
    with pytest.raises(DisconnectedInput):
        run_graph_embedding(ECHO, FeaturedGraph(["", ""]), mode="hybrid")
    wrong = Mlp((Layer(2, (((0, 1),),), (0,)),))
    with pytest.raises(DimensionMismatch, match="Readout"):
        run_graph_embedding(ECHO, graph, wrong, mode="hybrid")


def test_rni_lengths_and_probability():
    assert rni_length(1) == 0
    assert rni_length(2) == 3
    assert rni_length(5) == 9
    assert individualization_probability(1) == 1
    assert individualization_probability(2, 1) == Fraction(1, 2)
    assert individualization_probability(3, 1) == 0
    assert individualization_probability(2) == Fraction(7, 8)
    assert individualization_probability(8) > Fraction(1, 2)


def test_draw_rni():
    draws = draw_rni(4, seed=3)
    assert draws == draw_rni(4, seed=3)
    assert len(draws) == 4
    assert all(len(r) == 6 and set(r) <= {"0", "1"} for r in draws)
    assert draw_rni(1, seed=3) == ("",)


def test_extend_features():
    graph = FeaturedGraph(["1", ""], [(0, 1)])
    extended = extend_features(graph, ["01", "10"])
    assert extended.features == ("101", "010")
    assert extended.edges == graph.edges


def test_run_rni():
    result = run_rgnn_rni(ECHO, FeaturedGraph(["1"]), seed=0, mode="hybrid")
    assert result.individualized
    assert result.draws == ("",)
    assert result.outputs == ("1",)
    with pytest.raises(DisconnectedInput):
        run_rgnn_rni(ECHO, FeaturedGraph(["", ""]), seed=0, mode="hybrid")


def test_audit():
    graph = FeaturedGraph(["1"])
    network = ECHO.network("hybrid")
    run = run_rgnn(ECHO, graph, "hybrid", extra_steps=1)
    report = audit_run(network, graph, run)
    assert report.n == 1
    assert report.width == 3
    assert report.time == run.stats.time
    assert report.within_bound
    assert report.stable
    assert report.dumps().startswith(f"audit n=1 T={run.stats.time} ")
    assert report.dumps().endswith("bound=ok stable=1\n")
    with pytest.raises(DimensionMismatch, match="covers"):
        audit_run(network, FeaturedGraph(["1", "0"]), run)


def test_growth_sweep_needs_two_orders():
    with pytest.raises(DimensionMismatch, match="two orders"):
        growth_sweep(ECHO, [FeaturedGraph(["1"]), FeaturedGraph(["0"])], mode="hybrid")


def _assert_equivariant(rgnn, graph, perm, mode="hybrid"):
    run = run_rgnn(rgnn, graph, mode)
    moved = run_rgnn(rgnn, graph.relabel(perm), mode)
    assert tuple(moved.outputs[perm[v]] for v in range(graph.n)) == run.outputs
    assert tuple(moved.stats.finished_at[perm[v]] for v in range(graph.n)) == run.stats.finished_at


def test_permutation_equivariance():
    _assert_equivariant(ECHO, FeaturedGraph(["1", "01"], [(0, 1)]), (1, 0))
    _assert_equivariant(ECHO, FeaturedGraph(["1", "0"]), (1, 0), mode="full")


@pytest.mark.slow
def test_permutation_equivariance_of_degree():
    graph = FeaturedGraph(["1", "", "0"], [(0, 1)])
    _assert_equivariant(assemble_rgnn(SMPGA_DEGREE), graph, (2, 0, 1))
