from fractions import Fraction

import pytest

from rgnn_compiler.errors import MalformedEncoding
from rgnn_compiler.graphs import FeaturedGraph, path_graph
from rgnn_compiler.library import FEATURE_ECHO, feature_echo_program, level_parity_program
from rgnn_compiler.mlp.network import Layer, Mlp
from rgnn_compiler.rgnn.assembler import assemble_rgnn
from rgnn_compiler.utils.io import (
    format_rational,
    parse_bundle,
    parse_graph,
    parse_mlp,
    parse_program,
    parse_rational,
    read_bundle,
    read_graph,
    read_program,
    write_bundle,
    write_graph,
    write_mlp,
    write_program,
)


def test_rationals():
    assert format_rational(Fraction(3, 4)) == "3/4"
    assert format_rational(2) == "2"
    assert parse_rational("-5/10") == Fraction(-1, 2)
    with pytest.raises(MalformedEncoding):
        parse_rational("1/0")


def test_write_graph(tmp_path):
    graph = FeaturedGraph(["1", "", "01"], [(1, 0), (1, 2)])
    filepath = tmp_path / "graph.txt"
    write_graph(graph, filepath)
    assert (
        filepath.read_text()
        == "graph n=3 k=2\nnode 0 1\nnode 1 -\nnode 2 01\nedge 0 1\nedge 1 2\n"
    )
    assert read_graph(filepath) == graph


def test_parse_graph_errors():
    with pytest.raises(MalformedEncoding, match="must start"):
        parse_graph("node 0 1\n")
    with pytest.raises(MalformedEncoding, match="ids 0..1"):
        parse_graph("graph n=2 k=0\nnode 0 -\n")
    with pytest.raises(MalformedEncoding, match="k=3"):
        parse_graph("graph n=1 k=3\nnode 0 1\n")
    with pytest.raises(MalformedEncoding, match="unexpected"):
        parse_graph("graph n=1\nnode 0 1\nvertex 1\n")


def test_program_round_trip(tmp_path):
    for program in (level_parity_program(), feature_echo_program()):
        filepath = tmp_path / "program.txt"
        text = write_program(program, filepath)
        assert text.startswith(f"states {program.num_states}\n")
        assert read_program(filepath) == program


def test_parse_program_rejects_duplicates():
    text = "states 2\nstart 0\nhalt 1\ntrans 0 e e -> 1 nop nop\ntrans 0 e e -> 1 pop nop\n"
    with pytest.raises(MalformedEncoding, match="second rule"):
        parse_program(text)
    with pytest.raises(MalformedEncoding, match="missing halt"):
        parse_program("states 2\nstart 0\n")


def test_mlp_dense_and_sparse():
    sparse = Mlp(
        (
            Layer(2, (((0, 1),), ((1, 1),), (), ()), (0, 0, 0, 1)),
            Layer(4, (((3, 2),), (), ()), (0, 0, 1)),
            Layer(3, ((), ((2, 1),)), (0, 0)),
        )
    )
    text = write_mlp(sparse)
    assert "dims 3 4 sparse\n3 0 2\nbias 0 0 1\n" in text
    assert parse_mlp(text) == sparse
    assert write_mlp(parse_mlp(text)) == text

    dense = Mlp((Layer(2, (((0, 1), (1, Fraction(-1, 2))), ((1, 3),)), (Fraction(1, 4), 0)),))
    text = write_mlp(dense)
    assert text == "mlp d_in=2 d_out=2 layers=1\ndims 2 2\n1 -1/2\n0 3\nbias 1/4 0\n"
    assert parse_mlp(text)([1, 1]) == dense([1, 1]) == (Fraction(3, 4), 3)


def test_parse_mlp_errors():
    with pytest.raises(MalformedEncoding, match="needs 2 entries"):
        parse_mlp("mlp d_in=2 d_out=1 layers=1\ndims 1 2\n1\nbias 0\n")
    with pytest.raises(MalformedEncoding, match="Header"):
        parse_mlp("mlp d_in=3 d_out=1 layers=1\ndims 1 2\n1 1\nbias 0\n")


def test_graph_text_survives_comments():
    text = "# a path\n" + write_graph(path_graph(3, "1"))
    assert parse_graph(text) == path_graph(3, "1")


def test_bundle(tmp_path):
    network = assemble_rgnn(FEATURE_ECHO).network("hybrid")
    filepath = tmp_path / "echo.bundle"
    text = write_bundle(network, filepath)
    assert text.startswith("rgnn mode=hybrid d=")
    reloaded = read_bundle(filepath)
    assert reloaded.mode == "hybrid"
    assert reloaded.names == network.names
    assert reloaded.initial == network.initial
    assert reloaded.blocks == network.blocks
    assert not reloaded.global_readout
    assert reloaded.width_factor == network.width_factor
    x = network.initial_state(1, 1, Fraction(3, 4))
    vector = x + (0,) * network.d
    assert reloaded.network(vector) == network.network(vector)


def test_bundle_errors():
    with pytest.raises(MalformedEncoding, match="must start"):
        parse_bundle("mlp d_in=1 d_out=1 layers=0\n")
    with pytest.raises(MalformedEncoding, match="names"):
        parse_bundle("rgnn mode=hybrid d=4\nnames a b\ninit 0\nmlp d_in=8 d_out=4 layers=0\n")
