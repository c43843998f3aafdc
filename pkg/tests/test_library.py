import pytest

from rgnn_compiler.algorithms import feature_bound, run_mpcga_all, run_smpga
from rgnn_compiler.errors import DimensionMismatch
from rgnn_compiler.graphs import FeaturedGraph, cycle_graph, path_graph, square_with_pendant
from rgnn_compiler.library import LIBRARY, first_sum_algorithm, get_algorithm, to_bits


def test_to_bits():
    assert to_bits(0) == "0"
    assert to_bits(6) == "110"


def test_get_algorithm():
    assert get_algorithm("degree").native is not None
    assert get_algorithm("class-size").connected_only
    with pytest.raises(KeyError, match="choose from"):
        get_algorithm("triangle-count")


@pytest.mark.parametrize("name", ["degree", "on-a-cycle", "class-size", "dag-identity", "level-parity"])
def test_mpcga_matches_reference(name):
    entry = LIBRARY[name]
    for g in (square_with_pendant(), cycle_graph(4, "1"), path_graph(3, "0")):
        assert run_mpcga_all(entry.mpcga, g) == tuple(entry.reference(g, v) for v in range(g.n))


@pytest.mark.parametrize("name", ["degree", "feature-echo", "graph-size", "non-neighbors"])
def test_native_matches_reference(name):
    entry = LIBRARY[name]
    g = FeaturedGraph(["10", "01", "11", "00"], [(0, 1), (1, 2), (1, 3)])
    assert run_smpga(entry.native, g).outputs == tuple(entry.reference(g, v) for v in range(g.n))


def test_class_size():
    g = square_with_pendant()
    assert run_mpcga_all(LIBRARY["class-size"].mpcga, g) == ("1", "10", "1", "10", "1")


@pytest.mark.parametrize("width_factor", [1, 2, 5])
def test_first_sum_width_factor(width_factor):
    degree = first_sum_algorithm("degree", lambda c, t, n: c, width_factor)
    g = FeaturedGraph(["10", "1", "", "111"], [(0, 1), (1, 2), (1, 3)])
    assert run_smpga(degree, g).outputs == ("1", "11", "1", "1")
    isolated = FeaturedGraph(["01", "1"])
    assert run_smpga(degree, isolated).outputs == ("0", "0")


def test_feature_bound():
    assert feature_bound(3 * 16 * 4, 2, 1) == 4
    assert feature_bound(36 * 3 * 2, 1, 36) == 2
    with pytest.raises(DimensionMismatch, match="multiple"):
        feature_bound(50, 2, 1)
