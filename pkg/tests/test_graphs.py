import networkx as nx
import pytest

from rgnn_compiler.errors import MalformedEncoding, NodeNotInGraph
from rgnn_compiler.graphs import (
    FeaturedGraph,
    complete_graph,
    cycle_graph,
    path_graph,
    square_with_pendant,
    star_graph,
)


def test_featured_graph():
    g = FeaturedGraph(["1", "", "01"], [(1, 0), (0, 1), (2, 1)])
    assert g.n == 3
    assert g.k == 2
    assert g.edges == frozenset({(0, 1), (1, 2)})
    assert g.neighbors(1) == (0, 2)
    assert g.degree(0) == 1
    assert g.is_connected()


def test_featured_graph_errors():
    with pytest.raises(ValueError, match="Self-loop"):
        FeaturedGraph(["", ""], [(1, 1)])
    with pytest.raises(NodeNotInGraph):
        FeaturedGraph(["", ""], [(0, 2)])
    with pytest.raises(MalformedEncoding):
        FeaturedGraph(["12"])
    with pytest.raises(NodeNotInGraph):
        path_graph(3).neighbors(3)


def test_networkx_conversion():
    g = square_with_pendant("1")
    h = g.to_networkx()
    assert h.nodes[4]["feature"] == "1"
    assert FeaturedGraph.from_networkx(h) == g
    relabelled = nx.relabel_nodes(nx.path_graph(3), {0: "a", 1: "b", 2: "c"})
    assert FeaturedGraph.from_networkx(relabelled, default="0") == path_graph(3, "0")


def test_components_and_subgraphs():
    g = path_graph(2, "1").disjoint_union(cycle_graph(3, "0"))
    assert g.n == 5
    assert not g.is_connected()
    component, v = g.component_of(3)
    assert component == cycle_graph(3, "0")
    assert v == 1
    assert g.subgraph([4, 2]) == FeaturedGraph(["0", "0"], [(0, 1)])
    assert not FeaturedGraph([]).is_connected()


def test_relabel():
    g = FeaturedGraph(["1", "0", ""], [(0, 1)])
    assert g.relabel([2, 0, 1]) == FeaturedGraph(["0", "", "1"], [(0, 2)])
    with pytest.raises(ValueError, match="permutation"):
        g.relabel([0, 0, 1])


def test_families():
    assert len(complete_graph(4).edges) == 6
    assert star_graph(3).degree(0) == 3
    assert cycle_graph(4).degree(2) == 2
    assert path_graph(3).with_features(["1", "1", "1"]) == path_graph(3, "1")
