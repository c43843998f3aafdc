import networkx as nx
import pytest

from rgnn_compiler.errors import MalformedDag, NotRealizable
from rgnn_compiler.graphs import FeaturedGraph, path_graph, square_with_pendant
from rgnn_compiler.refinement import cr_equivalent, final_color_dag, leaf_dag
from rgnn_compiler.sketches import (
    Sketch,
    WeakNodeSketch,
    check_realizable,
    class_sizes,
    realize_sketch,
    realize_weak_node_sketch,
    reconstruct_from_dag,
    reconstruct_graph_from_node_dag,
    sketch,
    weak_node_sketch,
    weak_node_sketch_from_dag,
)


def test_sketch_of_path():
    s = sketch(path_graph(3))
    assert s == Sketch(((0, 1), (2, 0)), (2, 1), ("", ""))
    assert s.ell == 2
    assert s.dumps() == "A 0 1\nA 2 0\nb 2 1\nc - -\n"


def test_check_realizable():
    assert check_realizable(sketch(square_with_pendant()))
    assert not check_realizable(Sketch(((1,),), (1,), ("",)))
    assert not check_realizable(Sketch(((1,),), (3,), ("",)))
    assert not check_realizable(Sketch(((0, 1), (1, 0)), (2, 1), ("", "")))
    with pytest.raises(ValueError, match="dimensions"):
        Sketch(((0,),), (1, 1), ("", ""))


def test_realize_sketch():
    s = sketch(path_graph(3, "1"))
    graph, classes = realize_sketch(s)
    assert classes == ((0, 1), (2,))
    assert graph == FeaturedGraph(["1"] * 3, [(0, 2), (1, 2)])
    assert sketch(graph) == s
    with pytest.raises(NotRealizable):
        realize_sketch(Sketch(((1,),), (1,), ("",)))


def test_realize_regular_sketch():
    s = Sketch(((3,),), (6,), ("0",))
    graph, _ = realize_sketch(s)
    assert all(graph.degree(v) == 3 for v in range(6))
    assert sketch(graph) == s


def test_weak_node_sketch():
    g = square_with_pendant("1")
    for v in range(g.n):
        assert weak_node_sketch(g, v) == weak_node_sketch_from_dag(final_color_dag(g, v))
    s = weak_node_sketch(g, 4)
    assert class_sizes(s, 5) == sketch(g).b
    assert s.dumps().endswith(f"k {s.k}\n")
    with pytest.raises(NotRealizable):
        class_sizes(s, 7)
    with pytest.raises(ValueError, match="out of range"):
        WeakNodeSketch(((0,),), ("",), 1)


def test_weak_node_sketch_ignores_other_components():
    g = path_graph(3).disjoint_union(square_with_pendant())
    assert weak_node_sketch(g, 1) == weak_node_sketch(path_graph(3), 1)


def test_reconstruct_from_dag():
    g = square_with_pendant("0")
    for v in range(g.n):
        dag = final_color_dag(g, v)
        h, root = reconstruct_from_dag(dag)
        assert h.n == g.n
        assert final_color_dag(h, root) == dag
    assert cr_equivalent(reconstruct_graph_from_node_dag(final_color_dag(g, 2)), g)


def test_realize_weak_node_sketch_pads():
    s = weak_node_sketch(path_graph(3), 0)
    graph, root = realize_weak_node_sketch(s, 4)
    assert graph.n == 4
    assert graph.degree(3) == 0
    assert graph.degree(root) == 1
    with pytest.raises(NotRealizable):
        realize_weak_node_sketch(s, 2)
    with pytest.raises(NotRealizable, match="not connected"):
        realize_weak_node_sketch(WeakNodeSketch(((0, 0), (0, 0)), ("0", "1"), 0), 4)


def test_weak_node_sketch_from_bad_dag():
    with pytest.raises(MalformedDag):
        weak_node_sketch_from_dag(leaf_dag("1"))


def test_sketches_decide_equivalence_up_to_five_nodes():
    graphs = [
        FeaturedGraph.from_networkx(g)
        for g in nx.graph_atlas_g()
        if 1 <= g.number_of_nodes() <= 5
    ]
    assert len(graphs) == 52
    sketches = [sketch(g) for g in graphs]
    for i, g in enumerate(graphs):
        for j in range(i, len(graphs)):
            assert (sketches[i] == sketches[j]) == cr_equivalent(g, graphs[j])


def test_equal_sketches_of_nonisomorphic_graphs():
    hexagon = FeaturedGraph([""] * 6, [(i, (i + 1) % 6) for i in range(6)])
    triangles = FeaturedGraph([""] * 6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    assert sketch(hexagon) == sketch(triangles)
    assert cr_equivalent(hexagon, triangles)
