import pytest

from rgnn_compiler.errors import MalformedDag, MalformedEncoding
from rgnn_compiler.graphs import FeaturedGraph, cycle_graph, path_graph, square_with_pendant
from rgnn_compiler.refinement import (
    ColorDag,
    all_node_dags,
    color_dag,
    combine_dags,
    cr_equivalent,
    dag_decode,
    dag_encode,
    final_color_dag,
    leaf_dag,
    refine,
    stable_partition,
    wl_equivalent,
    wl_refine,
)


def test_refine_path():
    result = refine(path_graph(3), 2)
    assert result.num_classes(0) == 1
    assert result.num_classes(1) == 2
    assert result.pointers[1][0] == result.pointers[1][2] != result.pointers[1][1]
    assert result.dag.depth == 2
    with pytest.raises(ValueError):
        refine(path_graph(3), -1)


def test_stable_partition():
    partition = stable_partition(path_graph(3))
    assert partition.classes == ((0, 2), (1,))
    assert partition.rounds_to_stabilize == 1
    assert partition.class_of(2) == 0

    partition = stable_partition(square_with_pendant())
    assert {frozenset(c) for c in partition.classes} == {
        frozenset({0}),
        frozenset({1, 3}),
        frozenset({2}),
        frozenset({4}),
    }
    assert partition.rounds_to_stabilize == 2


def test_features_split_classes():
    g = FeaturedGraph(["1", "0", "0"], [(0, 1), (1, 2), (0, 2)])
    assert stable_partition(g).classes == ((1, 2), (0,))


def test_node_dags():
    g = square_with_pendant("1")
    dags = all_node_dags(g, 2)
    assert dags == [color_dag(g, v, 2) for v in range(g.n)]
    assert dags[1] == dags[3]
    assert len({dags[v] for v in range(g.n)}) == 4
    assert dags[0].roots == range(1)
    assert dags[0].feature_of(2, 0) == "1"
    assert dags[0].neighbor_multiplicities(1, 0) == {0: 1}
    assert sorted(dags[0].neighbor_multiplicities(2, 0).values()) == [1, 2]
    assert final_color_dag(g, 4).depth == 10


def test_combine_dags_adds_a_round():
    g = square_with_pendant("0")
    for t in range(3):
        dags = all_node_dags(g, t)
        deeper = all_node_dags(g, t + 1)
        for v in range(g.n):
            assert combine_dags(dags[v], [dags[w] for w in g.neighbors(v)]) == deeper[v]
    middle = combine_dags(leaf_dag("1"), [leaf_dag("1"), leaf_dag("1")])
    assert middle == color_dag(path_graph(3, "1"), 1, 1)
    with pytest.raises(MalformedDag):
        combine_dags(leaf_dag("1"), [middle])


def test_dag_validation():
    with pytest.raises(MalformedDag, match="sorted"):
        ColorDag(("1", "0"))
    with pytest.raises(MalformedDag, match="label-0"):
        ColorDag(("",), ((((1, 0),),),))
    with pytest.raises(MalformedDag, match="leaves the dag"):
        ColorDag(("",), ((((0, 1),),),))


def test_dag_dumps():
    assert leaf_dag("").dumps() == "level 0: 0.0 leaf=-\n"
    dag = color_dag(path_graph(2, "1"), 0, 1)
    assert dag.dumps() == "level 0: 0.0 leaf=1\nlevel 1: 1.0\nedge 1.0 0.0 label=0\nedge 1.0 0.0 label=1\n"


def test_dag_encoding():
    for dag in all_node_dags(square_with_pendant("10"), 3, wl=True):
        assert dag_decode(dag_encode(dag)) == dag
    assert dag_encode(leaf_dag("")) == "10" + "101" + "0"
    with pytest.raises(MalformedEncoding):
        dag_decode("111")
    with pytest.raises(MalformedEncoding):
        dag_decode(dag_encode(leaf_dag("1")) + "0")


def test_weisfeiler_leman():
    result = wl_refine(path_graph(3), 1)
    assert result.num_classes(1) == 2
    labels = {label for node in result.dag.levels[0] for label, _ in node}
    assert labels == {-2, -1, 0, 1, 2}


def test_equivalence():
    hexagon = cycle_graph(6)
    triangles = cycle_graph(3).disjoint_union(cycle_graph(3))
    assert cr_equivalent(hexagon, triangles)
    assert wl_equivalent(hexagon, triangles)
    assert not cr_equivalent(path_graph(3), cycle_graph(3))
    assert not cr_equivalent(path_graph(3), path_graph(4))
    assert cr_equivalent(path_graph(3, "1"), path_graph(3, "1").relabel([1, 0, 2]))
    assert not cr_equivalent(path_graph(2, "1"), path_graph(2, "0"))
