"""
Sketches of the coarsest stable partition, realizability, and reconstruction
of graphs from node colors.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import TYPE_CHECKING

import networkx as nx
import numpy as np

from rgnn_compiler.errors import MalformedDag, NotRealizable
from rgnn_compiler.graphs import FeaturedGraph
from rgnn_compiler.refinement import stable_partition

if TYPE_CHECKING:
    from collections.abc import Sequence

    from rgnn_compiler.refinement import ColorDag

logger = logging.getLogger(__name__)

Matrix = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class Sketch:
    """
    Class degrees, class sizes and class features of a partition.

    Attributes
    ----------
    A
        A[i][j] is the number of neighbors in class j of any node in class i.
    b
        The class sizes.
    c
        The class features.
    """

    A: Matrix
    b: tuple[int, ...]
    c: tuple[str, ...]

    def __post_init__(self) -> None:
        ell = len(self.b)
        if len(self.c) != ell or len(self.A) != ell or any(len(r) != ell for r in self.A):
            raise ValueError("Sketch dimensions disagree")

    @property
    def ell(self) -> int:
        """Number of classes."""
        return len(self.b)

    def dumps(self) -> str:
        """Text dump with `A` rows, then `b` and `c` lines."""
        return _dump_matrix(self.A) + _dump_row("b", self.b) + _dump_row("c", self.c)


@dataclass(frozen=True)
class WeakNodeSketch:
    """
    A sketch without class sizes, marking the class of a root node.

    Attributes
    ----------
    A
        Class degree matrix of the root's connected component.
    c
        The class features.
    k
        The root's class.
    """

    A: Matrix
    c: tuple[str, ...]
    k: int

    def __post_init__(self) -> None:
        ell = len(self.c)
        if len(self.A) != ell or any(len(r) != ell for r in self.A):
            raise ValueError("Sketch dimensions disagree")
        if not 0 <= self.k < ell:
            raise ValueError(f"Root class {self.k} is out of range")

    @property
    def ell(self) -> int:
        """Number of classes."""
        return len(self.c)

    def dumps(self) -> str:
        """Text dump with `A` rows, then `c` and `k` lines."""
        return _dump_matrix(self.A) + _dump_row("c", self.c) + f"k {self.k}\n"


def sketch(graph: FeaturedGraph) -> Sketch:
    """
    The sketch of a graph.

    Parameters
    ----------
    graph
        The featured graph.

    Returns
    -------
    Sketch
        Classes in canonical order.
    """
    classes = stable_partition(graph).classes
    class_of = {v: i for i, members in enumerate(classes) for v in members}
    A = []
    for members in classes:
        row = [0] * len(classes)
        for w in graph.adjacency[members[0]]:
            row[class_of[w]] += 1
        A.append(tuple(row))
    return Sketch(
        tuple(A),
        tuple(len(members) for members in classes),
        tuple(graph.features[members[0]] for members in classes),
    )


def weak_node_sketch(graph: FeaturedGraph, v: int) -> WeakNodeSketch:
    """
    The weak node sketch of a node, computed on its connected component.

    Parameters
    ----------
    graph
        The featured graph.
    v
        The root node.

    Returns
    -------
    WeakNodeSketch
        The weak node sketch.
    """
    component, root = graph.component_of(v)
    s = sketch(component)
    classes = stable_partition(component).classes
    k = next(i for i, members in enumerate(classes) if root in members)
    return WeakNodeSketch(s.A, s.c, k)


def weak_node_sketch_from_dag(dag: ColorDag) -> WeakNodeSketch:
    """
    Read the weak node sketch off a final-color dag.

    The classes are the nodes of level n. The class degrees come from the
    level n + 1 node that points to the class through its label-0 edge.

    Parameters
    ----------
    dag
        A single-color dag with 2n + 1 levels.

    Returns
    -------
    WeakNodeSketch
        The weak node sketch of any rooted graph with this color.
    """
    levels = dag.num_levels
    if levels < 3 or levels % 2 == 0:
        raise MalformedDag(f"A final color has 2n + 1 levels, got {levels}")
    if len(dag.roots) != 1:
        raise MalformedDag("Expected a single-color dag")
    n = (levels - 1) // 2
    ell = dag.level_size(n)
    successor: dict[int, int] = {}
    for j in range(dag.level_size(n + 1)):
        successor.setdefault(dag.own_child(n + 1, j), j)
    if len(successor) != ell:
        raise MalformedDag(f"Level {n} is not stable in the dag")
    A = []
    for i in range(ell):
        mult = dag.neighbor_multiplicities(n + 1, successor[i])
        A.append(tuple(mult.get(j, 0) for j in range(ell)))
    c = tuple(dag.feature_of(n, i) for i in range(ell))
    k = dag.ancestor(2 * n, 0, n)
    return WeakNodeSketch(tuple(A), c, k)


def check_realizable(s: Sketch) -> bool:
    """
    Whether a sketch is realized by some simple graph.

    Besides parity (b_i A_ii even) and symmetry (b_i A_ij = b_j A_ji), a
    simple graph also needs A_ii <= b_i - 1 and A_ij <= b_j.

    Parameters
    ----------
    s
        The sketch.

    Returns
    -------
    bool
        True when the conditions hold.
    """
    A = np.array(s.A, dtype=object).reshape(s.ell, s.ell)
    b = np.array(s.b, dtype=object)
    if s.ell == 0:
        return True
    if any(x < 1 for x in s.b) or any(x < 0 for x in A.flat):
        return False
    diag = np.diagonal(A)
    parity = all((b * diag) % 2 == 0)
    flow = b[:, None] * A
    symmetric = bool(np.all(flow == flow.T))
    bounded = all(diag <= b - 1) and bool(np.all(A <= b[None, :]))
    return parity and symmetric and bounded


def realize_sketch(s: Sketch) -> tuple[FeaturedGraph, tuple[tuple[int, ...], ...]]:
    """
    Build a graph and a partition realizing a sketch.

    Class i gets consecutive node ids. Inside a class the nodes form a
    circulant graph; between classes i < j, node p of class i is joined to
    nodes (p A_ij + r) mod b_j of class j for r < A_ij.

    Parameters
    ----------
    s
        A realizable sketch.

    Returns
    -------
    tuple[FeaturedGraph, tuple[tuple[int, ...], ...]]
        The graph and its partition into classes.
    """
    if not check_realizable(s):
        raise NotRealizable(f"Sketch is not realizable:\n{s.dumps()}")
    offsets = np.cumsum((0, *s.b))
    classes = tuple(
        tuple(range(int(offsets[i]), int(offsets[i + 1]))) for i in range(s.ell)
    )
    edges = []
    for i, size in enumerate(s.b):
        degree = s.A[i][i]
        steps = list(range(1, degree // 2 + 1))
        if degree % 2:
            steps.append(size // 2)
        block = nx.circulant_graph(size, steps)
        edges += [(classes[i][u], classes[i][v]) for u, v in block.edges]
        for j in range(i + 1, s.ell):
            a = s.A[i][j]
            edges += [
                (classes[i][p], classes[j][(p * a + r) % s.b[j]])
                for p in range(size)
                for r in range(a)
            ]
    features = [s.c[i] for i in range(s.ell) for _ in classes[i]]
    return FeaturedGraph(features, edges), classes


def realize_weak_node_sketch(s: WeakNodeSketch, n: int) -> tuple[FeaturedGraph, int]:
    """
    Build a rooted graph of order n whose root component realizes the sketch.

    Class sizes are fixed up to a common factor by b_i A_ij = b_j A_ji along
    the support graph; the smallest factor meeting the other conditions and
    fitting in n nodes is used, and the rest is padded with isolated nodes.

    Parameters
    ----------
    s
        The weak node sketch.
    n
        The order of the result.

    Returns
    -------
    tuple[FeaturedGraph, int]
        The graph and the root.
    """
    if n < 1:
        raise NotRealizable(f"Order must be positive, got {n}")
    base = _size_ratios(s)
    m = 1
    while m * sum(base) <= n:
        candidate = Sketch(s.A, tuple(m * x for x in base), s.c)
        if check_realizable(candidate):
            graph, classes = realize_sketch(candidate)
            padding = n - graph.n
            graph = graph.disjoint_union(FeaturedGraph([""] * padding))
            logger.debug("Realized a weak node sketch with class sizes %s", candidate.b)
            return graph, classes[s.k][0]
        m += 1
    raise NotRealizable(f"No realization of order at most {n}")


def reconstruct_from_dag(dag: ColorDag) -> tuple[FeaturedGraph, int]:
    """
    A rooted graph of the same order whose root has the given final color.

    Parameters
    ----------
    dag
        A final-color dag with 2n + 1 levels.

    Returns
    -------
    tuple[FeaturedGraph, int]
        The graph and the root.
    """
    n = (dag.num_levels - 1) // 2
    return realize_weak_node_sketch(weak_node_sketch_from_dag(dag), n)


def reconstruct_graph_from_node_dag(dag: ColorDag) -> FeaturedGraph:
    """
    A connected graph Color Refinement cannot tell apart from the graph the
    color was taken from.

    Parameters
    ----------
    dag
        A final-color dag of a node of a connected graph.

    Returns
    -------
    FeaturedGraph
        The reconstructed graph.
    """
    n = (dag.num_levels - 1) // 2
    s = weak_node_sketch_from_dag(dag)
    base = _size_ratios(s)
    total = sum(base)
    if n % total:
        raise NotRealizable(f"Class ratios {base} do not divide order {n}")
    graph, _ = realize_sketch(Sketch(s.A, tuple(n // total * x for x in base), s.c))
    return graph


def class_sizes(s: WeakNodeSketch, n: int) -> tuple[int, ...]:
    """
    Class sizes of a connected graph of order n with this weak sketch.

    Parameters
    ----------
    s
        The weak node sketch.
    n
        The order of the connected graph.

    Returns
    -------
    tuple[int, ...]
        The class sizes.
    """
    base = _size_ratios(s)
    total = sum(base)
    if n % total:
        raise NotRealizable(f"Class ratios {base} do not divide order {n}")
    return tuple(n // total * x for x in base)


def _size_ratios(s: WeakNodeSketch) -> tuple[int, ...]:
    """Smallest positive integer class sizes consistent with b_i A_ij = b_j A_ji."""
    A = np.array(s.A, dtype=object).reshape(s.ell, s.ell)
    support = (A > 0).astype(int)
    if np.any(support != support.T):
        raise NotRealizable("Support of the class degree matrix is not symmetric")
    np.fill_diagonal(support, 0)
    if not nx.is_connected(nx.from_numpy_array(support)):
        raise NotRealizable("Support graph of the sketch is not connected")

    x: dict[int, Fraction] = {0: Fraction(1)}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in range(s.ell):
            if i == j or not support[i, j]:
                continue
            ratio = x[i] * A[i, j] / A[j, i]
            if j not in x:
                x[j] = ratio
                queue.append(j)
            elif x[j] != ratio:
                raise NotRealizable("Class degree ratios are inconsistent")
    scale = lcm(*(q.denominator for q in x.values()))
    ints = [int(x[i] * scale) for i in range(s.ell)]
    common = gcd(*ints)
    return tuple(v // common for v in ints)


def _dump_matrix(A: Sequence[Sequence[int]]) -> str:
    return "".join("A " + " ".join(str(x) for x in row) + "\n" for row in A)


def _dump_row(name: str, values: Sequence) -> str:
    return name + " " + " ".join(str(v) if v != "" else "-" for v in values) + "\n"
