"""
Color Refinement and Weisfeiler-Leman colors as canonical leveled dags.

Level 0 of a dag holds the distinct initial features. A node on level
i >= 1 is a sorted tuple of (label, child) pairs pointing into level
i - 1: exactly one pair has label 0 and points to the node's own previous
color, a pair with label l >= 1 says that l neighbors had that color, and
(Weisfeiler-Leman only) a pair with label -l says that l non-neighbors had
it. Every level is sorted, so child indices are canonical and two dags are
equal exactly when they represent the same color.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import TYPE_CHECKING

from rgnn_compiler.encodings import (
    decode_zigzag,
    encode_code,
    encode_nat,
    encode_zigzag,
    read_code,
    read_nat,
)
from rgnn_compiler.errors import MalformedDag, MalformedEncoding

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from rgnn_compiler.graphs import FeaturedGraph

    DagNode = tuple[tuple[int, int], ...]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ColorDag:
    """
    A leveled, edge-labelled dag representing one or more colors.

    Attributes
    ----------
    leaves
        Level 0: the sorted, distinct feature bitstrings.
    levels
        Levels 1..t: sorted tuples of nodes, each node a sorted tuple of
        (label, child index) pairs.
    """

    leaves: tuple[str, ...]
    levels: tuple[tuple[DagNode, ...], ...] = ()

    def __post_init__(self) -> None:
        if list(self.leaves) != sorted(set(self.leaves)):
            raise MalformedDag("Leaves must be sorted and distinct")
        below = len(self.leaves)
        for i, level in enumerate(self.levels, start=1):
            if list(level) != sorted(set(level)):
                raise MalformedDag(f"Level {i} must be sorted and distinct")
            for node in level:
                if list(node) != sorted(set(node)):
                    raise MalformedDag(f"Node on level {i} has unsorted edges")
                if [label for label, _ in node].count(0) != 1:
                    raise MalformedDag(f"Node on level {i} needs one label-0 edge")
                for _, child in node:
                    if not 0 <= child < below:
                        raise MalformedDag(f"Edge from level {i} leaves the dag")
            below = len(level)

    @property
    def depth(self) -> int:
        """The refinement round t of the top level."""
        return len(self.levels)

    @property
    def num_levels(self) -> int:
        """Number of levels, t + 1."""
        return len(self.levels) + 1

    @property
    def size(self) -> int:
        """Total number of dag nodes."""
        return len(self.leaves) + sum(len(level) for level in self.levels)

    def level_size(self, i: int) -> int:
        """Number of nodes on level `i`."""
        return len(self.leaves) if i == 0 else len(self.levels[i - 1])

    @property
    def roots(self) -> range:
        """Indices of the nodes on the top level."""
        return range(self.level_size(self.depth))

    def own_child(self, i: int, j: int) -> int:
        """
        Follow the label-0 edge of node j on level i >= 1.

        Parameters
        ----------
        i
            The level.
        j
            The node index on that level.

        Returns
        -------
        int
            The index of the node's previous color on level i - 1.
        """
        return next(child for label, child in self.levels[i - 1][j] if label == 0)

    def ancestor(self, i: int, j: int, target: int) -> int:
        """
        Follow label-0 edges from node j on level i down to level `target`.

        Parameters
        ----------
        i
            The starting level.
        j
            The starting node.
        target
            The level to stop at.

        Returns
        -------
        int
            The node index on level `target`.
        """
        while i > target:
            j = self.own_child(i, j)
            i -= 1
        return j

    def feature_of(self, i: int, j: int) -> str:
        """The initial feature of the color at node j of level i."""
        return self.leaves[self.ancestor(i, j, 0)]

    def neighbor_multiplicities(self, i: int, j: int) -> dict[int, int]:
        """
        Neighbor color multiplicities of node j on level i >= 1.

        Parameters
        ----------
        i
            The level.
        j
            The node.

        Returns
        -------
        dict[int, int]
            Map from child index on level i - 1 to multiplicity.
        """
        return {child: label for label, child in self.levels[i - 1][j] if label > 0}

    def reduce(self, roots: Iterable[int]) -> ColorDag:
        """
        Keep only nodes reachable from the given top-level nodes.

        Parameters
        ----------
        roots
            Indices on the top level.

        Returns
        -------
        ColorDag
            The reduced dag, in canonical form.
        """
        keep = set(roots)
        kept: list[list[int]] = [[] for _ in range(self.num_levels)]
        for i in range(self.depth, 0, -1):
            kept[i] = sorted(keep)
            keep = {child for j in kept[i] for _, child in self.levels[i - 1][j]}
        kept[0] = sorted(keep)

        remap = {old: new for new, old in enumerate(kept[0])}
        leaves = tuple(self.leaves[j] for j in kept[0])
        levels = []
        for i in range(1, self.num_levels):
            nodes = [
                tuple(sorted((label, remap[child]) for label, child in self.levels[i - 1][j]))
                for j in kept[i]
            ]
            order = sorted(range(len(nodes)), key=lambda x, nodes=nodes: nodes[x])
            remap = {kept[i][x]: new for new, x in enumerate(order)}
            levels.append(tuple(nodes[x] for x in order))
        return ColorDag(leaves, tuple(levels))

    def dumps(self) -> str:
        """
        Text dump: one `level` line per node and one `edge` line per edge.

        Returns
        -------
        str
            The dump, byte-comparable between equal dags.
        """
        text = ""
        for j, leaf in enumerate(self.leaves):
            text += f"level 0: 0.{j} leaf={leaf or '-'}\n"
        for i, level in enumerate(self.levels, start=1):
            for j in range(len(level)):
                text += f"level {i}: {i}.{j}\n"
        for i, level in enumerate(self.levels, start=1):
            for j, node in enumerate(level):
                for label, child in node:
                    text += f"edge {i}.{j} {i - 1}.{child} label={label}\n"
        return text


@dataclass(frozen=True)
class Refinement:
    """
    Result of running refinement on a graph.

    Attributes
    ----------
    dag
        The all-colors dag; its top level holds every color of the last round.
    pointers
        pointers[i][v] is the index of the round-i color of v on level i.
    """

    dag: ColorDag
    pointers: tuple[tuple[int, ...], ...]

    def node_dag(self, v: int) -> ColorDag:
        """The single-color dag of node `v` at the last round."""
        return self.dag.reduce([self.pointers[-1][v]])

    def num_classes(self, i: int) -> int:
        """Number of distinct colors after round `i`."""
        return len(set(self.pointers[i]))


@dataclass(frozen=True)
class StablePartition:
    """
    The coarsest stable partition of a graph.

    Attributes
    ----------
    classes
        The classes in canonical order, members sorted.
    rounds_to_stabilize
        The first round t with the same partition as round t + 1.
    """

    classes: tuple[tuple[int, ...], ...]
    rounds_to_stabilize: int

    def class_of(self, v: int) -> int:
        """Index of the class that contains `v`."""
        return next(i for i, members in enumerate(self.classes) if v in members)


def refine(graph: FeaturedGraph, t: int, wl: bool = False) -> Refinement:
    """
    Run t rounds of Color Refinement (or Weisfeiler-Leman).

    Parameters
    ----------
    graph
        The featured graph.
    t
        The number of rounds.
    wl
        Also count the colors of non-neighbors (the node itself included),
        as negative labels.

    Returns
    -------
    Refinement
        The all-colors dag and per-node pointers.
    """
    if t < 0:
        raise ValueError(f"Round count must be non-negative, got {t}")
    leaves = tuple(sorted(set(graph.features)))
    leaf_index = {f: j for j, f in enumerate(leaves)}
    prev = tuple(leaf_index[f] for f in graph.features)
    pointers = [prev]
    levels = []
    for _ in range(t):
        everywhere = Counter(prev) if wl else Counter()
        keys = []
        for v in range(graph.n):
            around = Counter(prev[w] for w in graph.adjacency[v])
            key = [(0, prev[v])] + [(mult, c) for c, mult in around.items()]
            if wl:
                key += [
                    (-(everywhere[c] - around[c]), c)
                    for c in everywhere
                    if everywhere[c] > around[c]
                ]
            keys.append(tuple(sorted(key)))
        level = tuple(sorted(set(keys)))
        index = {key: j for j, key in enumerate(level)}
        prev = tuple(index[key] for key in keys)
        pointers.append(prev)
        levels.append(level)
    logger.debug("Refined a graph of order %d for %d rounds", graph.n, t)
    return Refinement(ColorDag(leaves, tuple(levels)), tuple(pointers))


def wl_refine(graph: FeaturedGraph, t: int) -> Refinement:
    """
    Run t rounds of the 1-dimensional Weisfeiler-Leman algorithm.

    Parameters
    ----------
    graph
        The featured graph.
    t
        The number of rounds.

    Returns
    -------
    Refinement
        The all-colors dag with negative labels for non-neighbors.
    """
    return refine(graph, t, wl=True)


def color_dag(graph: FeaturedGraph, v: int, t: int, wl: bool = False) -> ColorDag:
    """
    The single-color dag of a node after t rounds.

    Parameters
    ----------
    graph
        The featured graph.
    v
        The node.
    t
        The number of rounds.
    wl
        Use Weisfeiler-Leman colors instead of Color Refinement colors.

    Returns
    -------
    ColorDag
        The dag with a unique node on level t.
    """
    graph.check_node(v)
    return refine(graph, t, wl=wl).node_dag(v)


def final_color_dag(graph: FeaturedGraph, v: int) -> ColorDag:
    """The single-color dag after 2|G| rounds."""
    return color_dag(graph, v, 2 * graph.n)


def all_node_dags(graph: FeaturedGraph, t: int, wl: bool = False) -> list[ColorDag]:
    """
    Single-color dags of every node after t rounds.

    Parameters
    ----------
    graph
        The featured graph.
    t
        The number of rounds.
    wl
        Use Weisfeiler-Leman colors.

    Returns
    -------
    list[ColorDag]
        One dag per node.
    """
    result = refine(graph, t, wl=wl)
    cache: dict[int, ColorDag] = {}
    dags = []
    for v in range(graph.n):
        root = result.pointers[-1][v]
        if root not in cache:
            cache[root] = result.dag.reduce([root])
        dags.append(cache[root])
    return dags


def leaf_dag(feature: str) -> ColorDag:
    """The depth-0 dag of a feature."""
    return ColorDag((feature,))


def combine_dags(own: ColorDag, neighbors: Sequence[ColorDag]) -> ColorDag:
    """
    The dag of the color (own, {{neighbors}}), one round deeper.

    Parameters
    ----------
    own
        The node's single-color dag at depth t.
    neighbors
        The neighbors' single-color dags at depth t.

    Returns
    -------
    ColorDag
        The single-color dag at depth t + 1.
    """
    dags = [own, *neighbors]
    t = own.depth
    if any(d.depth != t or len(d.roots) != 1 for d in dags):
        raise MalformedDag("Combined dags must be single-color dags of equal depth")

    leaves = tuple(sorted({leaf for d in dags for leaf in d.leaves}))
    maps = [[leaves.index(leaf) for leaf in d.leaves] for d in dags]
    levels = []
    for i in range(1, t + 1):
        translated = [
            [
                tuple(sorted((label, m[child]) for label, child in node))
                for node in d.levels[i - 1]
            ]
            for d, m in zip(dags, maps)
        ]
        level = tuple(sorted({node for nodes in translated for node in nodes}))
        index = {node: j for j, node in enumerate(level)}
        maps = [[index[node] for node in nodes] for nodes in translated]
        levels.append(level)

    tops = [m[0] for m in maps]
    around = Counter(tops[1:])
    top = tuple(sorted([(0, tops[0])] + [(mult, c) for c, mult in around.items()]))
    levels.append((top,))
    return ColorDag(leaves, tuple(levels)).reduce([0])


def stable_partition(graph: FeaturedGraph) -> StablePartition:
    """
    The coarsest stable partition, classes in canonical order.

    Parameters
    ----------
    graph
        The featured graph.

    Returns
    -------
    StablePartition
        The partition and the round at which it stabilized.
    """
    n = graph.n
    result = refine(graph, max(n, 1))
    rounds = next(
        i for i in range(len(result.pointers) - 1)
        if result.num_classes(i) == result.num_classes(i + 1)
    )
    last = result.pointers[n] if n else ()
    classes: dict[int, list[int]] = {}
    for v, c in enumerate(last):
        classes.setdefault(c, []).append(v)
    return StablePartition(
        tuple(tuple(classes[c]) for c in sorted(classes)), rounds
    )


def cr_equivalent(g: FeaturedGraph, h: FeaturedGraph, wl: bool = False) -> bool:
    """
    Whether Color Refinement fails to distinguish two graphs.

    Parameters
    ----------
    g
        First graph.
    h
        Second graph.
    wl
        Use Weisfeiler-Leman instead.

    Returns
    -------
    bool
        True when the color multisets agree at every round.
    """
    if g.n != h.n:
        return False
    union = g.disjoint_union(h)
    result = refine(union, union.n, wl=wl)
    return all(
        Counter(colors[: g.n]) == Counter(colors[g.n :]) for colors in result.pointers
    )


def wl_equivalent(g: FeaturedGraph, h: FeaturedGraph) -> bool:
    """Whether Weisfeiler-Leman with non-edge information fails to distinguish two graphs."""
    return cr_equivalent(g, h, wl=True)


def dag_encode(dag: ColorDag) -> str:
    """
    Encode a dag as a bitstring.

    The layout is 1^T 0 for T levels, then the leaf count and the
    length-prefixed leaves, then for every higher level the node count and,
    per node, the edge count followed by (label, child) pairs. Labels are
    zigzag-mapped so negative labels are representable.

    Parameters
    ----------
    dag
        The dag.

    Returns
    -------
    str
        The encoding.
    """
    s = "1" * dag.num_levels + "0"
    s += encode_nat(len(dag.leaves)) + "".join(encode_code(leaf) for leaf in dag.leaves)
    for level in dag.levels:
        s += encode_nat(len(level))
        for node in level:
            s += encode_nat(len(node))
            for label, child in node:
                s += encode_nat(encode_zigzag(label)) + encode_nat(child)
    return s


def dag_decode(s: str) -> ColorDag:
    """
    Invert `dag_encode`.

    Parameters
    ----------
    s
        The encoding.

    Returns
    -------
    ColorDag
        The dag.
    """
    num_levels = 0
    while num_levels < len(s) and s[num_levels] == "1":
        num_levels += 1
    if num_levels == len(s) or num_levels == 0:
        raise MalformedEncoding("Missing level count")
    pos = num_levels + 1
    count, pos = read_nat(s, pos)
    leaves = []
    for _ in range(count):
        leaf, pos = read_code(s, pos)
        leaves.append(leaf)
    levels = []
    for _ in range(num_levels - 1):
        count, pos = read_nat(s, pos)
        level = []
        for _ in range(count):
            edges, pos = read_nat(s, pos)
            node = []
            for _ in range(edges):
                label, pos = read_nat(s, pos)
                child, pos = read_nat(s, pos)
                node.append((decode_zigzag(label), child))
            level.append(tuple(node))
        levels.append(tuple(level))
    if pos != len(s):
        raise MalformedEncoding("Trailing bits after dag")
    return ColorDag(tuple(leaves), tuple(levels))
