"""
Featured graphs: undirected simple graphs with a bitstring on every node.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import networkx as nx

from rgnn_compiler.encodings import check_bits
from rgnn_compiler.errors import NodeNotInGraph

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence


@dataclass(frozen=True)
class FeaturedGraph:
    """
    An undirected graph on nodes 0..n-1 with a bitstring feature per node.

    Attributes
    ----------
    features
        The feature of each node.
    edges
        The edges as sorted pairs (u, v) with u < v.
    """

    features: tuple[str, ...]
    edges: frozenset[tuple[int, int]]

    def __init__(
        self, features: Sequence[str], edges: Iterable[tuple[int, int]] = ()
    ) -> None:
        """
        Build a featured graph.

        Parameters
        ----------
        features
            The feature of each node; the node count is its length.
        edges
            Pairs of node indices. Duplicates are merged.

        Returns
        -------
        None
        """
        features = tuple(check_bits(f) for f in features)
        n = len(features)
        normalized = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"Self-loop at node {u}")
            for w in (u, v):
                if not 0 <= w < n:
                    raise NodeNotInGraph(f"Edge ({u}, {v}) leaves the graph of order {n}")
            normalized.add((min(u, v), max(u, v)))
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "edges", frozenset(normalized))

    @property
    def n(self) -> int:
        """Number of nodes."""
        return len(self.features)

    @property
    def k(self) -> int:
        """Length of the longest feature."""
        return max((len(f) for f in self.features), default=0)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Sorted neighbor lists."""
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(a)) for a in nbrs)

    def neighbors(self, v: int) -> tuple[int, ...]:
        """
        Neighbors of a node.

        Parameters
        ----------
        v
            The node.

        Returns
        -------
        tuple[int, ...]
            The sorted neighbors.
        """
        self.check_node(v)
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        """Number of neighbors of `v`."""
        return len(self.neighbors(v))

    def check_node(self, v: int) -> None:
        """
        Raise `NodeNotInGraph` unless `v` is a node.

        Parameters
        ----------
        v
            The node.

        Returns
        -------
        None
        """
        if not isinstance(v, int) or not 0 <= v < self.n:
            raise NodeNotInGraph(f"Node {v} is not in a graph of order {self.n}")

    def to_networkx(self) -> nx.Graph:
        """
        Convert to networkx; features are stored in the "feature" attribute.

        Returns
        -------
        nx.Graph
            A fresh graph.
        """
        g = nx.Graph()
        g.add_nodes_from((v, {"feature": f}) for v, f in enumerate(self.features))
        g.add_edges_from(sorted(self.edges))
        return g

    @classmethod
    def from_networkx(
        cls, g: nx.Graph, feature_attr: str = "feature", default: str = ""
    ) -> FeaturedGraph:
        """
        Convert from networkx. Nodes are renumbered in sorted order.

        Parameters
        ----------
        g
            The graph.
        feature_attr
            The node attribute holding the bitstring feature.
        default
            Feature for nodes without the attribute.

        Returns
        -------
        FeaturedGraph
            The converted graph.
        """
        order = sorted(g.nodes)
        index = {v: i for i, v in enumerate(order)}
        features = [g.nodes[v].get(feature_attr, default) for v in order]
        return cls(features, ((index[u], index[v]) for u, v in g.edges))

    def is_connected(self) -> bool:
        """Whether the graph is connected (the empty graph is not)."""
        return self.n > 0 and nx.is_connected(self.to_networkx())

    def component_of(self, v: int) -> tuple[FeaturedGraph, int]:
        """
        The connected component containing a node.

        Parameters
        ----------
        v
            The node.

        Returns
        -------
        tuple[FeaturedGraph, int]
            The component, renumbered in increasing node order, and the index
            of `v` inside it.
        """
        self.check_node(v)
        nodes = sorted(nx.node_connected_component(self.to_networkx(), v))
        return self.subgraph(nodes), nodes.index(v)

    def subgraph(self, nodes: Sequence[int]) -> FeaturedGraph:
        """
        Induced subgraph, renumbered in the given order.

        Parameters
        ----------
        nodes
            The nodes to keep.

        Returns
        -------
        FeaturedGraph
            The induced subgraph.
        """
        index = {v: i for i, v in enumerate(nodes)}
        return FeaturedGraph(
            [self.features[v] for v in nodes],
            (
                (index[u], index[w])
                for u, w in self.edges
                if u in index and w in index
            ),
        )

    def relabel(self, perm: Sequence[int]) -> FeaturedGraph:
        """
        Apply a node permutation: node v becomes node perm[v].

        Parameters
        ----------
        perm
            A permutation of 0..n-1.

        Returns
        -------
        FeaturedGraph
            The relabelled graph.
        """
        if sorted(perm) != list(range(self.n)):
            raise ValueError("Not a permutation of the nodes")
        features = [""] * self.n
        for v, f in enumerate(self.features):
            features[perm[v]] = f
        return FeaturedGraph(features, ((perm[u], perm[v]) for u, v in self.edges))

    def disjoint_union(self, other: FeaturedGraph) -> FeaturedGraph:
        """
        Disjoint union; the nodes of `other` follow those of `self`.

        Parameters
        ----------
        other
            The second graph.

        Returns
        -------
        FeaturedGraph
            The union.
        """
        shift = self.n
        return FeaturedGraph(
            self.features + other.features,
            list(self.edges) + [(u + shift, v + shift) for u, v in other.edges],
        )

    def with_features(self, features: Sequence[str]) -> FeaturedGraph:
        """Same edges, new features."""
        return FeaturedGraph(features, self.edges)


def path_graph(n: int, feature: str = "") -> FeaturedGraph:
    """Path on `n` nodes with a uniform feature."""
    return FeaturedGraph.from_networkx(_uniform(nx.path_graph(n), feature))


def cycle_graph(n: int, feature: str = "") -> FeaturedGraph:
    """Cycle on `n` nodes with a uniform feature."""
    return FeaturedGraph.from_networkx(_uniform(nx.cycle_graph(n), feature))


def complete_graph(n: int, feature: str = "") -> FeaturedGraph:
    """Complete graph on `n` nodes with a uniform feature."""
    return FeaturedGraph.from_networkx(_uniform(nx.complete_graph(n), feature))


def star_graph(leaves: int, feature: str = "") -> FeaturedGraph:
    """Star with center 0 and `leaves` leaves."""
    return FeaturedGraph.from_networkx(_uniform(nx.star_graph(leaves), feature))


def square_with_pendant(feature: str = "") -> FeaturedGraph:
    """
    A 4-cycle 0-1-2-3 with an extra node 4 attached to node 0.

    Two rounds of refinement split it into four classes: {0}, {1, 3}, {2}
    and {4}.

    Parameters
    ----------
    feature
        The uniform feature.

    Returns
    -------
    FeaturedGraph
        The graph.
    """
    return FeaturedGraph([feature] * 5, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 4)])


def _uniform(g: nx.Graph, feature: str) -> nx.Graph:
    nx.set_node_attributes(g, feature, "feature")
    return g
