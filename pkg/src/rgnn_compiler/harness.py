"""
Random instances and verification campaigns across the pipeline stages.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cache
from typing import TYPE_CHECKING

import networkx as nx
import numpy as np

from rgnn_compiler.algorithms import run_mpcga_all, run_mplga, run_smpga
from rgnn_compiler.errors import InfeasibleParams, MissingProgram, RgnnCompilerError
from rgnn_compiler.graphs import FeaturedGraph
from rgnn_compiler.lowering import lower_mpcga_to_mplga, lower_mplga_to_smpga
from rgnn_compiler.rgnn.assembler import assemble_rgnn
from rgnn_compiler.rgnn.runner import run_rgnn
from rgnn_compiler.utils.params import get_setting

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from rgnn_compiler.algorithms import MpLga, SMpGa
    from rgnn_compiler.library import LibraryEntry
    from rgnn_compiler.rgnn.assembler import Rgnn

logger = logging.getLogger(__name__)

STAGES = ("mpcga", "mplga", "smpga", "native", "hybrid", "full")
GATES = {"smpga": "smpga_n_max", "hybrid": "rgnn_n_max", "full": "full_n_max"}
MAX_TRIES = 1000


def generate_graphs(
    count: int,
    seed: int,
    n_min: int = 1,
    n_max: int = 6,
    edge_prob: float = 0.5,
    feature_len: int = 0,
    connected_only: bool = False,
    degree_sequence: Sequence[int] | None = None,
) -> list[FeaturedGraph]:
    """
    Draw random featured graphs.

    Parameters
    ----------
    count
        Number of graphs.
    seed
        Seed; equal parameters and seed give equal lists.
    n_min
        Smallest order.
    n_max
        Largest order.
    edge_prob
        Probability of every edge in G(n, p).
    feature_len
        Every feature is a uniform bitstring of exactly this length.
    connected_only
        Redraw until the graph is connected.
    degree_sequence
        Draw graphs with this degree sequence instead of G(n, p).

    Returns
    -------
    list[FeaturedGraph]
        The graphs.
    """
    if n_min < 1 or n_min > n_max:
        raise InfeasibleParams(f"Need 1 <= n_min <= n_max, got {n_min} and {n_max}")
    if not 0 <= edge_prob <= 1:
        raise InfeasibleParams(f"Edge probability {edge_prob} is not in [0, 1]")
    if feature_len < 0 or count < 0:
        raise InfeasibleParams("Counts and feature lengths must be nonnegative")
    if connected_only and edge_prob == 0 and n_max > 1 and degree_sequence is None:
        raise InfeasibleParams("No connected graph with more than one node has edge probability 0")
    rng = np.random.default_rng(seed)
    graphs = []
    for _ in range(count):
        for _ in range(MAX_TRIES):
            g = _draw(rng, n_min, n_max, edge_prob, degree_sequence)
            if not connected_only or nx.is_connected(g):
                break
        else:
            raise InfeasibleParams(f"No connected graph in {MAX_TRIES} draws")
        features = [
            "".join(str(int(b)) for b in rng.integers(0, 2, size=feature_len))
            for _ in range(g.number_of_nodes())
        ]
        graphs.append(FeaturedGraph(features, g.edges))
    logger.debug("Generated %d graphs with seed %d", count, seed)
    return graphs


def _draw(
    rng: np.random.Generator,
    n_min: int,
    n_max: int,
    edge_prob: float,
    degree_sequence: Sequence[int] | None,
) -> nx.Graph:
    if degree_sequence is not None:
        try:
            g = nx.random_degree_sequence_graph(
                list(degree_sequence), seed=int(rng.integers(2**31)), tries=20
            )
        except (nx.NetworkXUnfeasible, nx.NetworkXError) as err:
            raise InfeasibleParams(f"Degree sequence {list(degree_sequence)}: {err}") from err
        return nx.convert_node_labels_to_integers(g)
    n = int(rng.integers(n_min, n_max + 1))
    g = nx.empty_graph(n)
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < edge_prob:
                g.add_edge(u, v)
    return g


@dataclass(frozen=True)
class Mismatch:
    """
    One node on which two stages disagree.

    Attributes
    ----------
    graph
        Index of the instance.
    node
        The node.
    stages
        The compared stages, the first being the expected side.
    expected
        Output of the first stage.
    actual
        Output of the second stage.
    """

    graph: int
    node: int
    stages: tuple[str, str]
    expected: str | None
    actual: str | None

    def dumps(self) -> str:
        """The `MISMATCH` report line."""
        return (
            f"MISMATCH graph={self.graph} node={self.node} stages={self.stages[0]}/{self.stages[1]} "
            f"expected={_show(self.expected)} actual={_show(self.actual)}\n"
        )


@dataclass(frozen=True)
class Violation:
    """A bound or stability violation, or a stage that failed to run."""

    graph: int
    stage: str
    detail: str

    def dumps(self) -> str:
        """The `VIOLATION` report line."""
        return f"VIOLATION graph={self.graph} stage={self.stage} {self.detail}\n"


@dataclass
class InstanceResult:
    """
    Stages run on one graph.

    Attributes
    ----------
    index
        Position in the campaign.
    n
        Graph order.
    stages
        Stages that ran.
    time
        T of the R-GNN run, if any.
    space
        L of the R-GNN run, if any.
    """

    index: int
    n: int
    stages: list[str] = field(default_factory=list)
    time: int | None = None
    space: int | None = None


@dataclass
class VerificationReport:
    """
    Outcome of a verification campaign.

    Attributes
    ----------
    campaign
        Campaign name.
    instances
        Per-instance summary.
    mismatches
        Disagreements between stages.
    violations
        Bound, stability and execution failures.
    """

    campaign: str
    instances: list[InstanceResult] = field(default_factory=list)
    mismatches: list[Mismatch] = field(default_factory=list)
    violations: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """PASS iff there are no mismatches and no violations."""
        return not self.mismatches and not self.violations

    def dumps(self) -> str:
        """
        The plain-text report.

        Returns
        -------
        str
            Reproducible for equal campaigns.
        """
        text = f"campaign {self.campaign} instances={len(self.instances)}\n"
        for inst in self.instances:
            stats = ""
            if inst.time is not None:
                stats = f" T={inst.time} L={inst.space}"
            text += f"instance {inst.index} n={inst.n} stages={','.join(inst.stages) or '-'}{stats}\n"
        text += "".join(m.dumps() for m in self.mismatches)
        text += "".join(v.dumps() for v in self.violations)
        return text + f"VERDICT {'PASS' if self.passed else 'FAIL'}\n"


def _show(value: str | None) -> str:
    if value is None:
        return "null"
    return value or "-"


def verify_pipeline(
    entry: LibraryEntry,
    graphs: Sequence[FeaturedGraph],
    stages: Sequence[str] = STAGES,
    settings: dict | None = None,
) -> VerificationReport:
    """
    Run every stage on every graph and compare node-wise with the reference.

    The lowered S-MP-GA and the R-GNN runs are size-gated by the settings
    `smpga_n_max`, `rgnn_n_max` and `full_n_max`. The R-GNN is built from
    the native S-MP-GA of the entry, or from the lowered chain when the
    entry has none. Full mode without a stack program is a violation.

    Parameters
    ----------
    entry
        A library algorithm.
    graphs
        The instances.
    stages
        Stages to run, from "mpcga", "mplga", "smpga", "native", "hybrid"
        and "full".
    settings
        Setting overrides.

    Returns
    -------
    VerificationReport
        Mismatches and violations; failures never raise.
    """
    unknown = set(stages) - set(STAGES)
    if unknown:
        raise ValueError(f"Unknown stages {sorted(unknown)}")
    report = VerificationReport(entry.name)
    gates = stage_gates(settings)
    runners = _stage_runners(entry, stages)
    for i, graph in enumerate(graphs):
        inst = InstanceResult(i, graph.n)
        report.instances.append(inst)
        if entry.connected_only and not graph.is_connected():
            logger.warning("Skipping disconnected graph %d for %s", i, entry.name)
            continue
        expected = tuple(entry.reference(graph, v) for v in range(graph.n))
        for stage in stages:
            if stage not in runners or graph.n > gates.get(stage, graph.n):
                continue
            inst.stages.append(stage)
            try:
                outputs = runners[stage](graph, inst, report)
            except RgnnCompilerError as err:
                report.violations.append(Violation(i, stage, f"{type(err).__name__}: {err}"))
                continue
            report.mismatches.extend(
                Mismatch(i, v, ("reference", stage), e, a)
                for v, (e, a) in enumerate(zip(expected, outputs))
                if e != a
            )
    logger.info(
        "Campaign %s: %d instances, %d mismatches, %d violations",
        entry.name,
        len(graphs),
        len(report.mismatches),
        len(report.violations),
    )
    return report


def stage_gates(settings: dict | None = None) -> dict[str, int]:
    """
    Largest order each size-gated stage runs on.

    Parameters
    ----------
    settings
        Setting overrides, e.g. from a campaign.

    Returns
    -------
    dict[str, int]
        Gate per stage name; stages without a gate are not listed.
    """
    return {stage: get_setting(key, settings) for stage, key in GATES.items()}


def _stage_runners(
    entry: LibraryEntry, stages: Sequence[str]
) -> dict[str, Callable[[FeaturedGraph, InstanceResult, VerificationReport], tuple]]:
    runners: dict[str, Callable] = {}
    native = compiled = entry.native
    if native is not None:
        runners["native"] = lambda g, inst, report: run_smpga(native, g).outputs
    if entry.mpcga is not None:
        algorithm = entry.mpcga
        runners["mpcga"] = lambda g, inst, report: run_mpcga_all(algorithm, g)
        runners["mplga"] = lambda g, inst, report: run_mplga(_mplga(algorithm), g)
        runners["smpga"] = lambda g, inst, report: run_smpga(_smpga(algorithm), g).outputs
        if compiled is None:
            compiled = _smpga(algorithm)
    if compiled is not None:
        for mode in ("hybrid", "full"):
            if mode in stages:
                runners[mode] = _rgnn_runner(compiled, mode)
    return runners


def _rgnn_runner(algorithm: SMpGa, mode: str) -> Callable:
    def run(g: FeaturedGraph, inst: InstanceResult, report: VerificationReport) -> tuple:
        if mode == "full" and algorithm.step.program is None:
            raise MissingProgram(f"Step {algorithm.step.name!r} has no stack program for full mode")
        rgnn = _rgnn(algorithm, mode)
        result = run_rgnn(rgnn, g, mode, extra_steps=2)
        width = rgnn.network(mode).width(g.k, g.n)
        inst.time, inst.space = result.stats.time, result.stats.space
        if not result.stats.stable:
            report.violations.append(Violation(inst.index, mode, "result changed after finishing"))
        if result.stats.max_message_bits > width:
            report.violations.append(
                Violation(
                    inst.index,
                    mode,
                    f"message of {result.stats.max_message_bits} bits exceeds W={width}",
                )
            )
        return result.outputs

    return run


@cache
def _mplga(algorithm) -> MpLga:
    return lower_mpcga_to_mplga(algorithm)


@cache
def _smpga(algorithm) -> SMpGa:
    return lower_mplga_to_smpga(_mplga(algorithm))


@cache
def _rgnn(algorithm: SMpGa, mode: str) -> Rgnn:
    return assemble_rgnn(algorithm, (mode,))
