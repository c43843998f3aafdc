"""
Command-line front end.

Exit codes: 0 on success, 1 when a verification campaign fails, 2 on usage
or input errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import TYPE_CHECKING

from rgnn_compiler import __version__
from rgnn_compiler.algorithms import run_mpcga_all, run_mplga, run_smpga
from rgnn_compiler.errors import MissingProgram, RgnnCompilerError
from rgnn_compiler.harness import GATES, STAGES, generate_graphs, verify_pipeline
from rgnn_compiler.library import LIBRARY, get_algorithm
from rgnn_compiler.lowering import lower_mpcga_to_mplga, lower_mplga_to_smpga
from rgnn_compiler.refinement import final_color_dag, refine
from rgnn_compiler.rgnn.assembler import assemble_rgnn
from rgnn_compiler.rgnn.runner import (
    run_graph_embedding,
    run_rgnn,
    run_rgnn_global,
    run_rgnn_rni,
    simulate,
)
from rgnn_compiler.sketches import reconstruct_from_dag, sketch, weak_node_sketch
from rgnn_compiler.utils.io import read_bundle, read_graph, write_bundle, write_graph, write_program

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    """The argument parser with one subcommand per pipeline task."""
    parser = argparse.ArgumentParser(
        prog="rgnn-compiler",
        description="Compile message-passing graph algorithms into exact-rational R-GNNs.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="logging threshold",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    algos = sorted(LIBRARY)

    p = sub.add_parser("refine", help="dump color dags after a number of rounds")
    p.add_argument("graph", type=Path)
    p.add_argument("--rounds", type=int, default=None, help="rounds, 2n by default")
    p.add_argument("--node", type=int, default=None, help="only this node")
    p.add_argument("--wl", action="store_true", help="Weisfeiler-Leman colors")
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("sketch", help="dump the sketch or a weak node sketch")
    p.add_argument("graph", type=Path)
    p.add_argument("--node", type=int, default=None)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("reconstruct", help="rebuild a rooted graph from a node's final color")
    p.add_argument("graph", type=Path)
    p.add_argument("--node", type=int, required=True)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("lower", help="lower an MPC-GA to MP-LGA and S-MP-GA")
    p.add_argument("--algo", choices=algos, required=True)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("compile", help="assemble the R-GNN of a native S-MP-GA")
    p.add_argument("--algo", choices=algos, required=True)
    p.add_argument("--mode", choices=["full", "hybrid"], default=None)
    p.add_argument("--out", type=Path, default=None, help="bundle file")

    p = sub.add_parser("run", help="run an algorithm at one stage on a graph")
    p.add_argument("graph", type=Path)
    p.add_argument("--algo", choices=algos, default=None)
    p.add_argument("--bundle", type=Path, default=None, help="run a compiled bundle")
    p.add_argument(
        "--stage",
        choices=["reference", "mpcga", "mplga", "smpga", "native", "rgnn"],
        default="rgnn",
    )
    p.add_argument("--mode", choices=["full", "hybrid"], default=None)
    p.add_argument("--global-readout", action="store_true")
    p.add_argument("--embedding", action="store_true", help="graph-level output")
    p.add_argument("--rni", action="store_true", help="random node initialization")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("verify", help="compare all stages on random graphs")
    p.add_argument("--algo", choices=algos, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=30)
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--edge-prob", type=float, default=0.5)
    p.add_argument("--feature-len", type=int, default=1)
    p.add_argument("--connected", action="store_true")
    p.add_argument("--stages", default=",".join(STAGES[:4]), help="comma-separated stages")
    for gate in GATES.values():
        p.add_argument("--" + gate.replace("_", "-"), type=int, default=None, dest=gate)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("gen", help="draw random graphs")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--edge-prob", type=float, default=0.5)
    p.add_argument("--feature-len", type=int, default=0)
    p.add_argument("--connected", action="store_true")
    p.add_argument("--out", type=Path, default=None, help="directory for graph files")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """
    Run the command line.

    Parameters
    ----------
    argv
        Arguments without the program name, `sys.argv[1:]` by default.

    Returns
    -------
    int
        The exit code.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (RgnnCompilerError, OSError, ValueError, KeyError) as err:
        sys.stderr.write(f"rgnn-compiler {args.command}: {err}\n")
        return 2


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with out.open(mode="w") as fd:
            fd.write(text)
        logger.info("Wrote %s", out)


def _refine(args: argparse.Namespace) -> int:
    graph = read_graph(args.graph)
    rounds = 2 * graph.n if args.rounds is None else args.rounds
    if rounds < 0:
        raise ValueError("--rounds must be nonnegative")
    result = refine(graph, rounds, wl=args.wl)
    nodes = range(graph.n) if args.node is None else [args.node]
    text = f"rounds {rounds} classes {result.num_classes(rounds)}\n"
    for v in nodes:
        graph.check_node(v)
        text += f"# node {v}\n" + result.node_dag(v).dumps()
    _emit(text, args.out)
    return 0


def _sketch(args: argparse.Namespace) -> int:
    graph = read_graph(args.graph)
    if args.node is None:
        text = sketch(graph).dumps()
    else:
        graph.check_node(args.node)
        text = weak_node_sketch(graph, args.node).dumps()
    _emit(text, args.out)
    return 0


def _reconstruct(args: argparse.Namespace) -> int:
    graph = read_graph(args.graph)
    graph.check_node(args.node)
    rebuilt, root = reconstruct_from_dag(final_color_dag(graph, args.node))
    _emit(f"# root {root}\n" + write_graph(rebuilt), args.out)
    return 0


def _lower(args: argparse.Namespace) -> int:
    entry = get_algorithm(args.algo)
    if entry.mpcga is None:
        raise MissingProgram(f"{args.algo} has no MPC-GA to lower")
    mplga = lower_mpcga_to_mplga(entry.mpcga)
    smpga = lower_mplga_to_smpga(mplga)
    text = (
        f"mpcga {entry.mpcga.machine.name}\n"
        f"mplga initial={mplga.initial_state or '-'} bound_scale={mplga.bound_scale}\n"
        f"smpga initial={smpga.initial_state or '-'} width_factor={smpga.width_factor}\n"
    )
    if entry.mpcga.machine.program is not None:
        text += "# machine\n" + write_program(entry.mpcga.machine.program)
    _emit(text, args.out)
    return 0


def _compile(args: argparse.Namespace) -> int:
    entry = get_algorithm(args.algo)
    if entry.native is None:
        raise MissingProgram(f"{args.algo} has no native S-MP-GA to compile")
    modes = None if args.mode is None else (args.mode,)
    rgnn = assemble_rgnn(entry.native, modes)
    network = rgnn.network(args.mode)
    if args.out is not None:
        write_bundle(network, args.out)
    sys.stdout.write(
        f"mode={network.mode} d={network.d} depth={network.network.depth} "
        f"weights={network.network.size}\n"
    )
    return 0


def _run(args: argparse.Namespace) -> int:
    graph = read_graph(args.graph)
    if args.bundle is not None:
        algorithm = get_algorithm(args.algo).native if args.algo else None
        run = simulate(read_bundle(args.bundle), graph, algorithm, args.max_steps)
        _emit(_outputs(run.outputs), args.out)
        return 0
    if args.algo is None:
        raise ValueError("run needs --algo or --bundle")
    entry = get_algorithm(args.algo)
    if args.stage == "reference":
        outputs = tuple(entry.reference(graph, v) for v in range(graph.n))
    elif args.stage in ("mpcga", "mplga", "smpga"):
        if entry.mpcga is None:
            raise MissingProgram(f"{args.algo} has no MPC-GA")
        outputs = _run_lowered(entry.mpcga, graph, args.stage)
    else:
        if entry.native is None:
            raise MissingProgram(f"{args.algo} has no native S-MP-GA")
        if args.stage == "native":
            outputs = run_smpga(entry.native, graph).outputs
        else:
            return _run_rgnn(args, entry.native, graph)
    _emit(_outputs(outputs), args.out)
    return 0


def _run_lowered(mpcga, graph, stage: str) -> tuple[str, ...]:
    if stage == "mpcga":
        return run_mpcga_all(mpcga, graph)
    mplga = lower_mpcga_to_mplga(mpcga)
    if stage == "mplga":
        return run_mplga(mplga, graph)
    return run_smpga(lower_mplga_to_smpga(mplga), graph).outputs


def _run_rgnn(args: argparse.Namespace, native, graph) -> int:
    modes = None if args.mode is None else (args.mode,)
    rgnn = assemble_rgnn(native, modes)
    if args.embedding:
        value = run_graph_embedding(rgnn, graph, mode=args.mode, max_steps=args.max_steps)
        _emit(f"graph {_show(value)}\n", args.out)
        return 0
    if args.rni:
        if args.seed is None:
            raise ValueError("--rni needs --seed")
        rni = run_rgnn_rni(rgnn, graph, args.seed, args.mode, args.max_steps)
        text = f"individualized {int(rni.individualized)}\n" + _outputs(rni.outputs)
        _emit(text, args.out)
        return 0
    if args.global_readout:
        run = run_rgnn_global(rgnn, graph, args.mode, args.max_steps)
    else:
        run = run_rgnn(rgnn, graph, args.mode, args.max_steps)
    text = _outputs(run.outputs) + f"# T={run.stats.time} L={run.stats.space}\n"
    _emit(text, args.out)
    return 0


def _verify(args: argparse.Namespace) -> int:
    entry = get_algorithm(args.algo)
    graphs = generate_graphs(
        args.count,
        args.seed,
        n_min=args.n_min,
        n_max=args.n_max,
        edge_prob=args.edge_prob,
        feature_len=args.feature_len,
        connected_only=args.connected or entry.connected_only,
    )
    stages = [s for s in args.stages.split(",") if s]
    gates = {gate: getattr(args, gate) for gate in GATES.values()}
    settings = {gate: value for gate, value in gates.items() if value is not None}
    report = verify_pipeline(entry, graphs, stages, settings)
    _emit(report.dumps(), args.out)
    return 0 if report.passed else 1


def _gen(args: argparse.Namespace) -> int:
    graphs = generate_graphs(
        args.count,
        args.seed,
        n_min=args.n_min,
        n_max=args.n_max,
        edge_prob=args.edge_prob,
        feature_len=args.feature_len,
        connected_only=args.connected,
    )
    if args.out is None:
        sys.stdout.write("\n".join(write_graph(g) for g in graphs))
        return 0
    args.out.mkdir(parents=True, exist_ok=True)
    for i, g in enumerate(graphs):
        write_graph(g, args.out / f"graph_{i}.txt")
    return 0


def _show(value: str | None) -> str:
    if value is None:
        return "null"
    return value or "-"


def _outputs(outputs: Sequence[str | None]) -> str:
    return "".join(f"{v} {_show(y)}\n" for v, y in enumerate(outputs))


COMMANDS = {
    "refine": _refine,
    "sketch": _sketch,
    "reconstruct": _reconstruct,
    "lower": _lower,
    "compile": _compile,
    "run": _run,
    "verify": _verify,
    "gen": _gen,
}


if __name__ == "__main__":
    sys.exit(main())
