"""
Text formats for graphs, stack programs, MLP weights and R-GNN bundles.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import TYPE_CHECKING

from rgnn_compiler.errors import MalformedEncoding
from rgnn_compiler.graphs import FeaturedGraph
from rgnn_compiler.machines import Arity, StackProgram
from rgnn_compiler.mlp.network import Layer, Mlp

if TYPE_CHECKING:
    from rgnn_compiler.mlp.network import Number
    from rgnn_compiler.rgnn.assembler import AssembledRgnn


def format_rational(value: Number) -> str:
    """`num/den`, or the integer alone."""
    q = Fraction(value)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def parse_rational(token: str) -> Fraction:
    """
    Parse `num/den` or an integer.

    Parameters
    ----------
    token
        The text.

    Returns
    -------
    Fraction
        The value.
    """
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise MalformedEncoding(f"Not a rational: {token!r}") from None


def _write(text: str, filepath: str | Path | None) -> str:
    if filepath is not None:
        with Path(filepath).open(mode="w") as fd:
            fd.write(text)
    return text


def _lines(text: str) -> list[tuple[int, list[str]]]:
    """Non-empty, non-comment lines with their line numbers."""
    return [
        (i, line.split())
        for i, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]


def _keyvalues(tokens: list[str], lineno: int) -> dict[str, str]:
    try:
        return dict(token.split("=", 1) for token in tokens)
    except ValueError:
        raise MalformedEncoding(f"Line {lineno}: expected key=value pairs") from None


# graphs


def write_graph(graph: FeaturedGraph, filepath: str | Path | None = None) -> str:
    """
    Write a graph in the text format.

    Parameters
    ----------
    graph
        The graph.
    filepath
        Where to write, if anywhere.

    Returns
    -------
    str
        The text.
    """
    text = f"graph n={graph.n} k={graph.k}\n"
    for v, feature in enumerate(graph.features):
        text += f"node {v} {feature or '-'}\n"
    for u, v in sorted(graph.edges):
        text += f"edge {u} {v}\n"
    return _write(text, filepath)


def parse_graph(text: str) -> FeaturedGraph:
    """
    Parse the graph text format.

    Parameters
    ----------
    text
        `graph n=<N> k=<K>`, then `node <id> <bits>` lines (`-` for the
        empty feature), then `edge <u> <v>` lines.

    Returns
    -------
    FeaturedGraph
        The graph.
    """
    lines = _lines(text)
    if not lines or lines[0][1][0] != "graph":
        raise MalformedEncoding("Graph file must start with a `graph` line")
    lineno, tokens = lines[0]
    header = _keyvalues(tokens[1:], lineno)
    try:
        n, k = int(header["n"]), int(header.get("k", -1))
    except (KeyError, ValueError):
        raise MalformedEncoding(f"Line {lineno}: graph header needs n=<N>") from None
    features: dict[int, str] = {}
    edges = []
    for lineno, tokens in lines[1:]:
        try:
            if tokens[0] == "node" and len(tokens) == 3:
                features[int(tokens[1])] = "" if tokens[2] == "-" else tokens[2]
            elif tokens[0] == "edge" and len(tokens) == 3:
                edges.append((int(tokens[1]), int(tokens[2])))
            else:
                raise MalformedEncoding(f"Line {lineno}: unexpected {' '.join(tokens)!r}")
        except MalformedEncoding:
            raise
        except ValueError:
            raise MalformedEncoding(f"Line {lineno}: node ids must be integers") from None
    if sorted(features) != list(range(n)):
        raise MalformedEncoding(f"Expected node lines for ids 0..{n - 1}")
    graph = FeaturedGraph([features[v] for v in range(n)], edges)
    if k >= 0 and graph.k != k:
        raise MalformedEncoding(f"Header says k={k}, longest feature has {graph.k} bits")
    return graph


def read_graph(filepath: str | Path) -> FeaturedGraph:
    """Read a graph file."""
    with Path(filepath).open(mode="r") as fd:
        return parse_graph(fd.read())


# stack programs


def write_program(program: StackProgram, filepath: str | Path | None = None) -> str:
    """
    Write a stack program in the text format.

    Parameters
    ----------
    program
        The program.
    filepath
        Where to write, if anywhere.

    Returns
    -------
    str
        The text.
    """
    text = (
        f"states {program.num_states}\nstart {program.start}\nhalt {program.halt}\n"
        f"arity {int(program.arity)}\n"
    )
    for (state, top1, top2), (target, op1, op2) in sorted(program.transitions.items()):
        text += f"trans {state} {top1} {top2} -> {target} {op1} {op2}\n"
    return _write(text, filepath)


def parse_program(text: str) -> StackProgram:
    """
    Parse the stack program text format.

    Parameters
    ----------
    text
        `states`, `start`, `halt` and optional `arity` lines, then
        `trans <state> <top1> <top2> -> <state'> <op1> <op2>` lines.

    Returns
    -------
    StackProgram
        The program.
    """
    fields: dict[str, int] = {}
    transitions = {}
    for lineno, tokens in _lines(text):
        try:
            if tokens[0] in ("states", "start", "halt", "arity") and len(tokens) == 2:
                fields[tokens[0]] = int(tokens[1])
            elif tokens[0] == "trans" and len(tokens) == 8 and tokens[4] == "->":
                key = (int(tokens[1]), tokens[2], tokens[3])
                if key in transitions:
                    raise MalformedEncoding(f"Line {lineno}: second rule for {key}")
                transitions[key] = (int(tokens[5]), tokens[6], tokens[7])
            else:
                raise MalformedEncoding(f"Line {lineno}: unexpected {' '.join(tokens)!r}")
        except MalformedEncoding:
            raise
        except ValueError:
            raise MalformedEncoding(f"Line {lineno}: states must be integers") from None
    missing = {"states", "start", "halt"} - set(fields)
    if missing:
        raise MalformedEncoding(f"Program is missing {', '.join(sorted(missing))}")
    return StackProgram(
        fields["states"],
        fields["start"],
        fields["halt"],
        transitions,
        Arity(fields.get("arity", Arity.BINARY)),
    )


def read_program(filepath: str | Path) -> StackProgram:
    """Read a stack program file."""
    with Path(filepath).open(mode="r") as fd:
        return parse_program(fd.read())


# MLP weights


def write_mlp(network: Mlp, filepath: str | Path | None = None) -> str:
    """
    Write an MLP in the weight format.

    Layers with at most half of their weights nonzero use the sparse
    variant, one `<row> <col> <weight>` line per weight.

    Parameters
    ----------
    network
        The network.
    filepath
        Where to write, if anywhere.

    Returns
    -------
    str
        The text.
    """
    return _write(_dump_mlp(network), filepath)


def _dump_mlp(network: Mlp) -> str:
    parts = [f"mlp d_in={network.d_in} d_out={network.d_out} layers={network.depth}\n"]
    for layer in network.layers:
        r, c = layer.out_dim, layer.in_dim
        if 2 * layer.size <= r * c:
            parts.append(f"dims {r} {c} sparse\n")
            parts.extend(
                f"{i} {j} {format_rational(w)}\n"
                for i, row in enumerate(layer.rows)
                for j, w in row
            )
        else:
            parts.append(f"dims {r} {c}\n")
            W, _ = layer.to_dense()
            parts.extend(" ".join(format_rational(w) for w in W[i]) + "\n" for i in range(r))
        parts.append("bias " + " ".join(format_rational(b) for b in layer.bias) + "\n")
    return "".join(parts)


def parse_mlp(text: str) -> Mlp:
    """
    Parse the weight format.

    Parameters
    ----------
    text
        `mlp d_in=<a> d_out=<b> layers=<m>`, then per layer `dims <r> <c>`
        followed by r rows of c entries (or `dims <r> <c> sparse` followed by
        `<row> <col> <weight>` lines) and a `bias` line.

    Returns
    -------
    Mlp
        The network.
    """
    return _parse_mlp_lines(_lines(text))


def _parse_mlp_lines(lines: list[tuple[int, list[str]]]) -> Mlp:
    if not lines or lines[0][1][0] != "mlp":
        raise MalformedEncoding("Weight file must start with an `mlp` line")
    header = _keyvalues(lines[0][1][1:], lines[0][0])
    layers = []
    pos = 1
    while pos < len(lines):
        lineno, tokens = lines[pos]
        if tokens[0] != "dims" or len(tokens) not in (3, 4):
            raise MalformedEncoding(f"Line {lineno}: expected `dims <r> <c>`")
        r, c = int(tokens[1]), int(tokens[2])
        sparse = len(tokens) == 4 and tokens[3] == "sparse"
        rows: list[list[tuple[int, Fraction]]] = [[] for _ in range(r)]
        pos += 1
        if sparse:
            while pos < len(lines) and lines[pos][1][0] != "bias":
                lineno, tokens = lines[pos]
                if len(tokens) != 3:
                    raise MalformedEncoding(f"Line {lineno}: expected `<row> <col> <weight>`")
                rows[int(tokens[0])].append((int(tokens[1]), parse_rational(tokens[2])))
                pos += 1
        else:
            for i in range(r):
                if pos >= len(lines) or len(lines[pos][1]) != c:
                    raise MalformedEncoding(f"Layer {len(layers) + 1}: row {i} needs {c} entries")
                weights = [parse_rational(t) for t in lines[pos][1]]
                rows[i] = [(j, w) for j, w in enumerate(weights) if w]
                pos += 1
        if pos >= len(lines) or lines[pos][1][0] != "bias":
            raise MalformedEncoding(f"Layer {len(layers) + 1} has no `bias` line")
        lineno, tokens = lines[pos]
        bias = [parse_rational(t) for t in tokens[1:]]
        if len(bias) != r:
            raise MalformedEncoding(f"Line {lineno}: expected {r} biases")
        layers.append(
            Layer(c, tuple(map(tuple, rows)), tuple(map(_plain, bias)))
        )
        pos += 1
    network = Mlp(tuple(layers))
    expected = (header.get("d_in"), header.get("d_out"), header.get("layers"))
    if expected != (str(network.d_in), str(network.d_out), str(network.depth)):
        raise MalformedEncoding("Header does not match the layers")
    return network


def _plain(q: Fraction) -> Number:
    return q.numerator if q.denominator == 1 else q


def read_mlp(filepath: str | Path) -> Mlp:
    """Read a weight file."""
    with Path(filepath).open(mode="r") as fd:
        return parse_mlp(fd.read())


# R-GNN bundles


def write_bundle(network: AssembledRgnn, filepath: str | Path | None = None) -> str:
    """
    Write an assembled R-GNN with everything needed to run it again.

    Parameters
    ----------
    network
        The assembled network.
    filepath
        Where to write, if anywhere.

    Returns
    -------
    str
        The text: an `rgnn` header, `names`, `init` and `block` lines, then
        the weights.
    """
    text = (
        f"rgnn mode={network.mode} d={network.d} global={int(network.global_readout)} "
        f"width_factor={network.width_factor}\n"
        "names " + " ".join(network.names) + "\n"
        "init " + " ".join(format_rational(x) for x in network.initial) + "\n"
    )
    for block, (start, stop) in network.blocks.items():
        text += f"block {block} {start} {stop}\n"
    return _write(text + _dump_mlp(network.network), filepath)


def parse_bundle(text: str) -> AssembledRgnn:
    """
    Parse an R-GNN bundle.

    Parameters
    ----------
    text
        The bundle text.

    Returns
    -------
    AssembledRgnn
        The network with its layout.
    """
    from rgnn_compiler.rgnn.assembler import AssembledRgnn

    lines = _lines(text)
    if not lines or lines[0][1][0] != "rgnn":
        raise MalformedEncoding("Bundle must start with an `rgnn` line")
    header = _keyvalues(lines[0][1][1:], lines[0][0])
    names: tuple[str, ...] = ()
    initial: tuple[Fraction, ...] = ()
    blocks = {}
    pos = 1
    while pos < len(lines) and lines[pos][1][0] != "mlp":
        lineno, tokens = lines[pos]
        if tokens[0] == "names":
            names = tuple(tokens[1:])
        elif tokens[0] == "init":
            initial = tuple(parse_rational(t) for t in tokens[1:])
        elif tokens[0] == "block" and len(tokens) == 4:
            blocks[tokens[1]] = (int(tokens[2]), int(tokens[3]))
        else:
            raise MalformedEncoding(f"Line {lineno}: unexpected {' '.join(tokens)!r}")
        pos += 1
    try:
        d, mode = int(header["d"]), header["mode"]
        global_readout = header.get("global", "0") == "1"
        width_factor = int(header.get("width_factor", "1"))
    except (KeyError, ValueError):
        raise MalformedEncoding("Bundle header needs mode=<m> and d=<d>") from None
    if len(names) != d or len(initial) != d - 3:
        raise MalformedEncoding(f"Bundle needs {d} names and {d - 3} initial values")
    network = _parse_mlp_lines(lines[pos:])
    if network.d_out != d or network.d_in != (3 if global_readout else 2) * d:
        raise MalformedEncoding("Bundle weights do not match its dimension")
    return AssembledRgnn(
        mode, network, names, initial, global_readout, width_factor, blocks
    )


def read_bundle(filepath: str | Path) -> AssembledRgnn:
    """Read an R-GNN bundle file."""
    with Path(filepath).open(mode="r") as fd:
        return parse_bundle(fd.read())
