"""
The switched networks an R-GNN is assembled from, written in MLP Code.

Natural-number inputs cannot be copied under a condition with ReLU gadgets,
so every network counts up to them and winds its counters back to zero
before it turns off. Values in [0, 1] are loaded with `set_if`.
"""

from __future__ import annotations

from fractions import Fraction
from functools import cache
from typing import TYPE_CHECKING

from rgnn_compiler.encodings import decode_rb, decode_rq, encode_rb, encode_rq
from rgnn_compiler.machines import pair_encode, split_tape
from rgnn_compiler.mlp.code import MlpCode, V
from rgnn_compiler.mlp.switched import SwitchedCode

if TYPE_CHECKING:
    import numpy as np

    from rgnn_compiler.mlp.switched import SwitchedNetwork

AMPLIFICATION = 16


def _bits(rng: np.random.Generator, low: int, high: int) -> str:
    length = int(rng.integers(low, high + 1))
    return "".join(str(int(b)) for b in rng.integers(0, 2, size=length))


class CountedLoop:
    """
    Phase pair `up`/`down` over a counter `j`.

    `up` is active for `limit` recurrences while `j` counts up, then `down`
    winds `j` back to zero. Call `flags` before the statements that act in
    the `up` phase and `update` after them.

    Parameters
    ----------
    code
        The program.
    limit
        Name of the natural-number bound.
    tag
        Prefix of the declared variables.

    Returns
    -------
    None
    """

    def __init__(self, code: MlpCode, limit: str, tag: str = "loop") -> None:
        self.code = code
        self.limit = limit
        self.tag = tag
        self.j = code.state(f"{tag}_j")
        self.up = code.state(f"{tag}_up")
        self.down = code.state(f"{tag}_down")

    def flags(self, go: str) -> str:
        """Declare the transition flags; return the name of the done flag."""
        c, t = self.code, self.tag
        c.var(f"{t}_empty")
        c.relu(f"{t}_empty", 1 - V(self.limit))
        c.var(f"{t}_enter")
        c.relu(f"{t}_enter", V(go) - V(f"{t}_empty"))
        c.var(f"{t}_top")
        c.lsig(f"{t}_top", V(self.j) + 2 - V(self.limit))
        c.var(f"{t}_up_end")
        c.relu(f"{t}_up_end", V(self.up) + V(f"{t}_top") - 1)
        c.var(f"{t}_bottom")
        c.lsig(f"{t}_bottom", 2 - V(self.j))
        c.var(f"{t}_quick")
        c.relu(f"{t}_quick", V(go) + V(f"{t}_empty") - 1)
        c.var(f"{t}_down_end")
        c.relu(f"{t}_down_end", V(self.down) + V(f"{t}_bottom") - 1)
        c.var(f"{t}_done")
        c.let(f"{t}_done", V(f"{t}_quick") + V(f"{t}_down_end"))
        return f"{t}_done"

    def update(self) -> None:
        """Advance the counter and the phases."""
        c, t = self.code, self.tag
        c.let(self.j, V(self.j) + V(self.up) - V(self.down))
        c.let(self.up, V(self.up) + V(f"{t}_enter") - V(f"{t}_up_end"))
        c.let(self.down, V(self.down) + V(f"{t}_up_end") - V(f"{t}_down_end"))


@cache
def message_width_network(scale: int = 3) -> SwitchedNetwork:
    """
    Compute `scale * k * n^4` from naturals (k, n).

    An odometer of five counters (one up to k, four up to n) adds `scale`
    to the output once per tick; a full counter is wound back to zero before
    the next one moves. The output is cleared first.

    Parameters
    ----------
    scale
        The constant factor.

    Returns
    -------
    SwitchedNetwork
        Inputs (k, n), output (width,).
    """
    c = SwitchedCode("message-width", ["k", "n"], ["width"])
    for name in ("clear", "count", *(f"rst{i}" for i in range(5))):
        c.state(name)
    for i in range(5):
        c.state(f"c{i}")
    c.begin()
    limit = ["k", "n", "n", "n", "n"]

    c.var("nonzero")
    c.lsig("nonzero", "width")
    c.var("zk")
    c.relu("zk", 1 - V("k"))
    c.var("zn")
    c.relu("zn", 1 - V("n"))
    c.var("empty")
    c.lsig("empty", V("zk") + V("zn"))
    c.var("clear_dec")
    c.relu("clear_dec", V("clear") + V("nonzero") - 1)
    c.var("clear_end")
    c.relu("clear_end", V("clear") - V("nonzero"))
    c.var("clear_done")
    c.relu("clear_done", V("clear_end") + V("empty") - 1)
    c.var("clear_go")
    c.relu("clear_go", V("clear_end") - V("empty"))
    c.var("wrap")
    c.lsig("wrap", V("c0") + 2 - V("k"))
    c.var("count_wrap")
    c.relu("count_wrap", V("count") + V("wrap") - 1)
    for i in range(5):
        c.var(f"last{i}")
        c.lsig(f"last{i}", 2 - V(f"c{i}"))
        c.var(f"end{i}")
        c.relu(f"end{i}", V(f"rst{i}") + V(f"last{i}") - 1)
    for i in range(4):
        c.var(f"full{i}")
        c.lsig(f"full{i}", V(f"c{i + 1}") + 2 - V(limit[i + 1]))
        c.var(f"carry_full{i}")
        c.relu(f"carry_full{i}", V(f"end{i}") + V(f"full{i}") - 1)
        c.var(f"carry_ok{i}")
        c.relu(f"carry_ok{i}", V(f"end{i}") - V(f"full{i}"))
    c.var("done")
    c.let("done", V("clear_done") + V("end4"))

    c.let("width", V("width") + scale * V("count") - V("clear_dec"))
    c.let("c0", V("c0") + V("count") - V("rst0"))
    for i in range(4):
        c.let(f"c{i + 1}", V(f"c{i + 1}") + V(f"end{i}") - V(f"rst{i + 1}"))
    c.let("clear", V("clear") - V("clear_end") + V("start"))
    ok = sum((V(f"carry_ok{i}") for i in range(4)), V("clear_go"))
    c.let("count", V("count") - V("count_wrap") + ok)
    c.let("rst0", V("rst0") + V("count_wrap") - V("end0"))
    for i in range(4):
        c.let(f"rst{i + 1}", V(f"rst{i + 1}") + V(f"carry_full{i}") - V(f"end{i + 1}"))
    c.finish("done")

    def target(inputs):
        k, n = inputs
        return (Fraction(scale * k * n**4),)

    def sampler(rng):
        return (Fraction(int(rng.integers(0, 3))), Fraction(int(rng.integers(0, 4))))

    return c.build(target, sampler)


@cache
def binary_to_quaternary_network() -> SwitchedNetwork:
    """
    Convert rbe(y) to rqe(y) for a known length L.

    The granularity 2^-L is prepared by halving, then every bit is probed at
    its threshold, amplified until the tracker reaches 1, and appended as a
    quaternary digit.

    Returns
    -------
    SwitchedNetwork
        Inputs (L, x), output (q,).
    """
    c = SwitchedCode("binary-to-quaternary", ["length", "x"], ["q"])
    for name in ("scale", "probe", "amp", "emit", "j", "g", "r", "p", "a", "c1", "c3"):
        c.state(name)
    c.begin()
    c.var("zl")
    c.relu("zl", 1 - V("length"))
    c.var("quick")
    c.relu("quick", V("start") + V("zl") - 1)
    c.var("go")
    c.relu("go", V("start") - V("zl"))
    c.var("sj")
    c.lsig("sj", V("j") + 2 - V("length"))
    c.var("scale_end")
    c.relu("scale_end", V("scale") + V("sj") - 1)
    c.var("pn")
    c.lsig("pn", V("r") - Fraction(1, 2) + V("g"))
    c.var("an")
    c.lsig("an", AMPLIFICATION * V("a"))
    c.var("pa")
    c.lsig("pa", AMPLIFICATION * V("p"))
    c.var("full")
    c.lsig("full", 2 * V("an") - 1)
    c.var("amp_end")
    c.relu("amp_end", V("amp") + V("full") - 1)
    c.var("lj")
    c.lsig("lj", 2 - V("j"))
    c.var("emit_end")
    c.relu("emit_end", V("emit") + V("lj") - 1)
    c.var("emit_more")
    c.relu("emit_more", V("emit") - V("lj"))
    c.var("low")
    c.lsig("low", V("c1") - V("p"))
    c.var("high")
    c.lsig("high", V("c3") - 1 + V("p"))
    c.var("nr")
    c.lsig("nr", 2 * V("r") - V("p"))
    c.var("g2")
    c.lsig("g2", 2 * V("g"))

    c.set_if("q", "start", 0)
    c.increase_if("q", "emit", V("low") + V("high"))
    c.set_if("c1", "start", Fraction(1, 4))
    c.div_if("c1", 4, "emit")
    c.set_if("c3", "start", Fraction(3, 4))
    c.div_if("c3", 4, "emit")
    c.set_if("r", "start", "x")
    c.set_if("r", "emit", "nr")
    c.set_if("g", "start", 1)
    c.div_if("g", 2, "scale")
    c.set_if("g", "emit", "g2")
    c.set_if("p", "probe", "pn")
    c.set_if("p", "amp", "pa")
    c.set_if("a", "probe", "g")
    c.set_if("a", "amp", "an")
    c.let("j", V("j") + V("scale") - V("emit"))
    c.let("scale", V("scale") + V("go") - V("scale_end"))
    c.let("probe", V("scale_end") + V("emit_more"))
    c.let("amp", V("amp") + V("probe") - V("amp_end"))
    c.let("emit", V("amp_end"))
    c.var("done")
    c.let("done", V("quick") + V("emit_end"))
    c.finish("done")

    def target(inputs):
        length, x = inputs
        return (encode_rq(decode_rb(x, int(length))),)

    def sampler(rng):
        y = _bits(rng, 0, 8)
        return (Fraction(len(y)), encode_rb(y))

    return c.build(target, sampler)


@cache
def quaternary_to_binary_network() -> SwitchedNetwork:
    """
    Convert rqe(y) to rbe(y), one digit per recurrence.

    Returns
    -------
    SwitchedNetwork
        Input (q,), output (b,).
    """
    c = SwitchedCode("quaternary-to-binary", ["q"], ["b"])
    for name in ("run", "r", "h"):
        c.state(name)
    c.begin()
    c.var("ne")
    c.lsig("ne", 4 * V("r"))
    c.var("top")
    c.lsig("top", 4 * V("r") - 2)
    c.var("step")
    c.relu("step", V("run") + V("ne") - 1)
    c.var("end")
    c.relu("end", V("run") - V("ne"))
    c.var("nr")
    c.lsig("nr", 4 * V("r") - 1 - 2 * V("top"))
    c.var("bit")
    c.lsig("bit", V("h") + V("top") - 1)

    c.set_if("b", "start", 0)
    c.increase_if("b", "step", "bit")
    c.set_if("r", "start", "q")
    c.set_if("r", "step", "nr")
    c.set_if("h", "start", Fraction(1, 2))
    c.div_if("h", 2, "step")
    c.let("run", V("run") + V("start") - V("end"))
    c.finish("end")

    def target(inputs):
        return (encode_rb(decode_rq(inputs[0])),)

    def sampler(rng):
        return (encode_rq(_bits(rng, 0, 10)),)

    return c.build(target, sampler)


@cache
def result_reader_network() -> SwitchedNetwork:
    """
    Read the finished flag and the result off a quaternary stack-1 layout.

    From rqe(x4 pair(x3) x1) it produces x4 and rbe(x3 1); the trailing 1
    keeps the length of x3 recoverable.

    Returns
    -------
    SwitchedNetwork
        Input (q,), outputs (flag, result).
    """
    c = SwitchedCode("result-reader", ["q"], ["flag", "result"])
    for name in ("read_flag", "marker", "bit", "r", "h"):
        c.state(name)
    c.begin()
    c.var("top")
    c.lsig("top", 4 * V("r") - 2)
    c.var("np")
    c.lsig("np", 4 * V("r") - 1 - 2 * V("top"))
    c.var("marker_one")
    c.relu("marker_one", V("marker") + V("top") - 1)
    c.var("marker_zero")
    c.relu("marker_zero", V("marker") - V("top"))
    c.var("pop")
    c.let("pop", V("read_flag") + V("marker_one") + V("bit"))
    c.var("u")
    c.lsig("u", V("h") + V("top") - 1)

    c.set_if("flag", "start", 0)
    c.set_if("flag", "read_flag", "top")
    c.set_if("result", "start", 0)
    c.increase_if("result", "bit", "u")
    c.increase_if("result", "marker_zero", "h")
    c.set_if("r", "start", "q")
    c.set_if("r", "pop", "np")
    c.set_if("h", "start", Fraction(1, 2))
    c.div_if("h", 2, "bit")
    c.let("marker", V("read_flag") + V("bit"))
    c.let("bit", V("marker_one"))
    c.let("read_flag", V("start"))
    c.finish("marker_zero")

    def target(inputs):
        _, x3, x4 = split_tape(decode_rq(inputs[0]))
        return (Fraction(int(x4)), encode_rb(x3 + "1"))

    def sampler(rng):
        flag = str(int(rng.integers(0, 2)))
        return (encode_rq(flag + pair_encode(_bits(rng, 0, 5)) + _bits(rng, 0, 5)),)

    return c.build(target, sampler)


@cache
def unary_prefix_network() -> SwitchedNetwork:
    """
    Prefix a quaternary string with 1^m 0.

    Returns
    -------
    SwitchedNetwork
        Inputs (m, tail), output (q,) = rqe(1^m 0) followed by tail.
    """
    c = SwitchedCode("unary-prefix", ["count", "tail"], ["q"])
    loop = CountedLoop(c, "count")
    c.begin()
    done = loop.flags("start")
    c.var("first")
    c.lsig("first", V("tail") / 4 + Fraction(1, 4))
    c.var("ones")
    c.lsig("ones", V("q") / 4 + Fraction(3, 4))
    c.set_if("q", "start", "first")
    c.set_if("q", loop.up, "ones")
    loop.update()
    c.finish(done)

    def target(inputs):
        m, tail = inputs
        return (encode_rq("1" * int(m) + "0" + decode_rq(tail)),)

    def sampler(rng):
        return (Fraction(int(rng.integers(0, 5))), encode_rq(_bits(rng, 0, 6)))

    return c.build(target, sampler)


@cache
def initial_message_network() -> SwitchedNetwork:
    """
    Halve z `total` times, adding 1/2 right after halving number `at`.

    With total = W - k and at = k' + n - k this turns rbe(Z) into the
    rational binary value of the initial W-bit message.

    Returns
    -------
    SwitchedNetwork
        Inputs (total, at, z), output (m,).
    """
    c = SwitchedCode("initial-message", ["total", "at", "z"], ["m"])
    loop = CountedLoop(c, "total")
    c.begin()
    done = loop.flags("start")
    c.var("hit_a")
    c.lsig("hit_a", V(loop.j) + 2 - V("at"))
    c.var("hit_b")
    c.lsig("hit_b", V("at") - V(loop.j))
    c.var("hit")
    c.relu("hit", V(loop.up) + V("hit_a") + V("hit_b") - 2)
    c.set_if("m", "start", "z")
    c.div_if("m", 2, loop.up)
    c.increase_if("m", "hit", Fraction(1, 2))
    loop.update()
    c.finish(done)

    def target(inputs):
        total, at, z = (int(inputs[0]), int(inputs[1]), inputs[2])
        value = z / 2**total
        if 1 <= at <= total:
            value += Fraction(1, 2 ** (total - at + 1))
        return (value,)

    def sampler(rng):
        total = int(rng.integers(0, 8))
        return (Fraction(total), Fraction(int(rng.integers(0, total + 2))), encode_rb(_bits(rng, 0, 4)))

    return c.build(target, sampler)


@cache
def concat_network() -> SwitchedNetwork:
    """
    Concatenate quaternary strings: head + tail / 4^length.

    Returns
    -------
    SwitchedNetwork
        Inputs (head, tail, length), output (q,).
    """
    c = SwitchedCode("concat", ["head", "tail", "length"], ["q"])
    loop = CountedLoop(c, "length")
    c.begin()
    done = loop.flags("start")
    c.set_if("q", "start", "tail")
    c.div_if("q", 4, loop.up)
    c.increase_if("q", done, "head")
    loop.update()
    c.finish(done)

    def target(inputs):
        head, tail, length = inputs
        return (head + tail / 4 ** int(length),)

    def sampler(rng):
        head = _bits(rng, 0, 5)
        return (encode_rq(head), encode_rq(_bits(rng, 0, 5)), Fraction(len(head)))

    return c.build(target, sampler)


@cache
def synchronizer() -> MlpCode:
    """
    Round synchronizer with external inputs (N, neighbor flags, busy).

    With p = t mod 2N, the first output is 1 exactly when p = 0, N > 0 and
    the second output was 0 one recurrence earlier. The second output is 0
    while p <= N and otherwise the saturated running OR of itself, the
    neighbors' second outputs and the node's own busy flag.

    Returns
    -------
    MlpCode
        The program over `[start, flag, u, down, N, neighbors, busy]`.
    """
    c = MlpCode("synchronizer")
    for name in ("start", "flag", "u", "down"):
        c.state(name)
    for name in ("N", "neighbors", "busy"):
        c.external_input(name)
    c.var("ready")
    c.lsig("ready", "N")
    c.var("at_top")
    c.lsig("at_top", V("u") - V("N") + 1)
    c.var("up_move")
    c.relu("up_move", V("ready") - V("down") - V("at_top"))
    c.var("nonzero")
    c.lsig("nonzero", "u")
    c.var("dec")
    c.relu("dec", V("ready") + V("nonzero") - V("up_move") - 1)
    c.var("above")
    c.lsig("above", V("u") - 1)
    c.let("u", V("u") + V("up_move") - V("dec"))
    c.relu("down", V("above") - V("up_move"))
    c.relu("start", V("ready") - V("down") - V("u") - V("flag"))
    c.var("seen")
    c.lsig("seen", V("flag") + V("neighbors") + V("busy"))
    c.relu("flag", V("seen") + V("down") - 1)
    return c


def synchronizer_reference(N: int, externals: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """
    Closed form of the synchronizer outputs.

    Parameters
    ----------
    N
        The round parameter.
    externals
        (neighbors, busy) for t = 1, 2, ...

    Returns
    -------
    list[tuple[int, int]]
        (start, flag) for t = 1, 2, ...
    """
    flag, out = 0, []
    for t, (neighbors, busy) in enumerate(externals, start=1):
        p = t % (2 * N) if N else 0
        start = int(N > 0 and p == 0 and flag == 0)
        flag = min(1, flag + neighbors + busy) if N and p > N else 0
        out.append((start, flag))
    return out
