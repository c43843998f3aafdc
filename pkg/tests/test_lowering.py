import pytest

from rgnn_compiler.algorithms import MpLga, Step, run_mpcga_all, run_mplga, run_smpga
from rgnn_compiler.errors import MessageBoundExceeded, SlotOverflow
from rgnn_compiler.graphs import FeaturedGraph, path_graph, square_with_pendant
from rgnn_compiler.library import DAG_IDENTITY, DEGREE, LEVEL_PARITY
from rgnn_compiler.lowering import (
    extraction_rounds,
    lower_mpcga_to_mplga,
    lower_mplga_to_smpga,
    recover_neighbor_multisets,
    start_extraction,
)
from rgnn_compiler.machines import Arity


def test_recover_neighbor_multisets():
    g = square_with_pendant()
    messages = ["1", "10", "", "011", "1"]
    expected = [tuple(sorted(messages[w] for w in g.neighbors(v))) for v in range(g.n)]
    assert recover_neighbor_multisets(g, messages) == expected


def test_recover_equal_messages():
    g = FeaturedGraph(["", "", "", ""], [(0, 1), (0, 2), (0, 3)])
    assert recover_neighbor_multisets(g, ["0", "0", "0", "0"])[0] == ("0", "0", "0")


def test_extraction_needs_room():
    with pytest.raises(SlotOverflow):
        start_extraction("1" * 10, 4, 16)


def test_mpcga_to_mplga():
    g = square_with_pendant("1")
    lowered = lower_mpcga_to_mplga(DAG_IDENTITY)
    trace = []
    assert run_mplga(lowered, g, trace=trace) == run_mpcga_all(DAG_IDENTITY, g)
    assert len(trace) == 2 * g.n + 1
    assert all(state.startswith("10") for state in trace[-1])
    assert run_mplga(lower_mpcga_to_mplga(LEVEL_PARITY, "program"), g) == ("1",) * g.n


def test_mplga_bound():
    chatty = MpLga("", Step(Arity.BINARY, callback=lambda s, r: (s, "1" * 100)), 1)
    with pytest.raises(MessageBoundExceeded) as err:
        run_mplga(chatty, path_graph(2))
    assert err.value.iteration == 2


def test_full_lowering():
    lowered = lower_mplga_to_smpga(lower_mpcga_to_mplga(DEGREE))
    assert lowered.width_factor == 36
    for g in (path_graph(1), path_graph(2, "1")):
        trace = run_smpga(lowered, g)
        assert trace.outputs == run_mpcga_all(DEGREE, g)
        assert len(set(trace.finished_at)) == 1


@pytest.mark.parametrize("n", range(1, 7))
def test_extraction_rounds_equal_messages(n):
    g = path_graph(n)
    messages = ["101"] * n
    width = 2 * (3 + 1 + n.bit_length())
    # one full outer loop, then n - 1 loops that only compare lengths
    assert extraction_rounds(g, messages) == n * n * width.bit_length() + 3 * n + n
    assert extraction_rounds(g, messages, 108 * n**4) == n * n * (108 * n**4).bit_length() + 4 * n


@pytest.mark.parametrize("n", range(2, 9))
def test_extraction_rounds_are_cubic(n):
    g = path_graph(n)
    messages = ["101"] * n
    assert extraction_rounds(g, messages) <= 3 * n**3
    distinct = [format(v, "03b") for v in range(n)]
    width = 2 * (3 + 1 + n.bit_length())
    assert extraction_rounds(g, distinct) <= n * (n * (width.bit_length() + 3) + 1)


def test_recorded_message_lengths():
    lowered = lower_mpcga_to_mplga(DEGREE)
    received = []

    def recording(state, multiset):
        received.append(len(multiset))
        return lowered.step(state, multiset)

    g = path_graph(2, "1")
    recorder = MpLga(lowered.initial_state, Step(Arity.BINARY, callback=recording))
    assert run_mplga(recorder, g) == run_mpcga_all(DEGREE, g)
    assert len(received) == g.n * (2 * g.n + 1)
    assert 0 < max(received) <= 16 * 3 * g.k * g.n**4

    smpga = lower_mplga_to_smpga(lowered)
    trace = run_smpga(smpga, g)
    width = smpga.width(g.k, g.n)
    longest = max(len(m.lstrip("0")) for row in trace.messages for m in row)
    # a count bit sits right above the W/2-bit value slot
    assert longest == width // 2 + 1
    assert longest > 3 * g.k * g.n**4
