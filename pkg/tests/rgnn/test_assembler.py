from fractions import Fraction

import pytest

from rgnn_compiler.errors import MissingProgram
from rgnn_compiler.library import FEATURE_ECHO, GRAPH_SIZE, SMPGA_DEGREE
from rgnn_compiler.rgnn.assembler import (
    HEAD,
    TAIL,
    assemble_rgnn,
    machine_port,
)


def test_default_modes():
    assert set(assemble_rgnn(FEATURE_ECHO).networks) == {"full", "hybrid"}
    assert set(assemble_rgnn(SMPGA_DEGREE).networks) == {"hybrid"}
    assert set(assemble_rgnn(FEATURE_ECHO, ("hybrid",)).networks) == {"hybrid"}


def test_full_needs_a_program():
    with pytest.raises(MissingProgram, match="no stack program"):
        assemble_rgnn(SMPGA_DEGREE, ("full",))
    rgnn = assemble_rgnn(SMPGA_DEGREE)
    assert rgnn.network().mode == "hybrid"
    with pytest.raises(MissingProgram, match="full mode"):
        rgnn.network("full")


def test_layout():
    rgnn = assemble_rgnn(FEATURE_ECHO)
    network = rgnn.network()
    assert network.mode == "full"
    assert network.names[: len(HEAD)] == HEAD
    assert network.names[-len(TAIL) :] == TAIL
    assert network.network.d_in == 2 * network.d
    assert network.network.d_out == network.d
    assert not network.global_readout
    assert list(network.blocks) == [
        "width",
        "feature",
        "prefix",
        "init",
        "receive",
        "machine",
        "reader",
        "send",
        "sync",
    ]
    stop = len(HEAD)
    for start, end in network.blocks.values():
        assert start == stop
        assert end > start
        stop = end
    assert stop == network.d - len(TAIL)
    start, _ = network.blocks["machine"]
    assert network.names[start : start + 2] == ("machine.switch", "machine.turned_off")


def test_initial_state():
    network = assemble_rgnn(FEATURE_ECHO).network("hybrid")
    x = network.initial_state(3, 2, Fraction(5, 8))
    assert len(x) == network.d
    assert x[:3] == (3, 2, Fraction(5, 8))
    assert x[network.index("boot")] == 1
    assert x[network.index("ready")] == 0
    assert x[network.index("msg")] == 0
    assert x[network.index("finished")] == 0


def test_width():
    network = assemble_rgnn(FEATURE_ECHO).network("hybrid")
    assert network.width_factor == 1
    assert network.width(2, 2) == 96
    assert network.width(0, 1) == 3


def test_hybrid_shares_layout_outside_the_machine():
    rgnn = assemble_rgnn(FEATURE_ECHO)
    full, hybrid = rgnn.network("full"), rgnn.network("hybrid")
    assert [k for k in full.names if not k.startswith("machine.")] == [
        k for k in hybrid.names if not k.startswith("machine.")
    ]
    assert "machine.countdown" in hybrid.names
    assert "machine.countdown" not in full.names


def test_global_readout_layout():
    network = assemble_rgnn(GRAPH_SIZE).network()
    assert network.global_readout
    assert network.network.d_in == 3 * network.d
    assert "receive_all" in network.blocks
    assert "concat" in network.blocks


def test_machine_port():
    port = machine_port()
    assert port.dim_names[:7] == (
        "switch",
        "turned_off",
        "in0",
        "in1",
        "out0",
        "out1",
        "prev",
    )
    state = list(port.initial)
    state[port.dim_names.index("pend0")] = Fraction(1, 4)
    state[port.dim_names.index("pend1")] = Fraction(3, 16)
    state[port.dim_names.index("countdown")] = 3
    run = port.run([0, 0], state)
    assert run.outputs == (Fraction(1, 4), Fraction(3, 16))
    assert run.steps == 3
    assert run.state[port.dim_names.index("countdown")] == 0

    state[port.dim_names.index("countdown")] = 1
    assert port.run([0, 0], state).steps == 1
