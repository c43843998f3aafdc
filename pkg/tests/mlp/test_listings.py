from fractions import Fraction

import numpy as np
import pytest

from rgnn_compiler.encodings import encode_rb, encode_rq
from rgnn_compiler.mlp.listings import (
    binary_to_quaternary_network,
    concat_network,
    initial_message_network,
    message_width_network,
    quaternary_to_binary_network,
    result_reader_network,
    synchronizer,
    synchronizer_reference,
    unary_prefix_network,
)
from rgnn_compiler.mlp.switched import check_switched_contract

LISTINGS = [
    message_width_network,
    binary_to_quaternary_network,
    quaternary_to_binary_network,
    result_reader_network,
    unary_prefix_network,
    initial_message_network,
    concat_network,
]


@pytest.mark.parametrize("factory", LISTINGS)
def test_contract(factory):
    network = factory()
    assert check_switched_contract(network, np.random.default_rng(7)) > 0


@pytest.mark.parametrize("factory", [quaternary_to_binary_network, concat_network])
def test_interpreter_honors_contract(factory):
    check_switched_contract(factory(), np.random.default_rng(1), samples=3, interpret=True)


def test_message_width():
    run = message_width_network().run([Fraction(2), Fraction(2)])
    assert run.outputs == (96,)
    assert message_width_network(1).run([1, 3]).outputs == (81,)
    assert message_width_network().run([0, 3]).outputs == (0,)


def test_conversions():
    assert binary_to_quaternary_network().run([3, encode_rb("101")]).outputs == (encode_rq("101"),)
    assert binary_to_quaternary_network().run([2, 0]).outputs == (encode_rq("00"),)
    assert quaternary_to_binary_network().run([encode_rq("0110")]).outputs == (encode_rb("0110"),)


def test_result_reader():
    q = encode_rq("1" + "11100" + "0101")
    assert result_reader_network().run([q]).outputs == (1, encode_rb("101"))


def test_prefix_and_concat():
    assert unary_prefix_network().run([3, encode_rq("01")]).outputs == (encode_rq("111001"),)
    assert unary_prefix_network().run([0, 0]).outputs == (encode_rq("0"),)
    out = concat_network().run([encode_rq("10"), encode_rq("011"), 2]).outputs
    assert out == (encode_rq("10011"),)


def test_initial_message():
    run = initial_message_network().run([5, 2, encode_rb("1")])
    assert run.outputs == (Fraction(1, 64) + Fraction(1, 16),)


@pytest.mark.parametrize("N", [0, 1, 2, 3, 5])
def test_synchronizer(N):
    rng = np.random.default_rng(N)
    externals = [tuple(int(b) for b in rng.integers(0, 2, size=2)) for _ in range(6 * N + 4)]
    expected = synchronizer_reference(N, externals)
    code = synchronizer()
    network = code.compile()
    x = y = code.initial_vector()
    for (neighbors, busy), (start, flag) in zip(externals, expected):
        z = (N, neighbors, busy)
        x = code.step(x, z)
        y = network.step(y, z)
        assert x == y
        assert (x[0], x[1]) == (start, flag)


def test_synchronizer_reference():
    quiet = [(0, 0)] * 8
    assert [s for s, _ in synchronizer_reference(2, quiet)] == [0, 0, 0, 1, 0, 0, 0, 1]
    busy = [(0, 0), (0, 0), (0, 1), (0, 0)]
    assert synchronizer_reference(2, busy) == [(0, 0), (0, 0), (0, 1), (0, 0)]
