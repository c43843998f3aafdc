from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from rgnn_compiler.errors import ContractViolation, DimensionMismatch, MaxStepsExceeded
from rgnn_compiler.mlp.code import V
from rgnn_compiler.mlp.network import Layer, Mlp, RecurrentMlp
from rgnn_compiler.mlp.switched import (
    SWITCH,
    TURNED_OFF,
    SwitchedCode,
    check_switched_contract,
    wrap_as_switched,
)


def _halver():
    """One-recurrence network: out = in / 2."""
    c = SwitchedCode("halver", ["a"], ["b"])
    c.begin()
    c.set_if("b", "start", V("a") / 2)
    c.finish("start")
    return c.build(
        lambda inputs: (inputs[0] / 2,),
        lambda rng: (Fraction(int(rng.integers(0, 5)), 4),),
    )


def test_switched_code_layout():
    network = _halver()
    assert network.dim_names == ("switch", "turned_off", "a", "b", "prev")
    assert network.inputs == slice(2, 3)
    assert network.outputs == slice(3, 4)
    assert network.start_state([Fraction(1, 2)]) == (1, 0, Fraction(1, 2), 0, 0)
    with pytest.raises(DimensionMismatch):
        network.start_state([])


def test_switched_run():
    network = _halver()
    run = network.run([Fraction(1, 2)])
    assert run.outputs == (Fraction(1, 4),)
    assert run.steps == 1
    assert run.state[SWITCH] == 0
    assert run.state[TURNED_OFF] == 1
    assert network.run([1], interpret=True).outputs == (Fraction(1, 2),)
    assert check_switched_contract(network, np.random.default_rng(0)) == 1


def test_contract_violation():
    network = _halver()
    liar = type(network)(
        network.name,
        network.network,
        network.d_in,
        network.d_out,
        network.initial,
        lambda inputs: (inputs[0],),
        network.sampler,
    )
    with pytest.raises(ContractViolation, match="expected"):
        check_switched_contract(liar)
    with pytest.raises(ValueError, match="no target"):
        check_switched_contract(type(network)("bare", network.network, 1, 1, network.initial))


def test_never_finishing():
    c = SwitchedCode("stuck", ["a"], ["b"])
    c.begin()
    c.var("never")
    c.relu("never", V("switch") - 1)
    c.finish("never")
    with pytest.raises(MaxStepsExceeded):
        c.build().run([0], max_steps=20)


def _delay_core() -> RecurrentMlp:
    """Core [value, s1, s2, s3]: a token moves one slot per recurrence, finished at s3."""
    layer = Layer(4, (((0, 1),), (), ((1, 1),), ((2, 1),)), (0, 0, 0, 0))
    return RecurrentMlp(Mlp((layer,)))


def test_wrap_as_switched():
    network = wrap_as_switched(
        "delay",
        _delay_core(),
        load=(0,),
        unload=(0,),
        finished=3,
        core_initial=(0, 1, 0, 0),
        target=lambda inputs: inputs,
        sampler=lambda rng: (Fraction(int(rng.integers(0, 4)), 3),),
    )
    assert network.d == 2 * 1 + 3 + 4
    assert network.dim_names[5:] == ("core0", "core1", "core2", "core3")
    run = network.run([Fraction(2, 3)])
    assert run.outputs == (Fraction(2, 3),)
    assert run.steps == 2
    assert check_switched_contract(network, np.random.default_rng(5), samples=3) == 2


def test_wrap_errors():
    with pytest.raises(DimensionMismatch, match="external"):
        wrap_as_switched("x", RecurrentMlp(_delay_core().core, 1), (0,), (0,), 3, (0, 1, 0, 0))
    with pytest.raises(DimensionMismatch):
        wrap_as_switched("x", _delay_core(), (0,), (), 3, (0, 1, 0, 0))


def test_contract_samples_a_hundred_inputs_by_default():
    network = _halver()
    drawn = []

    def sampler(rng):
        inputs = network.sampler(rng)
        drawn.append(inputs)
        return inputs

    check_switched_contract(replace(network, sampler=sampler), np.random.default_rng(5))
    assert len(drawn) == 100
