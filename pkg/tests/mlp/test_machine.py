from fractions import Fraction

import numpy as np
import pytest

from rgnn_compiler.encodings import encode_rq
from rgnn_compiler.errors import MaxStepsExceeded, StepCapExceeded
from rgnn_compiler.library import feature_echo_program, identity_program, level_parity_program
from rgnn_compiler.machines import (
    OPS,
    TOPS,
    ProgramBuilder,
    StackProgram,
    load_stacks,
    run_stack_program,
)
from rgnn_compiler.mlp.machine import FINISHED, compile_stack_machine, switched_machine
from rgnn_compiler.mlp.switched import check_switched_contract


@pytest.mark.parametrize("tape", ["", "0", "10", "1110101", "110111"])
def test_compiled_level_parity(tape):
    program = level_parity_program()
    assert compile_stack_machine(program).run(tape) == program.run(tape)


def test_compiled_feature_echo():
    program = feature_echo_program()
    machine = compile_stack_machine(program)
    stack1, stack2 = load_stacks(program.arity, ["11" + "0" + "0" + "01", "0101", "", "0"])
    assert machine.run(stack1, stack2) == program.run(stack1, stack2)


def test_configuration_layout():
    program = identity_program()
    machine = compile_stack_machine(program)
    assert machine.d == 3 + program.num_states - 1
    x = machine.encode("10", "1")
    assert x[0] == encode_rq("10")
    assert machine.decode(x) == ("10", "1", program.start)
    y = machine.network.step(x)
    assert y[FINISHED] == 1
    assert machine.decode(y) == ("10", "1", program.halt)
    zero = (0,) * machine.d
    assert machine.network.step(zero) == zero


def test_compiled_machine_cap():
    loop = ProgramBuilder().rule("start", "*", "*", "start", "push1").build()
    with pytest.raises(MaxStepsExceeded):
        compile_stack_machine(loop).run("", max_steps=5)


def test_switched_machine_contract():
    def sampler(rng):
        bits = "".join(str(int(b)) for b in rng.integers(0, 2, size=int(rng.integers(0, 6))))
        return (encode_rq(bits), Fraction(0))

    network = switched_machine(compile_stack_machine(level_parity_program()), sampler)
    longest = check_switched_contract(network, np.random.default_rng(3), samples=4)
    assert longest >= 2
    run = network.run([encode_rq("1110"), 0])
    assert run.outputs == (encode_rq("1"), 0)


def _random_program(rng, num_states):
    halt = num_states - 1
    transitions = {
        (state, top1, top2): (
            int(rng.integers(0, num_states)),
            OPS[int(rng.integers(0, len(OPS)))],
            OPS[int(rng.integers(0, len(OPS)))],
        )
        for state in range(halt)
        for top1 in TOPS
        for top2 in TOPS
    }
    return StackProgram(num_states, 0, halt, transitions)


def _random_stack(rng):
    return "".join(str(b) for b in rng.integers(0, 2, size=int(rng.integers(0, 13))))


def test_compiled_matches_interpreter_on_random_programs():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(1000):
        program = _random_program(rng, int(rng.integers(2, 9)))
        machine = compile_stack_machine(program)
        for _ in range(4):
            stack1, stack2 = _random_stack(rng), _random_stack(rng)
            try:
                expected = run_stack_program(program, stack1, stack2, 100)
            except StepCapExceeded:
                continue
            assert machine.run(stack1, stack2, max_steps=100) == expected
            checked += 1
        if checked >= 200:
            break
    assert checked >= 200
