import pytest

from rgnn_compiler.errors import IllFormedProgram, MalformedEncoding, StepCapExceeded
from rgnn_compiler.library import feature_echo_program, identity_program, level_parity_program
from rgnn_compiler.machines import (
    Arity,
    ProgramBuilder,
    StackProgram,
    load_stacks,
    pair_decode,
    pair_encode,
    run_stack_program,
    split_tape,
    unload_stacks,
)


def test_identity_program():
    assert identity_program().run("101") == ("101", "", 1)
    assert identity_program().apply(["0110"]) == ("0110",)


def test_level_parity_program():
    program = level_parity_program()
    assert program.apply(["1110101"]) == ("1",)
    assert program.apply(["110"]) == ("0",)
    assert program.arity == Arity.UNARY


def test_feature_echo_program():
    x1 = "11" + "0" + "0" + "01"
    assert feature_echo_program().apply([x1, "0101", "", "0"]) == ("", "", "01", "1")


def test_pair_encoding():
    assert pair_encode("") == "0"
    assert pair_encode("10") == "11100"
    assert pair_decode("11100" + "1") == ("10", 5)
    with pytest.raises(MalformedEncoding):
        pair_decode("111")


def test_stack_layouts():
    assert load_stacks(Arity.UNARY, ["01"]) == ("01", "")
    stack1, stack2 = load_stacks(Arity.QUATERNARY, ["01", "11", "1", "0"])
    assert (stack1, stack2) == ("0" + "110" + "01", "11")
    assert split_tape(stack1) == ("01", "1", "0")
    assert unload_stacks(Arity.QUATERNARY, stack1, stack2) == ("01", "1", "0", "11")
    assert unload_stacks(Arity.BINARY, *load_stacks(Arity.BINARY, ["1", ""])) == ("1", "")
    with pytest.raises(IllFormedProgram):
        load_stacks(Arity.BINARY, ["1"])
    with pytest.raises(IllFormedProgram, match="one bit"):
        load_stacks(Arity.QUATERNARY, ["", "", "", "11"])
    with pytest.raises(MalformedEncoding):
        split_tape("")


def test_builder_wildcards():
    builder = ProgramBuilder()
    builder.rule("start", "1", "e", "halt", "push0")
    builder.rule("start", "*", "*", "halt", "pop")
    program = builder.build(Arity.UNARY)
    assert len(program.transitions) == 9
    assert program.run("1") == ("01", "", 1)
    assert program.run("0") == ("", "", 1)


def test_program_validation():
    with pytest.raises(IllFormedProgram, match="differ"):
        StackProgram(2, 0, 0, {})
    with pytest.raises(IllFormedProgram, match="halt state"):
        StackProgram(2, 0, 1, {(1, "e", "e"): (0, "nop", "nop")})
    with pytest.raises(IllFormedProgram, match="operation"):
        StackProgram(2, 0, 1, {(0, "e", "e"): (1, "push2", "nop")})
    with pytest.raises(IllFormedProgram, match="leaves"):
        StackProgram(2, 0, 1, {(0, "e", "e"): (2, "nop", "nop")})


def test_run_errors():
    partial = StackProgram(2, 0, 1, {(0, "e", "e"): (1, "nop", "nop")})
    with pytest.raises(IllFormedProgram, match="No transition"):
        run_stack_program(partial, "1")
    loop = ProgramBuilder().rule("start", "*", "*", "start").build()
    with pytest.raises(StepCapExceeded):
        run_stack_program(loop, "", max_steps=10)


def test_pop_on_empty_stack_is_a_no_op():
    program = ProgramBuilder().rule("start", "*", "*", "halt", "pop", "pop").build()
    assert run_stack_program(program, "", "") == ("", "", 1)
