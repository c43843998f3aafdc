"""
Deterministic two-stack machines over {0, 1}.

A stack is a bitstring whose first character is the top. The machine reads
the pair of tops (each "0", "1" or "e" for empty), then applies one
operation to each stack and moves to a new state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import TYPE_CHECKING

from rgnn_compiler.encodings import tuple_decode, tuple_encode
from rgnn_compiler.errors import IllFormedProgram, MalformedEncoding, StepCapExceeded

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

logger = logging.getLogger(__name__)

TOPS = ("0", "1", "e")
OPS = ("push0", "push1", "pop", "nop")

Key = tuple[int, str, str]
Action = tuple[int, str, str]


class Arity(IntEnum):
    """
    Input/output conventions of a step function run as a stack program.

    UNARY reads its input on stack 1 and returns stack 1. BINARY reads
    theta(x1, x2) on stack 1 and returns the decoded pair from stack 1.
    QUATERNARY reads `x4 pair(x3) x1` on stack 1 and x2 on stack 2, and
    returns the same layout.
    """

    UNARY = 1
    BINARY = 2
    QUATERNARY = 4


@dataclass(frozen=True)
class StackProgram:
    """
    A two-stack machine program.

    Attributes
    ----------
    num_states
        States are 0..num_states-1.
    start
        The start state.
    halt
        The halting state; it has no outgoing transitions.
    transitions
        Map from (state, top1, top2) to (state', op1, op2).
    arity
        The input/output convention.
    """

    num_states: int
    start: int
    halt: int
    transitions: Mapping[Key, Action] = field(hash=False)
    arity: Arity = Arity.BINARY

    def __post_init__(self) -> None:
        states = range(self.num_states)
        if self.start not in states or self.halt not in states:
            raise IllFormedProgram("Start and halt states must exist")
        if self.start == self.halt:
            raise IllFormedProgram("Start and halt states must differ")
        for (state, top1, top2), (target, op1, op2) in self.transitions.items():
            if state not in states or target not in states:
                raise IllFormedProgram(f"Transition from {state} to {target} leaves the machine")
            if state == self.halt:
                raise IllFormedProgram("The halt state has outgoing transitions")
            if top1 not in TOPS or top2 not in TOPS:
                raise IllFormedProgram(f"Unknown stack top in {(state, top1, top2)}")
            if op1 not in OPS or op2 not in OPS:
                raise IllFormedProgram(f"Unknown stack operation in {(op1, op2)}")
        object.__setattr__(self, "arity", Arity(self.arity))

    def run(
        self, stack1: str, stack2: str = "", max_steps: int = 10**6
    ) -> tuple[str, str, int]:
        """
        Run the machine until it halts.

        Parameters
        ----------
        stack1
            Initial content of stack 1, top first.
        stack2
            Initial content of stack 2, top first.
        max_steps
            Step cap.

        Returns
        -------
        tuple[str, str, int]
            Final stacks and the number of steps taken.
        """
        return run_stack_program(self, stack1, stack2, max_steps)

    def apply(self, inputs: Sequence[str], max_steps: int = 10**6) -> tuple[str, ...]:
        """
        Apply the program as a step function under its arity convention.

        Parameters
        ----------
        inputs
            The inputs (1, 2 or 4 bitstrings).
        max_steps
            Step cap.

        Returns
        -------
        tuple[str, ...]
            The outputs, as many as inputs.
        """
        stack1, stack2 = load_stacks(self.arity, inputs)
        out1, out2, _ = self.run(stack1, stack2, max_steps)
        return unload_stacks(self.arity, out1, out2)


def run_stack_program(
    program: StackProgram, stack1: str, stack2: str = "", max_steps: int = 10**6
) -> tuple[str, str, int]:
    """
    Interpret a stack program. Popping an empty stack leaves it empty.

    Parameters
    ----------
    program
        The program.
    stack1
        Initial content of stack 1, top first.
    stack2
        Initial content of stack 2, top first.
    max_steps
        Step cap.

    Returns
    -------
    tuple[str, str, int]
        Final stacks and the number of steps taken.
    """
    s1, s2 = list(stack1[::-1]), list(stack2[::-1])
    state, steps = program.start, 0
    while state != program.halt:
        if steps >= max_steps:
            raise StepCapExceeded(f"Stack program did not halt within {max_steps} steps")
        key = (state, s1[-1] if s1 else "e", s2[-1] if s2 else "e")
        if key not in program.transitions:
            raise IllFormedProgram(f"No transition for {key}")
        state, op1, op2 = program.transitions[key]
        _apply_op(s1, op1)
        _apply_op(s2, op2)
        steps += 1
    return "".join(reversed(s1)), "".join(reversed(s2)), steps


def _apply_op(stack: list[str], op: str) -> None:
    if op == "pop":
        if stack:
            stack.pop()
    elif op != "nop":
        stack.append(op[-1])


def pair_encode(x: str) -> str:
    """Self-delimiting bit-pair encoding: 1b for each bit, then 0."""
    return "".join("1" + b for b in x) + "0"


def pair_decode(s: str, pos: int = 0) -> tuple[str, int]:
    """
    Read a bit-pair encoding.

    Parameters
    ----------
    s
        The bitstring.
    pos
        Where to start.

    Returns
    -------
    tuple[str, int]
        The payload and the position after the terminator.
    """
    bits = []
    while True:
        if pos >= len(s) or (s[pos] == "1" and pos + 1 >= len(s)):
            raise MalformedEncoding("Truncated bit-pair encoding")
        if s[pos] == "0":
            return "".join(bits), pos + 1
        bits.append(s[pos + 1])
        pos += 2


def load_stacks(arity: Arity, inputs: Sequence[str]) -> tuple[str, str]:
    """
    Lay out step-function inputs on the two stacks.

    Parameters
    ----------
    arity
        The convention.
    inputs
        The inputs.

    Returns
    -------
    tuple[str, str]
        Stack 1 and stack 2.
    """
    if len(inputs) != int(arity):
        raise IllFormedProgram(f"Expected {int(arity)} inputs, got {len(inputs)}")
    if arity == Arity.UNARY:
        return inputs[0], ""
    if arity == Arity.BINARY:
        return tuple_encode(inputs), ""
    x1, x2, x3, x4 = inputs
    if x4 not in ("0", "1"):
        raise IllFormedProgram(f"Finished flag must be one bit, got {x4!r}")
    return x4 + pair_encode(x3) + x1, x2


def unload_stacks(arity: Arity, stack1: str, stack2: str) -> tuple[str, ...]:
    """
    Read step-function outputs off the two stacks.

    Parameters
    ----------
    arity
        The convention.
    stack1
        Final stack 1.
    stack2
        Final stack 2.

    Returns
    -------
    tuple[str, ...]
        The outputs.
    """
    if arity == Arity.UNARY:
        return (stack1,)
    if arity == Arity.BINARY:
        return tuple_decode(stack1, 2)
    return split_tape(stack1) + (stack2,)


def split_tape(stack1: str) -> tuple[str, str, str]:
    """
    Split a quaternary stack-1 layout into (x1, x3, x4).

    Parameters
    ----------
    stack1
        The content `x4 pair(x3) x1`.

    Returns
    -------
    tuple[str, str, str]
        x1, x3 and x4.
    """
    if not stack1:
        raise MalformedEncoding("Missing finished flag on stack 1")
    x3, pos = pair_decode(stack1, 1)
    return stack1[pos:], x3, stack1[0]


class ProgramBuilder:
    """
    Incremental construction of stack programs with named states.

    Tops may be given as "*" to stand for every top not yet covered.
    """

    def __init__(self, start: str = "start", halt: str = "halt") -> None:
        """
        Create an empty builder.

        Parameters
        ----------
        start
            Name of the start state.
        halt
            Name of the halt state.

        Returns
        -------
        None
        """
        self._ids: dict[str, int] = {}
        self._rules: dict[Key, Action] = {}
        self.start = self.state(start)
        self.halt = self.state(halt)

    def state(self, name: str) -> int:
        """Id of a named state, allocated on first use."""
        return self._ids.setdefault(name, len(self._ids))

    def rule(
        self,
        state: str,
        top1: str,
        top2: str,
        target: str,
        op1: str = "nop",
        op2: str = "nop",
    ) -> ProgramBuilder:
        """
        Add transitions; wildcards never override explicit rules.

        Parameters
        ----------
        state
            Source state name.
        top1
            Top of stack 1, or "*".
        top2
            Top of stack 2, or "*".
        target
            Target state name.
        op1
            Operation on stack 1.
        op2
            Operation on stack 2.

        Returns
        -------
        ProgramBuilder
            The builder, for chaining.
        """
        source, dest = self.state(state), self.state(target)
        for t1 in TOPS if top1 == "*" else (top1,):
            for t2 in TOPS if top2 == "*" else (top2,):
                key = (source, t1, t2)
                explicit = top1 != "*" and top2 != "*"
                if explicit or key not in self._rules:
                    self._rules[key] = (dest, op1, op2)
        return self

    def build(self, arity: Arity = Arity.BINARY) -> StackProgram:
        """
        Freeze the program.

        Parameters
        ----------
        arity
            The input/output convention.

        Returns
        -------
        StackProgram
            The program.
        """
        return StackProgram(len(self._ids), self.start, self.halt, dict(self._rules), arity)
