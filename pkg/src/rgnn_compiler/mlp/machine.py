"""
Compilation of two-stack machines to recurrent ReLU networks.

Stacks are held as rational quaternary encodings, the control state as a
one-hot vector. One application of the network performs one machine step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

from rgnn_compiler.encodings import decode_rq, encode_rq
from rgnn_compiler.errors import MaxStepsExceeded
from rgnn_compiler.machines import OPS
from rgnn_compiler.mlp.network import Layer, Mlp, RecurrentMlp
from rgnn_compiler.mlp.switched import wrap_as_switched

if TYPE_CHECKING:
    from collections.abc import Callable

    import numpy as np

    from rgnn_compiler.machines import StackProgram
    from rgnn_compiler.mlp.network import Number
    from rgnn_compiler.mlp.switched import SwitchedNetwork

logger = logging.getLogger(__name__)

STACK1, STACK2, FINISHED = 0, 1, 2


@dataclass(frozen=True)
class CompiledMachine:
    """
    A stack program as a recurrent MLP.

    The layout is `[stack1, stack2, finished, one-hot non-halt states]`;
    `finished` is the one-hot entry of the halt state.

    Attributes
    ----------
    program
        The source program.
    network
        The recurrent MLP.
    state_dims
        Position of each control state.
    """

    program: StackProgram
    network: RecurrentMlp
    state_dims: dict[int, int]

    @property
    def d(self) -> int:
        """Dimension of a configuration."""
        return self.network.d

    def encode(self, stack1: str, stack2: str = "", state: int | None = None) -> tuple[Number, ...]:
        """Configuration vector of a machine configuration."""
        x: list[Number] = [0] * self.d
        x[STACK1], x[STACK2] = encode_rq(stack1), encode_rq(stack2)
        x[self.state_dims[self.program.start if state is None else state]] = 1
        return tuple(x)

    def decode(self, x: tuple[Number, ...]) -> tuple[str, str, int | None]:
        """Stacks and control state of a configuration vector."""
        active = [s for s, i in self.state_dims.items() if x[i] == 1]
        return decode_rq(x[STACK1]), decode_rq(x[STACK2]), active[0] if len(active) == 1 else None

    def run(self, stack1: str, stack2: str = "", max_steps: int = 10**6) -> tuple[str, str, int]:
        """
        Run the network until the finished dimension is 1.

        Parameters
        ----------
        stack1
            Initial stack 1, top first.
        stack2
            Initial stack 2, top first.
        max_steps
            Step cap.

        Returns
        -------
        tuple[str, str, int]
            Final stacks and the number of recurrences.
        """
        x = self.encode(stack1, stack2)
        for t in range(1, max_steps + 1):
            x = self.network.step(x)
            if x[FINISHED] == 1:
                out1, out2, _ = self.decode(x)
                return out1, out2, t
        raise MaxStepsExceeded(f"Compiled machine did not halt within {max_steps} steps")


def compile_stack_machine(program: StackProgram) -> CompiledMachine:
    """
    Compile a stack program into a recurrent MLP of depth 6.

    Per step, the first two layers read the tops, the third forms one gate
    per transition together with the candidate stack values after every
    operation, the fourth sums gates per operation and per target state, and
    the last two select the stack values by gating.

    Parameters
    ----------
    program
        The program.

    Returns
    -------
    CompiledMachine
        The compiled machine; the zero vector is a fixed point.
    """
    halt = program.halt
    others = [s for s in range(program.num_states) if s != halt]
    state_dims = {halt: FINISHED} | {s: 3 + i for i, s in enumerate(others)}
    d = 3 + len(others)
    stacks = (STACK1, STACK2)

    # layer 1: 4q - 2, 4q - 3, 4q, 4q - 1 per stack, then the states
    rows, bias = [], []
    for j in stacks:
        for c in (-2, -3, 0, -1):
            rows.append(((j, 4),))
            bias.append(c)
    probe = len(rows)
    rows += [((j, 1),) for j in stacks] + [((i, 1),) for i in range(2, d)]
    bias += [0] * d
    layer1 = Layer(d, tuple(rows), tuple(bias))

    # layer 2: top and nonempty per stack, stacks and states copied
    rows = []
    for j in stacks:
        a = 4 * j
        rows += [((a, 1), (a + 1, -1)), ((a + 2, 1), (a + 3, -1))]
    rows += [((probe + i, 1),) for i in range(d)]
    layer2 = Layer(len(layer1.rows), tuple(rows), (0,) * len(rows))
    top = {j: 2 * j for j in stacks}
    nonempty = {j: 2 * j + 1 for j in stacks}
    copy = {i: 4 + i for i in range(d)}

    # layer 3: one gate per transition, candidate stack values per operation
    keys = sorted(program.transitions)
    rows, bias = [], []
    for state, t1, t2 in keys:
        row: dict[int, Fraction] = {copy[state_dims[state]]: Fraction(1)}
        const = Fraction(-2)
        for j, t in zip(stacks, (t1, t2)):
            if t == "1":
                row[top[j]] = row.get(top[j], 0) + 1
            elif t == "0":
                row[nonempty[j]] = row.get(nonempty[j], 0) + 1
                row[top[j]] = row.get(top[j], 0) - 1
            else:
                row[nonempty[j]] = row.get(nonempty[j], 0) - 1
                const += 1
        rows.append(tuple((k, v) for k, v in sorted(row.items()) if v))
        bias.append(const)
    value = {}
    for j in stacks:
        q = copy[j]
        for op in OPS:
            value[j, op] = len(rows)
            if op == "pop":
                rows.append(((q, 4), (top[j], -2)))
                bias.append(-1)
            elif op == "nop":
                rows.append(((q, 1),))
                bias.append(0)
            else:
                rows.append(((q, Fraction(1, 4)),))
                bias.append(Fraction(1, 4) if op == "push0" else Fraction(3, 4))
    halt_col = len(rows)
    rows.append(((copy[FINISHED], 1),))
    bias.append(0)
    layer3 = Layer(len(layer2.rows), tuple(rows), tuple(bias))

    # layer 4: gate sums per operation and stack, next state one-hot
    gate_sum: dict[tuple[int, str], list[int]] = {(j, op): [] for j in stacks for op in OPS}
    incoming: dict[int, list[int]] = {s: [] for s in range(program.num_states)}
    for g, key in enumerate(keys):
        target, op1, op2 = program.transitions[key]
        gate_sum[STACK1, op1].append(g)
        gate_sum[STACK2, op2].append(g)
        incoming[target].append(g)
    for j in stacks:
        gate_sum[j, "nop"].append(halt_col)
    incoming[halt].append(halt_col)
    rows = []
    layout4 = {}
    for (j, op), gates in gate_sum.items():
        layout4["gate", j, op] = len(rows)
        rows.append(tuple((g, 1) for g in gates))
        layout4["value", j, op] = len(rows)
        rows.append(((value[j, op], 1),))
    state_rows = {}
    for s in range(program.num_states):
        state_rows[s] = len(rows)
        rows.append(tuple((g, 1) for g in incoming[s]))
    layer4 = Layer(len(layer3.rows), tuple(rows), (0,) * len(rows))

    # layer 5: gated candidate values
    rows, bias = [], []
    gated = {}
    for j in stacks:
        for op in OPS:
            gated[j, op] = len(rows)
            rows.append(((layout4["value", j, op], 1), (layout4["gate", j, op], 1)))
            bias.append(-1)
    for s in range(program.num_states):
        state_rows[s], old = len(rows), state_rows[s]
        rows.append(((old, 1),))
        bias.append(0)
    layer5 = Layer(len(layer4.rows), tuple(rows), tuple(bias))

    # layer 6: back to the configuration layout
    rows = [() for _ in range(d)]
    for j in stacks:
        rows[j] = tuple((gated[j, op], 1) for op in OPS)
    for s, i in state_dims.items():
        rows[i] = ((state_rows[s], 1),)
    layer6 = Layer(len(layer5.rows), tuple(rows), (0,) * d)

    network = RecurrentMlp(Mlp((layer1, layer2, layer3, layer4, layer5, layer6)))
    logger.debug(
        "Compiled a %d-state program with %d transitions into %d dims",
        program.num_states,
        len(keys),
        d,
    )
    return CompiledMachine(program, network, state_dims)


def switched_machine(
    machine: CompiledMachine,
    sampler: Callable[[np.random.Generator], tuple[Fraction, ...]] | None = None,
) -> SwitchedNetwork:
    """
    The compiled machine as a switched network from stack pair to stack pair.

    Parameters
    ----------
    machine
        The compiled machine.
    sampler
        Draws encoded stack pairs the program halts on.

    Returns
    -------
    SwitchedNetwork
        Inputs and outputs are the two stacks as rational quaternary values.
    """
    start = [0] * machine.d
    start[machine.state_dims[machine.program.start]] = 1

    def target(inputs: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
        out1, out2, _ = machine.program.run(decode_rq(inputs[0]), decode_rq(inputs[1]))
        return encode_rq(out1), encode_rq(out2)

    return wrap_as_switched(
        "machine",
        machine.network,
        load=(STACK1, STACK2),
        unload=(STACK1, STACK2),
        finished=FINISHED,
        core_initial=start,
        target=target,
        sampler=sampler,
    )
