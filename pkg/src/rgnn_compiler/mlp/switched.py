"""
Switched networks: recurrent MLPs that compute a function on demand.

Dimension 0 is the switch and dimension 1 the turned-off pulse; the inputs
follow, then the outputs, then internal memory. Raising the switch starts a
computation. While it runs the switch stays 1; when it ends the switch
drops to 0, the pulse is 1 for exactly one recurrence and the outputs hold
the function value. With the switch at 0 the outputs are held.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np

from rgnn_compiler.errors import ContractViolation, DimensionMismatch, MaxStepsExceeded
from rgnn_compiler.mlp.code import MlpCode, V
from rgnn_compiler.mlp.network import Layer, Mlp, RecurrentMlp, identity_layer, parallel

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from rgnn_compiler.mlp.network import Number

logger = logging.getLogger(__name__)

SWITCH, TURNED_OFF = 0, 1


@dataclass(frozen=True)
class SwitchedRun:
    """
    One on-mode computation.

    Attributes
    ----------
    outputs
        The output dimensions at the pulse.
    steps
        Recurrences from the start state to the pulse.
    state
        The state at the pulse.
    """

    outputs: tuple[Number, ...]
    steps: int
    state: tuple[Number, ...]


@dataclass(frozen=True)
class SwitchedNetwork:
    """
    A recurrent MLP honoring the switching contract.

    Attributes
    ----------
    name
        Name used in logs and errors.
    network
        The compiled recurrent MLP.
    d_in
        Number of input dimensions.
    d_out
        Number of output dimensions.
    initial
        A valid off-mode state.
    target
        The computed function on input tuples.
    sampler
        Draws valid input tuples for contract checks.
    code
        The MLP Code program, when the network was compiled from one.
    """

    name: str
    network: RecurrentMlp
    d_in: int
    d_out: int
    initial: tuple[Number, ...]
    target: Callable[[tuple[Fraction, ...]], tuple[Fraction, ...]] | None = None
    sampler: Callable[[np.random.Generator], tuple[Fraction, ...]] | None = None
    code: MlpCode | None = None
    names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.initial) != self.network.d:
            raise DimensionMismatch(
                f"{self.name}: initial state has {len(self.initial)} values, network {self.network.d}"
            )
        if 2 + self.d_in + self.d_out > self.network.d:
            raise DimensionMismatch(f"{self.name}: layout does not fit in {self.network.d} dims")

    @property
    def d(self) -> int:
        """State dimension."""
        return self.network.d

    @property
    def dim_names(self) -> tuple[str, ...]:
        """Names of the dimensions, generic where none were given."""
        if self.names is not None:
            return self.names
        if self.code is not None:
            return self.code.names
        generic = (
            "switch",
            "turned_off",
            *(f"in{i}" for i in range(self.d_in)),
            *(f"out{i}" for i in range(self.d_out)),
        )
        return generic + tuple(f"m{i}" for i in range(self.d - len(generic)))

    @property
    def inputs(self) -> slice:
        """Positions of the input dimensions."""
        return slice(2, 2 + self.d_in)

    @property
    def outputs(self) -> slice:
        """Positions of the output dimensions."""
        return slice(2 + self.d_in, 2 + self.d_in + self.d_out)

    def start_state(
        self, inputs: Sequence[Number], state: Sequence[Number] | None = None
    ) -> tuple[Number, ...]:
        """A valid off-mode state with the switch raised and inputs loaded."""
        if len(inputs) != self.d_in:
            raise DimensionMismatch(f"{self.name}: expected {self.d_in} inputs, got {len(inputs)}")
        x = list(self.initial if state is None else state)
        x[SWITCH], x[TURNED_OFF] = 1, 0
        x[self.inputs] = inputs
        return tuple(x)

    def step(self, x: Sequence[Number], interpret: bool = False) -> tuple[Number, ...]:
        """One recurrence, compiled or interpreted."""
        if interpret:
            if self.code is None:
                raise ValueError(f"{self.name} has no MLP Code to interpret")
            return self.code.step(x)
        return self.network.step(x)

    def run(
        self,
        inputs: Sequence[Number],
        state: Sequence[Number] | None = None,
        max_steps: int = 10**6,
        interpret: bool = False,
    ) -> SwitchedRun:
        """
        Start a computation and run it to the pulse.

        Parameters
        ----------
        inputs
            The input values.
        state
            The off-mode state to start from, by default `initial`.
        max_steps
            Recurrence cap.
        interpret
            Run the MLP Code interpreter instead of the network.

        Returns
        -------
        SwitchedRun
            Outputs, recurrence count and the final state.
        """
        x = self.start_state(inputs, state)
        for t in range(1, max_steps + 1):
            x = self.step(x, interpret)
            if x[TURNED_OFF] == 1:
                return SwitchedRun(tuple(x[self.outputs]), t, x)
        raise MaxStepsExceeded(f"{self.name} did not turn off within {max_steps} recurrences")


class SwitchedCode(MlpCode):
    """
    MLP Code with the switched layout declared up front.

    The constructor declares `switch`, `turned_off`, the inputs, the outputs
    and `prev` (the switch one recurrence earlier). `begin` defines the
    temporary `start`, which is 1 on the first recurrence of a computation,
    and `finish` closes a recurrence.

    Parameters
    ----------
    name
        Program name.
    inputs
        Input variable names.
    outputs
        Output variable names.

    Returns
    -------
    None
    """

    def __init__(self, name: str, inputs: Sequence[str], outputs: Sequence[str]) -> None:
        super().__init__(name)
        self.state("switch")
        self.state("turned_off")
        self.input_names = tuple(self.state(k) for k in inputs)
        self.output_names = tuple(self.state(k) for k in outputs)
        self.state("prev")

    def begin(self) -> None:
        """Define `start`."""
        self.var("start")
        self.relu("start", V("switch") - V("prev"))

    def finish(self, done: str) -> None:
        """
        Drop the switch and pulse when `done` is 1.

        `done` must already include the switch, so that it is 0 off-mode.
        """
        self.relu("switch", V("switch") - V(done))
        self.let("turned_off", V(done))
        self.let("prev", V("switch"))

    def build(
        self,
        target: Callable | None = None,
        sampler: Callable | None = None,
        **initial,
    ) -> SwitchedNetwork:
        """Compile into a `SwitchedNetwork`."""
        return SwitchedNetwork(
            self.name,
            self.compile(),
            len(self.input_names),
            len(self.output_names),
            self.initial_vector(**initial),
            target,
            sampler,
            self,
        )


def wrap_as_switched(
    name: str,
    core: RecurrentMlp,
    load: Sequence[int],
    unload: Sequence[int],
    finished: int,
    core_initial: Sequence[Number],
    target: Callable | None = None,
    sampler: Callable | None = None,
) -> SwitchedNetwork:
    """
    Wrap a recurrent core into a switched network.

    The core must keep its values in [0, 1], map the zero vector to itself,
    and raise its `finished` dimension to 1 when its result is ready. The
    layout is `[switch, turned_off, inputs, outputs, prev, core]`. On start
    the core is set to `core_initial` plus the inputs at the `load`
    positions; while the switch is off the core is fed zeros.

    Parameters
    ----------
    name
        Network name.
    core
        The recurrent core.
    load
        Core positions receiving the inputs.
    unload
        Core positions read as outputs, as many as `load`.
    finished
        Core position of the finished flag.
    core_initial
        Core start state, zero at the `load` positions.
    target
        The computed function.
    sampler
        Input sampler for contract checks.

    Returns
    -------
    SwitchedNetwork
        The wrapped network of dimension `core.d + 2 * len(load) + 3`.
    """
    if core.external:
        raise DimensionMismatch(f"{name}: a wrapped core cannot take external inputs")
    if len(load) != len(unload):
        raise DimensionMismatch(f"{name}: {len(load)} inputs but {len(unload)} outputs")
    m = len(load)
    prev = 2 + 2 * m
    base = prev + 1
    D = base + core.d
    sw, inp, out = SWITCH, 2, 2 + m
    loaded = {base + p: inp + j for j, p in enumerate(load)}

    # start = relu(switch - prev), appended as dimension D
    rows = [((i, 1),) for i in range(D)] + [((sw, 1), (prev, -1))]
    pre1 = Layer(D, tuple(rows), (0,) * (D + 1))
    start = D
    # core dims keep their value only while running; resets and inputs go to extra neurons
    rows = [((i, 1), (start, -1), (sw, 1)) if i >= base else ((i, 1),) for i in range(D)]
    bias = [-1 if i >= base else 0 for i in range(D)]
    extra = []
    for i in range(base, D):
        c0 = Fraction(core_initial[i - base])
        if i in loaded:
            extra.append((i, ((loaded[i], 1), (start, 1)), -1))
        if c0:
            extra.append((i, ((start, c0),), 0))
    for _, row, b in extra:
        rows.append(row)
        bias.append(b)
    pre2 = Layer(D + 1, tuple(rows), tuple(bias))
    rows = [((i, 1),) for i in range(D)]
    for n, (i, _, _) in enumerate(extra):
        rows[i] = (*rows[i], (D + n, 1))
    pre3 = Layer(D + len(extra), tuple(rows), (0,) * D)

    body = parallel(Mlp((identity_layer(base),)), core.core)

    fin = base + finished
    rows = [((i, 1),) for i in range(D)] + [((sw, 1), (fin, 1))]
    post1 = Layer(D, tuple(rows), (0,) * D + (-1,))
    fe = D
    rows, bias = [], []
    pieces = []
    for i in range(D):
        if i in (sw, prev):
            rows.append(((sw, 1), (fe, -1)))
            bias.append(0)
        elif i == TURNED_OFF:
            rows.append(((fe, 1),))
            bias.append(0)
        elif out <= i < out + m:
            rows.append(((i, 1), (fe, -1)))
            bias.append(0)
            pieces.append((i, ((base + unload[i - out], 1), (fe, 1)), -1))
        else:
            rows.append(((i, 1),))
            bias.append(0)
    for _, row, b in pieces:
        rows.append(row)
        bias.append(b)
    post2 = Layer(D + 1, tuple(rows), tuple(bias))
    rows = [((i, 1),) for i in range(D)]
    for n, (i, _, _) in enumerate(pieces):
        rows[i] = (*rows[i], (D + n, 1))
    post3 = Layer(D + len(pieces), tuple(rows), (0,) * D)

    network = Mlp((pre1, pre2, pre3, *body.layers, post1, post2, post3))
    names = (
        "switch",
        "turned_off",
        *(f"in{i}" for i in range(m)),
        *(f"out{i}" for i in range(m)),
        "prev",
        *(f"core{i}" for i in range(core.d)),
    )
    logger.debug("Wrapped %s: %d dims, depth %d", name, D, network.depth)
    return SwitchedNetwork(
        name, RecurrentMlp(network), m, m, (0,) * D, target, sampler, names=names
    )


def check_switched_contract(
    network: SwitchedNetwork,
    rng: np.random.Generator | None = None,
    samples: int = 100,
    max_steps: int = 10**5,
    interpret: bool = False,
) -> int:
    """
    Check the switching contract on sampled states.

    Each sample starts a computation from the initial state and from the
    state left by the previous computation. The run must pulse with the
    target outputs, and the following off-mode recurrences must hold the
    outputs, keep the switch and pulse at 0, and reach a fixed point.

    Parameters
    ----------
    network
        The network with a `target` and a `sampler`.
    rng
        Random generator for the sampler.
    samples
        Number of sampled inputs.
    max_steps
        Recurrence cap per computation.
    interpret
        Check the MLP Code interpreter instead of the network.

    Returns
    -------
    int
        The largest recurrence count observed.
    """
    if network.target is None or network.sampler is None:
        raise ValueError(f"{network.name} has no target or sampler")
    rng = rng or np.random.default_rng(0)
    longest = 0
    state = network.initial
    _check_off_mode(network, state, interpret, 0)
    for _ in range(samples):
        inputs = tuple(network.sampler(rng))
        for base in (network.initial, state):
            x = network.start_state(inputs, base)
            try:
                run = network.run(inputs, base, max_steps, interpret)
            except MaxStepsExceeded as err:
                raise ContractViolation(
                    f"{network.name}: no pulse for inputs {inputs}", 2, max_steps, x
                ) from err
            expected = tuple(network.target(inputs))
            if run.outputs != expected or run.state[SWITCH] != 0:
                raise ContractViolation(
                    f"{network.name}: inputs {inputs} gave {run.outputs}, expected {expected}",
                    2,
                    run.steps,
                    run.state,
                )
            longest = max(longest, run.steps)
            state = _check_off_mode(network, run.state, interpret, run.steps)
    return longest


def _check_off_mode(
    network: SwitchedNetwork, x: tuple[Number, ...], interpret: bool, step: int
) -> tuple[Number, ...]:
    held = x[network.outputs]
    for extra in range(1, 4):
        y = network.step(x, interpret)
        if y[SWITCH] != 0 or y[TURNED_OFF] != 0 or y[network.outputs] != held:
            raise ContractViolation(
                f"{network.name}: off-mode recurrence changed switch, pulse or outputs",
                1,
                step + extra,
                x,
            )
        x = y
    if network.step(x, interpret) != x:
        raise ContractViolation(f"{network.name}: off-mode state is not stable", 1, step + 4, x)
    return x
