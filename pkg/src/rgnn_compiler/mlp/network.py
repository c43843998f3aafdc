"""
Exact-rational ReLU networks and their recurrent application.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np

from rgnn_compiler.errors import DimensionMismatch, MaxStepsExceeded

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

logger = logging.getLogger(__name__)

Number = Fraction | int
Row = tuple[tuple[int, Number], ...]


def _exact(value) -> Number:
    q = Fraction(value)
    return q.numerator if q.denominator == 1 else q


@dataclass(frozen=True)
class Layer:
    """
    One affine map followed by ReLU, stored as sparse rows.

    Attributes
    ----------
    in_dim
        Input dimension.
    rows
        For every output, the nonzero `(column, weight)` pairs.
    bias
        One bias per output.
    """

    in_dim: int
    rows: tuple[Row, ...]
    bias: tuple[Number, ...]
    _copies: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.rows) != len(self.bias):
            raise DimensionMismatch(
                f"Layer has {len(self.rows)} rows but {len(self.bias)} biases"
            )
        copies = []
        for row, b in zip(self.rows, self.bias):
            for j, _ in row:
                if not 0 <= j < self.in_dim:
                    raise DimensionMismatch(f"Column {j} outside input dimension {self.in_dim}")
            plain = len(row) == 1 and row[0][1] == 1 and b == 0
            copies.append(row[0][0] if plain else -1)
        object.__setattr__(self, "_copies", tuple(copies))

    @property
    def out_dim(self) -> int:
        """Output dimension."""
        return len(self.rows)

    @property
    def size(self) -> int:
        """Number of nonzero weights."""
        return sum(len(row) for row in self.rows)

    @classmethod
    def from_dense(cls, weights, bias) -> Layer:
        """
        Build a layer from a dense weight matrix and a bias vector.

        Parameters
        ----------
        weights
            An out x in matrix (numpy array or nested sequences).
        bias
            The bias vector.

        Returns
        -------
        Layer
            The sparse layer.
        """
        W = np.array(weights, dtype=object)
        if W.ndim != 2:
            raise DimensionMismatch(f"Weights must be a matrix, got {W.ndim} dimensions")
        if len(bias) != W.shape[0]:
            raise DimensionMismatch(f"{W.shape[0]} rows but {len(bias)} biases")
        rows = tuple(
            tuple((j, _exact(w)) for j, w in enumerate(W[i]) if w != 0)
            for i in range(W.shape[0])
        )
        return cls(W.shape[1], rows, tuple(_exact(b) for b in bias))

    def to_dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense object arrays `(weights, bias)`."""
        W = np.zeros((self.out_dim, self.in_dim), dtype=object)
        for i, row in enumerate(self.rows):
            for j, w in row:
                W[i, j] = w
        return W, np.array(self.bias, dtype=object)

    def apply(self, x: Sequence[Number]) -> list[Number]:
        """ReLU(Wx + b)."""
        out = []
        for row, b, copy in zip(self.rows, self.bias, self._copies):
            if copy >= 0:
                s = x[copy]
            else:
                s = b
                for j, w in row:
                    s += w * x[j]
            out.append(s if s > 0 else 0)
        return out


def identity_layer(d: int) -> Layer:
    """The identity on nonnegative vectors of dimension d."""
    return Layer(d, tuple(((i, 1),) for i in range(d)), (0,) * d)


@dataclass(frozen=True)
class Mlp:
    """
    A finite stack of ReLU layers.

    Attributes
    ----------
    layers
        The layers, applied first to last.
    """

    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        if not self.layers:
            raise DimensionMismatch("An MLP needs at least one layer")
        for i, (a, b) in enumerate(zip(self.layers, self.layers[1:])):
            if a.out_dim != b.in_dim:
                raise DimensionMismatch(
                    f"Layer {i} outputs {a.out_dim} values but layer {i + 1} takes {b.in_dim}"
                )

    @property
    def d_in(self) -> int:
        """Input dimension."""
        return self.layers[0].in_dim

    @property
    def d_out(self) -> int:
        """Output dimension."""
        return self.layers[-1].out_dim

    @property
    def depth(self) -> int:
        """Number of layers."""
        return len(self.layers)

    @property
    def size(self) -> int:
        """Number of nonzero weights."""
        return sum(layer.size for layer in self.layers)

    def __call__(self, x: Sequence[Number]) -> tuple[Number, ...]:
        return eval_mlp(self, x)


def eval_mlp(network: Mlp, x: Sequence[Number]) -> tuple[Number, ...]:
    """
    Evaluate an MLP exactly.

    Parameters
    ----------
    network
        The MLP.
    x
        Input vector of rationals.

    Returns
    -------
    tuple[Number, ...]
        The output vector.
    """
    if len(x) != network.d_in:
        raise DimensionMismatch(f"Expected {network.d_in} inputs, got {len(x)}")
    values = list(x)
    for layer in network.layers:
        values = layer.apply(values)
    return tuple(values)


@dataclass(frozen=True)
class RecurrentMlp:
    """
    An MLP applied to its own output.

    The last `external` dimensions are overwritten by external inputs
    before every application.

    Attributes
    ----------
    core
        An MLP with equal input and output dimension.
    external
        Number of trailing external-input dimensions.
    """

    core: Mlp
    external: int = 0

    def __post_init__(self) -> None:
        if self.core.d_in != self.core.d_out:
            raise DimensionMismatch(
                f"A recurrent MLP maps {self.core.d_in} to {self.core.d_out} dimensions"
            )
        if not 0 <= self.external <= self.core.d_in:
            raise DimensionMismatch(f"Cannot have {self.external} external dimensions")

    @property
    def d(self) -> int:
        """State dimension."""
        return self.core.d_in

    def step(
        self, x: Sequence[Number], z: Sequence[Number] | None = None
    ) -> tuple[Number, ...]:
        """
        Apply the core once.

        Parameters
        ----------
        x
            The current state.
        z
            External inputs, required when `external` is positive.

        Returns
        -------
        tuple[Number, ...]
            The next state.
        """
        if self.external:
            if z is None or len(z) != self.external:
                raise DimensionMismatch(f"Expected {self.external} external inputs")
            x = tuple(x[: self.d - self.external]) + tuple(z)
        return eval_mlp(self.core, x)


def run_recurrent(
    network: RecurrentMlp,
    x0: Sequence[Number],
    externals: Sequence[Sequence[Number]] | Callable[[int], Sequence[Number]] | None = None,
    stop: Callable[[tuple[Number, ...]], bool] | None = None,
    max_steps: int = 10**6,
) -> list[tuple[Number, ...]]:
    """
    Apply a recurrent MLP repeatedly.

    Parameters
    ----------
    network
        The recurrent MLP.
    x0
        The initial state.
    externals
        External inputs; entry (or call result) t - 1 feeds step t.
    stop
        Predicate on states. Without one, exactly `max_steps` steps run.
    max_steps
        Step cap.

    Returns
    -------
    list[tuple[Number, ...]]
        The trace x0, x1, ..., ending at the first state satisfying `stop`.
    """
    if len(x0) != network.d:
        raise DimensionMismatch(f"Expected a state of dimension {network.d}, got {len(x0)}")
    trace = [tuple(x0)]
    for t in range(1, max_steps + 1):
        z = None
        if network.external:
            z = externals(t) if callable(externals) else externals[t - 1]
        trace.append(network.step(trace[-1], z))
        if stop is not None and stop(trace[-1]):
            logger.debug("Recurrent MLP stopped after %d steps", t)
            return trace
    if stop is not None:
        raise MaxStepsExceeded(f"No stop after {max_steps} recurrent steps")
    return trace


def pad(network: Mlp, depth: int) -> Mlp:
    """Append identity layers up to `depth` layers."""
    if depth < network.depth:
        raise DimensionMismatch(f"Cannot pad depth {network.depth} down to {depth}")
    extra = tuple(identity_layer(network.d_out) for _ in range(depth - network.depth))
    return Mlp(network.layers + extra)


def compose(*networks: Mlp) -> Mlp:
    """Apply the networks one after another."""
    return Mlp(tuple(layer for network in networks for layer in network.layers))


def parallel(*networks: Mlp) -> Mlp:
    """
    Block-diagonal combination on concatenated inputs.

    Shallower blocks are padded with identity layers, which is exact on
    nonnegative values.

    Parameters
    ----------
    *networks
        The blocks.

    Returns
    -------
    Mlp
        A network of the largest block depth.
    """
    depth = max(network.depth for network in networks)
    padded = [pad(network, depth) for network in networks]
    layers = []
    for level in range(depth):
        rows: list[Row] = []
        bias: list[Number] = []
        offset = 0
        for network in padded:
            layer = network.layers[level]
            rows += [tuple((j + offset, w) for j, w in row) for row in layer.rows]
            bias += layer.bias
            offset += layer.in_dim
        layers.append(Layer(offset, tuple(rows), tuple(bias)))
    return Mlp(tuple(layers))
