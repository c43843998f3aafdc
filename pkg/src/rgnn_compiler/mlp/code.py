"""
MLP Code: a small imperative language over rational variables that compiles
to ReLU networks.

A program declares state variables (the recurrent vector, in declaration
order, externals last) and temporaries (alive for one pass only), then lists
statements. One pass of the interpreter equals one application of the
compiled network, provided every gadget precondition holds; the interpreter
checks them and raises `IllFormedProgram` otherwise.

Statements are scheduled into levels; a level compiles to two layers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Union

from rgnn_compiler.errors import IllFormedProgram
from rgnn_compiler.mlp.network import Layer, Mlp, RecurrentMlp, identity_layer

if TYPE_CHECKING:
    from collections.abc import Sequence

    from rgnn_compiler.mlp.network import Number, Row

logger = logging.getLogger(__name__)


class Lin:
    """
    An affine expression over named variables.

    Supports `+`, `-`, negation, and scaling by rational constants.
    """

    __slots__ = ("const", "terms")

    def __init__(self, terms: dict[str, Fraction] | None = None, const=0) -> None:
        self.terms = {k: v for k, v in (terms or {}).items() if v != 0}
        self.const = Fraction(const)

    @classmethod
    def of(cls, value: Operand) -> Lin:
        """Coerce a variable name, a constant or an expression."""
        if isinstance(value, Lin):
            return value
        if isinstance(value, str):
            return cls({value: Fraction(1)})
        return cls(const=value)

    def __add__(self, other: Operand) -> Lin:
        other = Lin.of(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0) + v
        return Lin(terms, self.const + other.const)

    __radd__ = __add__

    def __neg__(self) -> Lin:
        return Lin({k: -v for k, v in self.terms.items()}, -self.const)

    def __sub__(self, other: Operand) -> Lin:
        return self + (-Lin.of(other))

    def __rsub__(self, other: Operand) -> Lin:
        return Lin.of(other) - self

    def __mul__(self, factor) -> Lin:
        factor = Fraction(factor)
        return Lin({k: v * factor for k, v in self.terms.items()}, self.const * factor)

    __rmul__ = __mul__

    def __truediv__(self, divisor) -> Lin:
        return self * (1 / Fraction(divisor))

    def variables(self) -> set[str]:
        """Names the expression reads."""
        return set(self.terms)

    def evaluate(self, env: dict[str, Fraction]) -> Fraction:
        """Value under an assignment."""
        return self.const + sum((w * env[k] for k, w in self.terms.items()), Fraction(0))

    def __repr__(self) -> str:
        parts = [f"{w}*{k}" for k, w in self.terms.items()]
        if self.const or not parts:
            parts.append(str(self.const))
        return " + ".join(parts)


Operand = Union[Lin, str, int, Fraction]


def V(name: str) -> Lin:
    """The expression consisting of one variable."""
    return Lin.of(name)


@dataclass(frozen=True)
class Statement:
    """
    One statement.

    Attributes
    ----------
    kind
        "relu", "lsig" or "let" assignments, or the conditional gadgets
        "increase", "decrease", "div" and "set".
    target
        The variable written.
    expr
        The assigned expression, the amount, or the value to set.
    flag
        The 0/1 condition of a gadget.
    divisor
        The divisor of "div".
    """

    kind: str
    target: str
    expr: Lin | None = None
    flag: Lin | None = None
    divisor: int = 1

    @property
    def reads(self) -> set[str]:
        names = set()
        for e in (self.expr, self.flag):
            if e is not None:
                names |= e.variables()
        if self.kind in _IN_PLACE:
            names.add(self.target)
        return names


_IN_PLACE = ("increase", "decrease", "div", "set")


class MlpCode:
    """
    A program in MLP Code.

    Parameters
    ----------
    name
        Name used in messages.

    Returns
    -------
    None
    """

    def __init__(self, name: str = "mlp-code") -> None:
        self.name = name
        self._state: list[str] = []
        self._externals: list[str] = []
        self._initial: dict[str, Fraction] = {}
        self._temps: set[str] = set()
        self._assigned: set[str] = set()
        self.statements: list[Statement] = []

    # declarations

    def state(self, name: str, initial=0) -> str:
        """Declare a state variable and return its name."""
        self._declare(name)
        self._state.append(name)
        self._initial[name] = Fraction(initial)
        return name

    def external_input(self, name: str) -> str:
        """Declare an external-input variable, placed after every state variable."""
        self._declare(name)
        self._externals.append(name)
        self._initial[name] = Fraction(0)
        return name

    def var(self, name: str) -> str:
        """Declare a temporary."""
        self._declare(name)
        self._temps.add(name)
        return name

    def _declare(self, name: str) -> None:
        if name in self._initial or name in self._temps:
            raise IllFormedProgram(f"{self.name}: variable {name!r} declared twice")

    @property
    def names(self) -> tuple[str, ...]:
        """Names of the recurrent dimensions in order."""
        return tuple(self._state + self._externals)

    @property
    def d(self) -> int:
        """Recurrent dimension."""
        return len(self._state) + len(self._externals)

    def index(self, name: str) -> int:
        """Position of a recurrent dimension."""
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"{self.name}: no state variable {name!r}") from None

    def initial_vector(self, **values) -> tuple[Fraction, ...]:
        """Initial values, with keyword overrides."""
        unknown = set(values) - set(self.names)
        if unknown:
            raise KeyError(f"{self.name}: unknown variables {sorted(unknown)}")
        return tuple(Fraction(values.get(k, self._initial[k])) for k in self.names)

    # statements

    def _add(self, statement: Statement) -> None:
        if statement.target not in self._initial and statement.target not in self._temps:
            raise IllFormedProgram(f"{self.name}: assignment to undeclared {statement.target!r}")
        if statement.target in self._externals:
            raise IllFormedProgram(f"{self.name}: external {statement.target!r} is read-only")
        for name in sorted(statement.reads):
            if name not in self._initial and name not in self._temps:
                raise IllFormedProgram(f"{self.name}: undeclared variable {name!r}")
            if name in self._temps and name not in self._assigned:
                raise IllFormedProgram(f"{self.name}: {name!r} read before assignment")
        self.statements.append(statement)
        self._assigned.add(statement.target)

    def relu(self, target: str, expr: Operand) -> None:
        """target = max(expr, 0)."""
        self._add(Statement("relu", target, Lin.of(expr)))

    def lsig(self, target: str, expr: Operand) -> None:
        """target = min(max(expr, 0), 1)."""
        self._add(Statement("lsig", target, Lin.of(expr)))

    def let(self, target: str, expr: Operand) -> None:
        """target = expr, where expr is known to be nonnegative."""
        self._add(Statement("let", target, Lin.of(expr)))

    def increase_if(self, target: str, flag: Operand, amount: Operand) -> None:
        """target += amount if flag, for amount in [0, 1]."""
        self._add(Statement("increase", target, Lin.of(amount), Lin.of(flag)))

    def decrease_if(self, target: str, flag: Operand, amount: Operand) -> None:
        """target -= amount if flag, for amount in [0, 1] and no underflow."""
        self._add(Statement("decrease", target, Lin.of(amount), Lin.of(flag)))

    def div_if(self, target: str, divisor: int, flag: Operand) -> None:
        """target /= divisor if flag, for target in [0, 1]."""
        if divisor < 1:
            raise IllFormedProgram(f"{self.name}: divisor must be positive, got {divisor}")
        self._add(Statement("div", target, None, Lin.of(flag), divisor))

    def set_if(self, target: str, flag: Operand, value: Operand) -> None:
        """target = value if flag, for target and value in [0, 1]."""
        self._add(Statement("set", target, Lin.of(value), Lin.of(flag)))

    # interpretation

    def step(
        self, x: Sequence[Number], z: Sequence[Number] | None = None
    ) -> tuple[Fraction, ...]:
        """
        One interpreted pass.

        Parameters
        ----------
        x
            The recurrent vector.
        z
            External inputs overwriting the trailing dimensions.

        Returns
        -------
        tuple[Fraction, ...]
            The next recurrent vector.
        """
        if len(x) != self.d:
            raise IllFormedProgram(f"{self.name}: expected {self.d} values, got {len(x)}")
        env = {k: Fraction(v) for k, v in zip(self.names, x)}
        if self._externals:
            if z is None or len(z) != len(self._externals):
                raise IllFormedProgram(f"{self.name}: expected {len(self._externals)} externals")
            env.update((k, Fraction(v)) for k, v in zip(self._externals, z))
        for k, v in env.items():
            if v < 0:
                raise IllFormedProgram(f"{self.name}: {k} = {v} is negative")
        for s in self.statements:
            env[s.target] = self._execute(s, env)
        return tuple(env[k] for k in self.names)

    @property
    def external(self) -> int:
        """Number of external-input dimensions."""
        return len(self._externals)

    def _execute(self, s: Statement, env: dict[str, Fraction]) -> Fraction:
        value = s.expr.evaluate(env) if s.expr is not None else None
        if s.kind == "relu":
            return max(value, Fraction(0))
        if s.kind == "lsig":
            return min(max(value, Fraction(0)), Fraction(1))
        if s.kind == "let":
            self._require(value >= 0, s, f"value {value} is negative")
            return value
        flag = s.flag.evaluate(env)
        self._require(flag in (0, 1), s, f"flag {s.flag!r} = {flag} is not 0 or 1")
        v = env[s.target]
        if s.kind in ("increase", "decrease"):
            self._require(0 <= value <= 1, s, f"amount {s.expr!r} = {value} outside [0, 1]")
            if s.kind == "increase":
                return v + flag * value
            self._require(v >= flag * value, s, f"{s.target} = {v} would become negative")
            return v - flag * value
        self._require(0 <= v <= 1, s, f"{s.target} = {v} outside [0, 1]")
        if s.kind == "div":
            return v / s.divisor if flag else v
        self._require(0 <= value <= 1, s, f"value {s.expr!r} = {value} outside [0, 1]")
        return value if flag else v

    def _require(self, condition: bool, s: Statement, reason: str) -> None:
        if not condition:
            raise IllFormedProgram(f"{self.name}: {s.kind} on {s.target!r}: {reason}")

    # compilation

    def levels(self) -> list[list[Statement]]:
        """
        Group statements into levels of simultaneous execution.

        A statement goes strictly after every earlier statement it reads from
        or writes the same target as, and no earlier than any earlier
        statement reading its target.
        """
        placed: list[int] = []
        for j, s in enumerate(self.statements):
            level = 0
            for i in range(j):
                earlier = self.statements[i]
                if earlier.target in s.reads or earlier.target == s.target:
                    level = max(level, placed[i] + 1)
                elif s.target in earlier.reads:
                    level = max(level, placed[i])
            placed.append(level)
        grouped: list[list[Statement]] = [[] for _ in range(max(placed, default=-1) + 1)]
        for s, level in zip(self.statements, placed):
            grouped[level].append(s)
        return grouped

    def compile(self) -> RecurrentMlp:
        """
        Compile to a recurrent MLP, two layers per level.

        Returns
        -------
        RecurrentMlp
            A network whose application equals `step`.
        """
        d = self.d
        work = list(self.names) + sorted(self._temps)
        col = {k: i for i, k in enumerate(work)}
        levels = self.levels()
        if not levels:
            return RecurrentMlp(Mlp((identity_layer(d),)), len(self._externals))
        layers: list[Layer] = []
        for number, group in enumerate(levels):
            first, second = self._compile_level(group, col, len(work))
            if number == 0:
                first = _restrict_inputs(first, d)
            layers += [first, second]
        last = layers[-1]
        layers[-1] = Layer(last.in_dim, last.rows[:d], last.bias[:d])
        logger.debug(
            "Compiled %s into %d layers over %d variables", self.name, len(layers), len(work)
        )
        return RecurrentMlp(Mlp(tuple(layers)), len(self._externals))

    def _compile_level(
        self, group: list[Statement], col: dict[str, int], width: int
    ) -> tuple[Layer, Layer]:
        rows: list[Row] = [((i, 1),) for i in range(width)]
        bias: list[Fraction] = [Fraction(0)] * width

        def neuron(expr: Lin) -> int:
            merged: dict[int, Fraction] = {}
            for k, w in expr.terms.items():
                merged[col[k]] = merged.get(col[k], 0) + w
            rows.append(tuple((j, _num(w)) for j, w in sorted(merged.items()) if w != 0))
            bias.append(expr.const)
            return len(rows) - 1

        out: dict[int, tuple[tuple[int, int], ...]] = {}
        for s in group:
            t = col[s.target]
            v = V(s.target)
            if s.kind in ("relu", "let"):
                out[t] = ((neuron(s.expr), 1),)
            elif s.kind == "lsig":
                out[t] = ((neuron(s.expr), 1), (neuron(s.expr - 1), -1))
            elif s.kind == "increase":
                out[t] = ((t, 1), (neuron(s.expr + s.flag - 1), 1))
            elif s.kind == "decrease":
                out[t] = ((t, 1), (neuron(s.expr + s.flag - 1), -1))
            elif s.kind == "div":
                scale = 1 - Fraction(1, s.divisor)
                out[t] = ((t, 1), (neuron(v * scale + s.flag - 1), -1))
            else:
                out[t] = ((t, 1), (neuron(v + s.flag - 1), -1), (neuron(s.expr + s.flag - 1), 1))
        first = Layer(width, tuple(rows), tuple(_num(b) for b in bias))
        second_rows = tuple(
            tuple((j, w) for j, w in out[i]) if i in out else ((i, 1),) for i in range(width)
        )
        second = Layer(len(rows), second_rows, (0,) * width)
        return first, second


def _num(value) -> Number:
    q = Fraction(value)
    return q.numerator if q.denominator == 1 else q


def _restrict_inputs(layer: Layer, d: int) -> Layer:
    """Drop temporary columns from the first layer; temporaries start at zero."""
    rows = tuple(row if all(j < d for j, _ in row) else () for row in layer.rows)
    return Layer(d, rows, layer.bias)


def interpret_mlp_code(
    code: MlpCode, x: Sequence[Number], z: Sequence[Number] | None = None
) -> tuple[Fraction, ...]:
    """One interpreted pass of a program."""
    return code.step(x, z)


def compile_mlp_code(code: MlpCode) -> RecurrentMlp:
    """Compile a program to a recurrent MLP."""
    return code.compile()
