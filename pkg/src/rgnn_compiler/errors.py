"""
Exceptions raised by the compiler and its simulators.
"""

from __future__ import annotations


class RgnnCompilerError(Exception):
    """
    Base class for every error raised by this package.
    """


class NotInRB(RgnnCompilerError, ValueError):
    """A rational has no binary expansion of the requested length."""


class NotInRQ(RgnnCompilerError, ValueError):
    """A rational is not a rational quaternary encoding."""


class SlotOverflow(RgnnCompilerError, ValueError):
    """A value does not fit in a fixed-width slot."""


class MalformedEncoding(RgnnCompilerError, ValueError):
    """A bitstring cannot be decoded with the requested encoding."""


class NodeNotInGraph(RgnnCompilerError, KeyError):
    """A node index is outside of the graph."""


class MalformedDag(RgnnCompilerError, ValueError):
    """A color dag violates its level or edge invariants."""


class NotRealizable(RgnnCompilerError, ValueError):
    """No graph realizes a sketch."""


class InfeasibleParams(RgnnCompilerError, ValueError):
    """Random instance parameters admit no instance."""


class DisconnectedInput(RgnnCompilerError, ValueError):
    """A graph-level operation received a disconnected graph."""


class DimensionMismatch(RgnnCompilerError, ValueError):
    """Vector and network dimensions do not agree."""


class IllFormedProgram(RgnnCompilerError, ValueError):
    """A program (MLP Code or stack machine) violates a precondition."""


class MissingProgram(RgnnCompilerError, ValueError):
    """An operation needs a stack program but only a callback is available."""


class StepCapExceeded(RgnnCompilerError, RuntimeError):
    """
    An executor hit its step cap before a node finished.

    Parameters
    ----------
    message
        The error message.
    node
        The node that did not finish, if known.
    """

    def __init__(self, message: str, node: int | None = None) -> None:
        super().__init__(message)
        self.node = node


class MaxStepsExceeded(RgnnCompilerError, RuntimeError):
    """A recurrent network did not stop within its step budget."""


class MessageBoundExceeded(RgnnCompilerError, RuntimeError):
    """
    A message or message sum exceeded the algorithm's length bound.

    Parameters
    ----------
    message
        The error message.
    node
        The offending node.
    iteration
        The iteration at which the bound was exceeded.
    """

    def __init__(self, message: str, node: int, iteration: int) -> None:
        super().__init__(message)
        self.node = node
        self.iteration = iteration


class ContractViolation(RgnnCompilerError, RuntimeError):
    """
    A switched network broke its switching contract.

    Parameters
    ----------
    message
        The error message.
    condition
        Which condition failed, 1 (off-mode) or 2 (on-mode).
    step
        The recurrence at which it failed.
    state
        The state that exposed the violation.
    """

    def __init__(
        self, message: str, condition: int, step: int, state: tuple | None = None
    ) -> None:
        super().__init__(message)
        self.condition = condition
        self.step = step
        self.state = state
