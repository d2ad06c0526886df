"""Exception types shared across the package.

Validation failures (anything wrong with a machine description) derive from
MachineError so the CLI can map them to a single exit code.
"""

from __future__ import annotations


class MachineError(Exception):
    """A machine description violates the model invariants."""


class DimensionMismatch(MachineError):
    """State/alphabet/matrix dimensions are inconsistent."""


class NegativeEntry(MachineError):
    """A transition probability is negative."""

    def __init__(self, symbol, i, j, value):
        self.symbol = symbol
        self.i = i
        self.j = j
        self.value = value
        super().__init__(
            f"negative probability {value!r} for symbol {symbol!r}, transition {i}->{j}"
        )


class NonStochasticRow(MachineError):
    """A state's outgoing probabilities do not sum to 1."""

    def __init__(self, i, deficit):
        self.i = i
        self.deficit = deficit
        super().__init__(f"row {i} sums to 1{deficit:+.3e} instead of 1")


class Reducible(MachineError):
    """The summed transition matrix has more than one recurrent class."""

    def __init__(self, components):
        self.components = components
        super().__init__(
            f"machine has {len(components)} recurrent classes: {components}"
        )


class NoConvergence(Exception):
    """Stationary-distribution solve failed numerically (not a model error)."""


class NotUnifilar(Exception):
    """Exact unifilar formulas were applied to a nonunifilar machine."""

    def __init__(self, witness=None):
        self.witness = witness
        msg = "machine is not unifilar"
        if witness is not None:
            state, symbol, successors = witness
            msg += f" (state {state!r} emits {symbol!r} into states {successors})"
        super().__init__(msg)


class ZeroProbabilitySymbol(Exception):
    """The requested symbol has zero probability from the current mixed state."""


class ZeroProbabilityWord(ZeroProbabilitySymbol):
    """The requested word is forbidden by the machine."""


class LMaxTooLarge(Exception):
    """Block length would exceed the memory budget of the block-entropy counter."""


class DegenerateCloud(Exception):
    """Point cloud has fewer than two distinct points; no dimension to fit."""


class EmptySpectrum(Exception):
    """Lyapunov dimension requested with no exponents (single-state machine)."""
