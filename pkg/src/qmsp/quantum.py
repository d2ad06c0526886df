"""Pure qubits, projective measurement bases, and machine composition.

A qubit source is a labeled machine whose symbols are pure qubit states
given by Bloch angles.  Measuring every emitted qubit in a fixed basis turns
the source into a classical binary machine: each qubit-labeled matrix is
split across the outcomes in proportion to its Born probabilities.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .hmm import LabeledHMM, validate

ORTHONORMAL_TOL = 1e-14

OUTCOME_ALPHABET = ("0", "1")


@dataclass(frozen=True)
class PureQubit:
    """Pure single-qubit state |psi> = cos(alpha/2)|0> + e^{i beta} sin(alpha/2)|1>.

    alpha is the polar Bloch angle in [0, pi], beta the azimuthal angle in
    [0, 2 pi).  Amplitudes are derived on demand; density matrices are never
    materialized outside tests.
    """

    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= math.pi:
            raise ValueError(f"alpha must lie in [0, pi], got {self.alpha}")
        if not 0.0 <= self.beta < 2.0 * math.pi:
            raise ValueError(f"beta must lie in [0, 2 pi), got {self.beta}")

    def amplitudes(self) -> tuple[complex, complex]:
        return (
            complex(math.cos(self.alpha / 2.0)),
            cmath.exp(1j * self.beta) * math.sin(self.alpha / 2.0),
        )


QUBIT_ZERO = PureQubit(0.0)
QUBIT_ONE = PureQubit(math.pi)
QUBIT_PLUS = PureQubit(math.pi / 2.0)


@dataclass(frozen=True)
class ProjectiveMeasurement:
    """Binary projective measurement basis on the Bloch sphere.

    Outcome 0 projects onto cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>,
    outcome 1 onto the orthogonal sin(theta/2)|0> - e^{i phi} cos(theta/2)|1>.
    """

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if not 0.0 <= self.phi < 2.0 * math.pi:
            raise ValueError(f"phi must lie in [0, 2 pi), got {self.phi}")


def basis_vectors(measurement: ProjectiveMeasurement):
    """Amplitude pairs (psi0, psi1) of the two measurement projectors."""
    half = measurement.theta / 2.0
    phase = cmath.exp(1j * measurement.phi)
    psi0 = (complex(math.cos(half)), phase * math.sin(half))
    psi1 = (complex(math.sin(half)), -phase * math.cos(half))
    return psi0, psi1


def born_probabilities(measurement: ProjectiveMeasurement,
                       qubit: PureQubit) -> tuple[float, float]:
    """Outcome probabilities p_i = |<psi_i|psi>|^2; p0 + p1 = 1."""
    a0, a1 = qubit.amplitudes()
    (b00, b01), (b10, b11) = basis_vectors(measurement)
    p0 = abs(b00.conjugate() * a0 + b01.conjugate() * a1) ** 2
    p1 = abs(b10.conjugate() * a0 + b11.conjugate() * a1) ** 2
    return p0, p1


@dataclass(frozen=True, eq=False)
class QubitHMM:
    """A labeled machine whose alphabet entries carry pure-qubit payloads."""

    machine: LabeledHMM
    emissions: tuple  # one PureQubit per alphabet entry

    def __post_init__(self):
        if len(self.emissions) != self.machine.n_symbols:
            raise ValueError("need exactly one qubit per alphabet symbol")

    @property
    def states(self):
        return self.machine.states

    @property
    def alphabet(self):
        return self.machine.alphabet

    def __repr__(self):
        return f"QubitHMM({self.machine!r})"


def measure_machine(source: QubitHMM,
                    measurement: ProjectiveMeasurement) -> LabeledHMM:
    """Compose a qubit source with a measurement into a classical machine.

    T^(x) = sum_q T^{q} Pr(x|q) over the emitted qubit states q.  The result
    has the same states and stationary distribution as the source, binary
    alphabet ("0", "1"), and is re-validated before being returned.
    """
    n = source.machine.n_states
    t0 = np.zeros((n, n))
    t1 = np.zeros((n, n))
    for idx, qubit in enumerate(source.emissions):
        p0, p1 = born_probabilities(measurement, qubit)
        t0 += source.machine.matrices[idx] * p0
        t1 += source.machine.matrices[idx] * p1
    return validate(source.machine.states, OUTCOME_ALPHABET, np.stack([t0, t1]))
