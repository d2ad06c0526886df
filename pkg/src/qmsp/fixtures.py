"""Bundled machines: the qubit sources shipped as data files plus small
classical machines used throughout the tests and docs."""

from __future__ import annotations

from importlib import resources

import numpy as np

from .hmm import LabeledHMM, validate
from .machine_io import machine_from_dict
from .quantum import QubitHMM

import json

BUNDLED = (
    "orthogonal_source",
    "nonorthogonal_source",
    "measured_nonorthogonal_halfpi",
)


def bundled_machine(name: str):
    """Load one of the machines shipped inside the package by short name."""
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled machine {name!r}; have {BUNDLED}")
    ref = resources.files(__package__) / "machines" / f"{name}.json"
    return machine_from_dict(json.loads(ref.read_text(encoding="utf-8")))


def orthogonal_qubit_source() -> QubitHMM:
    """Three-state source emitting the orthogonal pure states |0><0| and |1><1|."""
    return bundled_machine("orthogonal_source")


def nonorthogonal_qubit_source() -> QubitHMM:
    """Three-state source emitting the nonorthogonal pure states |0><0| and |+><+|."""
    return bundled_machine("nonorthogonal_source")


def measured_halfpi_machine() -> LabeledHMM:
    """Classical machine from measuring the nonorthogonal source at theta = pi/2."""
    return bundled_machine("measured_nonorthogonal_halfpi")


def fair_coin() -> LabeledHMM:
    """One state, two equally likely symbols."""
    return biased_coin(0.5)


def biased_coin(p: float) -> LabeledHMM:
    mats = np.array([[[p]], [[1.0 - p]]])
    return validate(("S",), ("0", "1"), mats)


def golden_mean() -> LabeledHMM:
    """No two consecutive 1s: A self-loops on 0 or moves to B on 1; B returns on 0."""
    mats = np.zeros((2, 2, 2))
    mats[0, 0, 0] = 0.5
    mats[1, 0, 1] = 0.5
    mats[0, 1, 0] = 1.0
    return validate(("A", "B"), ("0", "1"), mats)


def alternating_cycle() -> LabeledHMM:
    """Deterministic period-2 machine emitting 0101..."""
    mats = np.zeros((2, 2, 2))
    mats[0, 0, 1] = 1.0
    mats[1, 1, 0] = 1.0
    return validate(("E", "O"), ("0", "1"), mats)
