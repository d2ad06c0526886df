"""Machine file format: JSON with explicit transitions.

    {
      "states": ["A", "B", "C"],
      "alphabet": ["0", "1"],
      "transitions": [
        {"from": "A", "to": "B", "symbol": "0", "prob": 0.5},
        ...
      ]
    }

Unlisted transitions are structural zeros.  A qubit-emitting machine uses
alphabet entries of the form {"label": "rho0", "bloch": [alpha, beta]}; the
loader then returns a QubitHMM.  A transition's "symbol" is matched against
alphabet labels first (numbers are compared through their string form), and
is otherwise accepted as a 0-based alphabet index.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DimensionMismatch, MachineError
from .hmm import LabeledHMM, validate
from .quantum import PureQubit, QubitHMM


def load_machine(path) -> Union[LabeledHMM, QubitHMM]:
    """Parse and validate a machine file; qubit payloads yield a QubitHMM."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return machine_from_dict(raw)


def machine_from_dict(raw: dict) -> Union[LabeledHMM, QubitHMM]:
    for key in ("states", "alphabet", "transitions"):
        if key not in raw:
            raise MachineError(f"machine file is missing the {key!r} list")
    states = list(raw["states"])
    if not states:
        raise DimensionMismatch("machine needs at least one state")

    labels = []
    qubits = []
    for entry in raw["alphabet"]:
        if isinstance(entry, dict):
            if "label" not in entry or "bloch" not in entry:
                raise MachineError(
                    f"qubit symbol needs 'label' and 'bloch' fields, got {entry!r}"
                )
            alpha, beta = entry["bloch"]
            labels.append(entry["label"])
            qubits.append(PureQubit(float(alpha), float(beta)))
        else:
            labels.append(entry)
            qubits.append(None)
    if any(q is not None for q in qubits) and any(q is None for q in qubits):
        raise MachineError("machine mixes qubit and plain symbols")

    state_pos = _index_by_label(states, "state")
    symbol_pos = _index_by_label(labels, "symbol")

    n, m = len(states), len(labels)
    mats = np.zeros((m, n, n))
    seen = set()
    for k, tr in enumerate(raw["transitions"]):
        try:
            i = _resolve(tr["from"], state_pos, n)
            j = _resolve(tr["to"], state_pos, n)
            x = _resolve(tr["symbol"], symbol_pos, m)
            prob = float(tr["prob"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MachineError(f"transition #{k}: {exc}") from exc
        if (i, j, x) in seen:
            raise MachineError(
                f"transition #{k}: duplicate entry for "
                f"{states[i]!r} -> {states[j]!r} on {labels[x]!r}"
            )
        seen.add((i, j, x))
        mats[x, i, j] = prob

    machine = validate(states, labels, mats)
    if qubits[0] is not None:
        return QubitHMM(machine=machine, emissions=tuple(qubits))
    return machine


def _index_by_label(labels, kind):
    pos = {}
    for idx, label in enumerate(labels):
        pos[label] = idx
        pos.setdefault(str(label), idx)
    if len(set(map(str, labels))) != len(labels):
        raise MachineError(f"duplicate {kind} labels: {labels!r}")
    return pos


def _resolve(token, pos, size):
    if token in pos:
        return pos[token]
    if str(token) in pos:
        return pos[str(token)]
    if isinstance(token, int) and 0 <= token < size:
        return token
    raise KeyError(f"unknown label {token!r}")


def save_machine(machine: Union[LabeledHMM, QubitHMM], path) -> None:
    """Write a machine file that round-trips through load_machine."""
    Path(path).write_text(machine_to_json(machine), encoding="utf-8")


def machine_to_json(machine: Union[LabeledHMM, QubitHMM]) -> str:
    if isinstance(machine, QubitHMM):
        base = machine.machine
        alphabet = [
            {"label": label, "bloch": [q.alpha, q.beta]}
            for label, q in zip(base.alphabet, machine.emissions)
        ]
    else:
        base = machine
        alphabet = list(base.alphabet)

    transitions = []
    for x in range(base.n_symbols):
        for i in range(base.n_states):
            for j in range(base.n_states):
                prob = base.matrices[x, i, j]
                if prob != 0.0:
                    transitions.append({
                        "from": base.states[i],
                        "to": base.states[j],
                        "symbol": base.alphabet[x],
                        "prob": float(prob),
                    })
    doc = {
        "states": list(base.states),
        "alphabet": alphabet,
        "transitions": transitions,
    }
    return json.dumps(doc, indent=2) + "\n"
