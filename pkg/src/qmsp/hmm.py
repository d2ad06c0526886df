"""Labeled-transition hidden Markov models: validation and exact analysis.

A machine is a set of states, a symbol alphabet, and one substochastic
matrix per symbol, entry (x)_{ij} = Pr(emit x, go to j | in i).  This module
validates machines, computes their stationary distribution, tests
unifilarity, evaluates the closed-form entropy rate and statistical
complexity available in the unifilar case, samples symbol sequences, and
provides the empirical block-entropy estimator used as an independent
cross-check of the trajectory estimators.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from . import _kernels
from .errors import (
    DimensionMismatch,
    LMaxTooLarge,
    NegativeEntry,
    NoConvergence,
    NonStochasticRow,
    NotUnifilar,
    Reducible,
)

ROW_SUM_TOL = 1e-12
STATIONARY_TOL = 1e-10
UNIFILAR_ZERO = 1e-14

# block-entropy counter refuses more bins than this (memory guard)
MAX_BLOCK_BINS = 1 << 24


def shannon_entropy_bits(probs) -> float:
    """Shannon entropy in bits with the 0 log 0 := 0 convention."""
    p = np.asarray(probs, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


@dataclass(frozen=True, eq=False)
class LabeledHMM:
    """Validated machine; immutable and safe to share across workers.

    Construct through :func:`validate` (or the machine-file loader), which
    enforces nonnegativity, row stochasticity, and a unique recurrent class.
    """

    states: tuple
    alphabet: tuple
    matrices: np.ndarray  # (M, N, N), read-only

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_symbols(self) -> int:
        return len(self.alphabet)

    @cached_property
    def transition_matrix(self) -> np.ndarray:
        """Summed matrix T = sum_x T^(x) (the hidden-state chain)."""
        t = self.matrices.sum(axis=0)
        t.setflags(write=False)
        return t

    @cached_property
    def row_sums(self) -> np.ndarray:
        """(M, N) per-symbol row masses; row i of entry x is Pr(x | state i)."""
        r = self.matrices.sum(axis=2)
        r.setflags(write=False)
        return r

    @cached_property
    def stationary(self) -> np.ndarray:
        """Stationary distribution pi with pi T = pi, computed once."""
        pi = stationary_distribution(self)
        pi.setflags(write=False)
        return pi

    def symbol_index(self, symbol) -> int:
        """Map a symbol label (or valid index) to its alphabet position."""
        if symbol in self.alphabet:
            return self.alphabet.index(symbol)
        if isinstance(symbol, (int, np.integer)) and 0 <= symbol < self.n_symbols:
            return int(symbol)
        raise KeyError(f"unknown symbol {symbol!r}")

    def __repr__(self):
        return (f"LabeledHMM(states={list(self.states)}, "
                f"alphabet={list(self.alphabet)})")


def validate(states: Sequence, alphabet: Sequence, matrices) -> LabeledHMM:
    """Check a raw machine description and freeze it into a LabeledHMM.

    Raises DimensionMismatch, NegativeEntry, NonStochasticRow, or Reducible.
    """
    states = tuple(states)
    alphabet = tuple(alphabet)
    mats = np.ascontiguousarray(np.asarray(matrices, dtype=float))
    n, m = len(states), len(alphabet)
    if len(set(states)) != n or len(set(alphabet)) != m:
        raise DimensionMismatch("duplicate state or symbol labels")
    if mats.ndim != 3 or mats.shape != (m, n, n):
        raise DimensionMismatch(
            f"expected {m} matrices of shape {n}x{n}, got array of shape {mats.shape}"
        )

    for x in range(m):
        bad = np.argwhere(mats[x] < 0)
        if bad.size:
            i, j = bad[0]
            raise NegativeEntry(alphabet[x], states[i], states[j], mats[x, i, j])
    if mats.max(initial=0.0) > 1 + ROW_SUM_TOL:
        x, i, j = np.unravel_index(np.argmax(mats), mats.shape)
        raise NegativeEntry(alphabet[x], states[i], states[j], mats[x, i, j])

    row_totals = mats.sum(axis=(0, 2))
    for i, tot in enumerate(row_totals):
        if abs(tot - 1.0) > ROW_SUM_TOL:
            raise NonStochasticRow(states[i], tot - 1.0)

    # unique recurrent class of the summed chain
    t = mats.sum(axis=0)
    ncomp, labels = csgraph.connected_components(
        sp.csr_matrix(t > 0), connection="strong"
    )
    terminal = set(range(ncomp))
    rows, cols = np.nonzero(t > 0)
    for i, j in zip(rows, cols):
        if labels[i] != labels[j]:
            terminal.discard(labels[i])
    if len(terminal) != 1:
        components = [
            [states[i] for i in range(n) if labels[i] == c] for c in sorted(terminal)
        ]
        raise Reducible(components)

    mats.setflags(write=False)
    machine = LabeledHMM(states=states, alphabet=alphabet, matrices=mats)
    machine.stationary  # compute and cache now; fails loudly if ill-conditioned
    return machine


def stationary_distribution(machine: LabeledHMM) -> np.ndarray:
    """Solve pi T = pi, sum(pi) = 1 by a direct linear solve.

    Falls back to power iteration (tolerance 1e-13) if the solve is
    ill-conditioned; raises NoConvergence if both fail.
    """
    t = machine.matrices.sum(axis=0)
    n = t.shape[0]
    a = t.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        pi = np.full(n, np.nan)
    if not _is_valid_stationary(pi, t):
        pi = _power_iteration(t)
        if pi is None:
            raise NoConvergence("stationary distribution did not converge")
    pi = np.maximum(pi, 0.0)
    return pi / pi.sum()


def _is_valid_stationary(pi, t) -> bool:
    if not np.all(np.isfinite(pi)) or pi.min() < -STATIONARY_TOL:
        return False
    return (abs(pi.sum() - 1.0) < 1e-9
            and np.abs(pi @ t - pi).max() < STATIONARY_TOL)


def _power_iteration(t, tol=1e-13, max_iter=1_000_000):
    n = t.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ t
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() < tol:
            return nxt
        pi = nxt
    return None


def unifilarity_witness(machine: LabeledHMM, zero_tol: float = UNIFILAR_ZERO):
    """Return None if unifilar, else (state, symbol, successor labels).

    A machine is unifilar when each row of each per-symbol matrix has at
    most one entry above `zero_tol`.
    """
    for x in range(machine.n_symbols):
        support = machine.matrices[x] > zero_tol
        counts = support.sum(axis=1)
        bad = np.nonzero(counts > 1)[0]
        if bad.size:
            i = int(bad[0])
            successors = [machine.states[j] for j in np.nonzero(support[i])[0]]
            return machine.states[i], machine.alphabet[x], successors
    return None


def is_unifilar(machine: LabeledHMM, zero_tol: float = UNIFILAR_ZERO) -> bool:
    return unifilarity_witness(machine, zero_tol) is None


def entropy_rate_unifilar(machine: LabeledHMM) -> float:
    """Exact entropy rate of a unifilar machine, in bits per symbol.

    h = -sum_s pi_s sum_x sum_s' T^(x)_{ss'} log2 T^(x)_{ss'}.  Only valid
    when symbol sequences identify state paths; raises NotUnifilar otherwise.
    """
    witness = unifilarity_witness(machine)
    if witness is not None:
        raise NotUnifilar(witness)
    mats = machine.matrices
    h = 0.0
    for x in range(machine.n_symbols):
        tx = mats[x]
        with np.errstate(divide="ignore", invalid="ignore"):
            contrib = np.where(tx > 0, tx * np.log2(np.where(tx > 0, tx, 1.0)), 0.0)
        h -= float(machine.stationary @ contrib.sum(axis=1))
    return h


def statistical_complexity(machine: LabeledHMM) -> float:
    """Shannon entropy of the stationary state distribution, in bits.

    Meaningful as the process's stored memory only when the machine is a
    minimal unifilar presentation; unifilarity is enforced, probabilistic
    distinctness of states is trusted to the caller.
    """
    witness = unifilarity_witness(machine)
    if witness is not None:
        raise NotUnifilar(witness)
    return shannon_entropy_bits(machine.stationary)


def sample_sequence(machine: LabeledHMM, length: int, seed: int,
                    return_states: bool = False):
    """Sample `length` symbols (as alphabet indices), bit-reproducible per seed.

    The initial state is drawn from pi; each step draws a (symbol,
    successor) pair from the current state's row distribution.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    n, m = machine.n_states, machine.n_symbols
    flat = machine.matrices.transpose(1, 0, 2).reshape(n, m * n)
    cum_rows = np.cumsum(flat, axis=1)
    last_idx = np.empty(n, dtype=np.int64)
    for i in range(n):
        positive = np.nonzero(flat[i] > 0)[0]
        last_idx[i] = positive[-1]
    init_cum = np.cumsum(machine.stationary)
    init_last = int(np.nonzero(machine.stationary > 0)[0][-1])

    uniforms = np.random.default_rng(seed).random(length + 1)
    symbols, states = _kernels.sample_path(
        cum_rows, last_idx, init_cum, init_last, uniforms, n
    )
    if return_states:
        return symbols, states[:-1]
    return symbols


@dataclass(frozen=True)
class BlockEntropyEstimate:
    """Plug-in block entropies H(l) and their increments h(l) = H(l) - H(l-1)."""

    per_length: tuple  # entries (l, H(l) bits, h(l) bits/symbol)
    sample_length: int
    alphabet_size: int

    def entropy_rate(self) -> float:
        """Increment at the largest block length; the oracle's rate estimate."""
        return self.per_length[-1][2]


def block_entropy_estimate(sequence, l_max: int,
                           alphabet_size: Optional[int] = None) -> BlockEntropyEstimate:
    """Empirical block entropies of a symbol sequence up to length l_max.

    Counts all overlapping windows with the maximum-likelihood (plug-in)
    estimator; no bias correction is applied, so use generous sample sizes
    (a warning fires below 100 * M^l_max symbols).  This estimator is kept
    independent of the machine analysis paths on purpose: it sees only the
    sequence.
    """
    seq = np.asarray(sequence, dtype=np.int64)
    if seq.ndim != 1 or seq.size < 2:
        raise ValueError("need a 1-D sequence with at least 2 symbols")
    m = int(alphabet_size) if alphabet_size else int(seq.max()) + 1
    if l_max < 1:
        raise ValueError("l_max must be >= 1")
    if m ** l_max > MAX_BLOCK_BINS:
        raise LMaxTooLarge(
            f"{m}^{l_max} blocks exceed the counting budget of {MAX_BLOCK_BINS}"
        )
    if seq.size < 100 * m ** l_max:
        warnings.warn(
            f"sequence length {seq.size} is small for blocks of length {l_max} "
            f"over {m} symbols; entropies will be noisy",
            stacklevel=2,
        )

    rows = []
    h_prev = 0.0
    codes = seq.copy()
    for ell in range(1, l_max + 1):
        if ell > 1:
            codes = codes[:-1] * m + seq[ell - 1:]
        counts = np.bincount(codes, minlength=m ** ell)
        p = counts[counts > 0] / codes.size
        h_block = float(-(p * np.log2(p)).sum())
        rows.append((ell, h_block, h_block - h_prev))
        h_prev = h_block
    return BlockEntropyEstimate(
        per_length=tuple(rows), sample_length=int(seq.size), alphabet_size=m
    )
