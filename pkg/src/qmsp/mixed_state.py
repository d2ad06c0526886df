"""Mixed-state (observer belief) dynamics over a machine's state simplex.

Seeing symbols updates an observer's distribution over hidden states:
eta' = eta T^(x) / (eta T^(x) 1).  The update family is an iterated function
system on the simplex; its trajectories estimate the process entropy rate,
its closure from the stationary prior enumerates the predictive-state
presentation, and its point clouds are what the dimension estimators consume.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from . import _kernels
from .errors import ZeroProbabilitySymbol, ZeroProbabilityWord
from .hmm import LabeledHMM, shannon_entropy_bits

PROB_FLOOR = 1e-300      # below this a branch is treated as structurally forbidden
NEGATIVE_CLAMP = -1e-15  # roundoff negatives this small are zeroed
SIMPLEX_TOL = 1e-12

MIN_TRAJECTORY = 1_000

# planar embedding of the 3-state simplex: vertices of a unit-side triangle
TRIANGLE_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.8660254]])


def tangent_basis(n: int) -> np.ndarray:
    """Orthonormal basis (columns) of the simplex tangent space {v: sum v = 0}.

    The dynamics preserve normalization, so perturbations live in this
    (n-1)-dimensional hyperplane; exponent tracking works in its coordinates.
    """
    ones = np.ones((n, 1))
    q, _ = np.linalg.qr(np.hstack([ones, np.eye(n)[:, : n - 1]]))
    basis = np.ascontiguousarray(q[:, 1:])
    return basis


def symbol_distribution(eta, machine: LabeledHMM) -> np.ndarray:
    """Pr(x|eta) = eta . T^(x) . 1 for every symbol x."""
    eta = np.asarray(eta, dtype=float)
    dist = machine.row_sums @ eta
    return dist


def propagate(eta, symbol, machine: LabeledHMM) -> np.ndarray:
    """Advance the mixed state on one observed symbol, renormalized in L1.

    Raises ZeroProbabilitySymbol when the machine forbids the symbol from
    this belief state.
    """
    eta = np.asarray(eta, dtype=float)
    x = machine.symbol_index(symbol)
    mass = float(eta @ machine.row_sums[x])
    if mass <= PROB_FLOOR:
        raise ZeroProbabilitySymbol(
            f"symbol {machine.alphabet[x]!r} has zero probability here"
        )
    nxt = (eta @ machine.matrices[x]) / mass
    np.clip(nxt, 0.0, None, out=nxt)
    return nxt / nxt.sum()


def mixed_state_of_word(machine: LabeledHMM, word: Sequence) -> np.ndarray:
    """Belief state after observing `word` from the stationary prior.

    The empty word returns pi.  Raises ZeroProbabilityWord on forbidden words.
    """
    eta = machine.stationary.copy()
    for pos, symbol in enumerate(word):
        try:
            eta = propagate(eta, symbol, machine)
        except ZeroProbabilitySymbol as exc:
            raise ZeroProbabilityWord(
                f"word forbidden at position {pos} ({symbol!r}): {exc}"
            ) from exc
    return eta


def check_simplex(eta, tol: float = SIMPLEX_TOL) -> None:
    """Assert the mixed-state invariants (used by tests and debug paths)."""
    eta = np.asarray(eta, dtype=float)
    if eta.min() < NEGATIVE_CLAMP:
        raise AssertionError(f"negative probability {eta.min()} in mixed state")
    if abs(eta.sum() - 1.0) > tol:
        raise AssertionError(f"mixed state sums to {eta.sum()}, not 1")


@dataclass(frozen=True)
class TrajectoryEstimate:
    """Trajectory-averaged entropy rate with batch-means uncertainty."""

    entropy_rate: float          # bits per symbol
    stderr: float                # batch-means standard error
    length: int                  # post-burn-in iterates
    burn_in: int
    point_cloud: Optional[np.ndarray] = None  # decimated mixed states, (K, N)


def _batch_stats(values: np.ndarray):
    """Mean and batch-means stderr with ~sqrt(n) batches (0 if degenerate)."""
    mean = float(values.mean())
    n_batches = int(np.sqrt(values.shape[0]))
    if n_batches < 2:
        return mean, 0.0
    size = values.shape[0] // n_batches
    batch_means = values[: n_batches * size].reshape(n_batches, size).mean(axis=1)
    return mean, float(batch_means.std(ddof=1) / np.sqrt(n_batches))


def run_simplex_pass(machine: LabeledHMM, length: int, seed: int,
                     burn_in: int = 1_000, decimation: int = 1,
                     store_cloud: bool = False, track_lce: bool = False,
                     reorth_every: int = 1):
    """Single kernel pass; returns raw (entropies, cloud, lce_logs) arrays.

    Shared by the entropy estimator, the exponent estimator, and the sweep
    (which wants all outputs from one pass).  Symbols are sampled from
    Pr(.|eta_t), so one uniform stream drives everything and identical seeds
    give identical trajectories across the three callers.
    """
    if length < MIN_TRAJECTORY:
        raise ValueError(f"length must be >= {MIN_TRAJECTORY}")
    if burn_in < 0 or decimation < 1 or reorth_every < 1:
        raise ValueError("burn_in must be >= 0, decimation and reorth_every >= 1")
    uniforms = np.random.default_rng(seed).random(burn_in + length)
    basis = tangent_basis(machine.n_states)
    return _kernels.mixed_state_pass(
        machine.matrices, machine.row_sums, machine.stationary, basis,
        uniforms, burn_in, decimation, store_cloud, track_lce, reorth_every,
    )


def iterate_trajectory(machine: LabeledHMM, length: int, seed: int,
                       burn_in: int = 1_000, decimation: int = 1,
                       store_cloud: bool = False) -> TrajectoryEstimate:
    """Estimate the entropy rate by averaging symbol uncertainty along one run.

    Starting from eta_0 = pi, each step accumulates
    -sum_x Pr(x|eta_t) log2 Pr(x|eta_t), samples the next symbol from
    Pr(.|eta_t), and renormalizes the update.  Results are bit-reproducible
    per (machine, length, seed); the optional cloud keeps every
    `decimation`-th post-burn-in mixed state.
    """
    entropies, cloud, _ = run_simplex_pass(
        machine, length, seed, burn_in, decimation, store_cloud, False, 1
    )
    rate, stderr = _batch_stats(entropies)
    return TrajectoryEstimate(
        entropy_rate=rate,
        stderr=stderr,
        length=length,
        burn_in=burn_in,
        point_cloud=cloud if store_cloud else None,
    )


@dataclass(frozen=True)
class MixedStatePresentation:
    """Finite closure of the belief dynamic: a unifilar machine over beliefs.

    mixed_states holds one representative per merged belief; successors[s, x]
    is the state reached from s on symbol x (-1 when forbidden) with
    probability symbol_probs[s, x].  Recurrent states carry the stationary
    weights; transients have weight 0.
    """

    mixed_states: np.ndarray       # (S, N)
    successors: np.ndarray         # (S, M) int
    symbol_probs: np.ndarray       # (S, M)
    recurrent: np.ndarray          # (S,) bool
    state_probabilities: np.ndarray  # (S,) stationary weights over recurrent states
    merge_tol: float

    @property
    def n_states(self) -> int:
        return self.mixed_states.shape[0]

    @property
    def n_recurrent(self) -> int:
        return int(self.recurrent.sum())

    @property
    def entropy_rate(self) -> float:
        """Exact rate of the closed presentation (it is unifilar by construction)."""
        weights = self.state_probabilities[self.recurrent]
        probs = self.symbol_probs[self.recurrent]
        h = 0.0
        for w, row in zip(weights, probs):
            h += w * shannon_entropy_bits(row)
        return float(h)

    @property
    def statistical_complexity(self) -> float:
        """Shannon entropy of the recurrent-state weights, in bits."""
        return shannon_entropy_bits(self.state_probabilities[self.recurrent])


@dataclass(frozen=True)
class EnumerationBudgetExceeded:
    """Closure did not terminate within the state budget.

    Expected (not an error) for machines whose belief set is uncountable;
    the frontier size at exhaustion is reported for diagnostics.
    """

    states_enumerated: int
    frontier_size: int
    max_states: int
    merge_tol: float


def enumerate_msp(machine: LabeledHMM, merge_tol: float = 1e-9,
                  max_states: int = 10_000
                  ) -> Union[MixedStatePresentation, EnumerationBudgetExceeded]:
    """Breadth-first closure of the belief dynamic from eta_0 = pi.

    New beliefs within `merge_tol` (L1) of an existing representative are
    merged.  On closure the recurrent class is extracted and its stationary
    weights computed; on budget exhaustion an EnumerationBudgetExceeded
    summary is returned instead.
    """
    if merge_tol <= 0:
        raise ValueError("merge_tol must be positive")
    n = machine.n_states
    n_sym = machine.n_symbols
    mats = machine.matrices
    row_sums = machine.row_sums

    # Cell hashing: points within L1 <= merge_tol differ by at most one cell
    # per coordinate, so probing the 3^n neighborhood finds every candidate.
    # Beyond 6 dimensions fall back to same-cell merging only.
    if n <= 6:
        offsets = list(itertools.product((-1, 0, 1), repeat=n))
    else:
        offsets = [tuple([0] * n)]

    states = []
    cells = {}

    def cell_of(vec):
        return tuple(int(c // merge_tol) for c in vec)

    def lookup(vec):
        base = cell_of(vec)
        for off in offsets:
            idx = cells.get(tuple(b + o for b, o in zip(base, off)))
            if idx is not None and float(np.abs(states[idx] - vec).sum()) <= merge_tol:
                return idx
        return None

    def insert(vec):
        states.append(vec)
        cells[cell_of(vec)] = len(states) - 1
        return len(states) - 1

    insert(machine.stationary.copy())
    successors = [[-1] * n_sym]
    probs = [[0.0] * n_sym]
    frontier = [0]
    while frontier:
        next_frontier = []
        for si in frontier:
            eta = states[si]
            for x in range(n_sym):
                mass = float(eta @ row_sums[x])
                if mass <= PROB_FLOOR:
                    continue
                nxt = (eta @ mats[x]) / mass
                np.clip(nxt, 0.0, None, out=nxt)
                nxt /= nxt.sum()
                j = lookup(nxt)
                if j is None:
                    if len(states) >= max_states:
                        return EnumerationBudgetExceeded(
                            states_enumerated=len(states),
                            frontier_size=len(next_frontier) + len(frontier),
                            max_states=max_states,
                            merge_tol=merge_tol,
                        )
                    j = insert(nxt)
                    successors.append([-1] * n_sym)
                    probs.append([0.0] * n_sym)
                    next_frontier.append(j)
                successors[si][x] = j
                probs[si][x] = mass
        frontier = next_frontier

    successors = np.asarray(successors, dtype=np.int64)
    probs = np.asarray(probs, dtype=float)
    recurrent, weights = _recurrent_weights(successors, probs)
    return MixedStatePresentation(
        mixed_states=np.vstack(states),
        successors=successors,
        symbol_probs=probs,
        recurrent=recurrent,
        state_probabilities=weights,
        merge_tol=merge_tol,
    )


def _recurrent_weights(successors, probs):
    """Recurrent class (terminal strongly connected components) and weights."""
    n_states = successors.shape[0]
    rows, cols, vals = [], [], []
    for i in range(n_states):
        for x in range(successors.shape[1]):
            j = successors[i, x]
            if j >= 0 and probs[i, x] > 0:
                rows.append(i)
                cols.append(j)
                vals.append(probs[i, x])
    graph = sp.csr_matrix((vals, (rows, cols)), shape=(n_states, n_states))
    n_comp, labels = csgraph.connected_components(graph, connection="strong")
    terminal = set(range(n_comp))
    for i, j in zip(rows, cols):
        if labels[i] != labels[j]:
            terminal.discard(labels[i])
    # The chain is driven from a single prior, so exactly one terminal class
    # is reachable; multiple would mean the merge tolerance glued distinct
    # dynamics together.
    if len(terminal) != 1:
        raise RuntimeError(
            f"belief closure produced {len(terminal)} recurrent classes; "
            "retry with a tighter merge tolerance"
        )
    recurrent = np.array([labels[i] in terminal for i in range(n_states)])
    idx = np.nonzero(recurrent)[0]
    w = graph[idx][:, idx].toarray()
    weights = np.zeros(n_states)
    weights[idx] = _stationary_of(w)
    return recurrent, weights


def _stationary_of(w):
    n = w.shape[0]
    if n == 1:
        return np.ones(1)
    if n <= 2000:
        a = w.T - np.eye(n)
        a[-1, :] = 1.0
        b = np.zeros(n)
        b[-1] = 1.0
        pi = np.linalg.solve(a, b)
    else:
        ws = sp.csr_matrix(w)
        pi = np.full(n, 1.0 / n)
        for _ in range(1_000_000):
            nxt = pi @ ws
            nxt /= nxt.sum()
            if np.abs(nxt - pi).sum() < 1e-13:
                break
            pi = nxt
        pi = nxt
    pi = np.maximum(pi, 0.0)
    return pi / pi.sum()


def msp_tolerance_sweep(machine: LabeledHMM, tolerances=(1e-6, 1e-8, 1e-9, 1e-10),
                        max_states: int = 10_000):
    """Run the closure at several merge tolerances; returns [(tol, outcome)].

    Closure can be tolerance-sensitive near the countable/uncountable
    boundary, so reported state counts should be read alongside this sweep.
    """
    return [(tol, enumerate_msp(machine, tol, max_states)) for tol in tolerances]


def embed_points(points: np.ndarray) -> np.ndarray:
    """Planar embedding for 3-state clouds, coordinate projection otherwise.

    For N=3 the barycentric embedding uses triangle vertices (0,0), (1,0),
    (0.5, 0.8660254); other N drop the last coordinate.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("expected a (K, N) point array")
    if pts.shape[1] == 3:
        return pts @ TRIANGLE_VERTICES
    return pts[:, :-1]


def write_point_cloud(path, points: np.ndarray) -> None:
    """CSV artifact: columns p_1..p_N, plus x2d,y2d for 3-state clouds."""
    pts = np.asarray(points, dtype=float)
    n = pts.shape[1]
    header = ",".join(f"p_{i + 1}" for i in range(n))
    data = pts
    if n == 3:
        header += ",x2d,y2d"
        data = np.hstack([pts, embed_points(pts)])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=header, comments="")
