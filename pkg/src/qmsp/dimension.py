"""Contraction spectrum and fractal dimension of the belief dynamics.

The per-symbol belief updates form a contractive iterated function system;
this module measures its Lyapunov exponent spectrum (QR method in the
simplex tangent space), converts spectrum plus entropy rate into the
Lyapunov bound on the attractor's dimension, and estimates the dimension
directly from trajectory point clouds on a box grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateCloud, EmptySpectrum, ZeroProbabilitySymbol
from .hmm import LabeledHMM
from .mixed_state import (
    PROB_FLOOR,
    _batch_stats,
    embed_points,
    run_simplex_pass,
)

MIN_LCE_LENGTH = 10_000

# exponents this negative are numerically indistinguishable from -inf
LCE_FLOOR = -50.0

DEFAULT_EPS_GRID = 2.0 ** -np.arange(3, 11)


def ifs_jacobian(eta, symbol, machine: LabeledHMM) -> np.ndarray:
    """Derivative of eta -> eta T^(x) / (eta T^(x) 1) in row convention.

    With s = eta T^(x) 1:  J_ij = T^(x)_ij / s - (T^(x) 1)_i (eta T^(x))_j / s^2,
    so a row perturbation advances as v' = v J.  Rows of J sum to zero: the
    update preserves normalization, perturbations stay in the tangent space.
    """
    eta = np.asarray(eta, dtype=float)
    x = machine.symbol_index(symbol)
    tx = machine.matrices[x]
    row_mass = machine.row_sums[x]
    s = float(eta @ row_mass)
    if s <= PROB_FLOOR:
        raise ZeroProbabilitySymbol(
            f"symbol {machine.alphabet[x]!r} has zero probability here"
        )
    eta_t = eta @ tx
    return tx / s - np.outer(row_mass, eta_t) / (s * s)


@dataclass(frozen=True)
class LceEstimate:
    """Lyapunov exponents of the belief map, bits per symbol, sorted descending."""

    exponents: np.ndarray
    stderr: np.ndarray
    length: int
    reorth_every: int
    floor_flags: np.ndarray  # True where the exponent sits below the -50 floor

    def __iter__(self):
        return iter(self.exponents)


def lce_spectrum(machine: LabeledHMM, length: int, seed: int,
                 reorth_every: int = 1, burn_in: int = 1_000) -> LceEstimate:
    """Exponent spectrum by pushing a tangent frame along one trajectory.

    Same sampling contract as iterate_trajectory (identical seed, identical
    trajectory).  The frame lives in the (N-1)-dimensional tangent space of
    the simplex; QR re-orthonormalization every `reorth_every` steps yields
    the time-averaged log2 stretches.  Exponent uncertainty is batch-means.
    """
    if length < MIN_LCE_LENGTH:
        raise ValueError(f"length must be >= {MIN_LCE_LENGTH}")
    _, _, logs = run_simplex_pass(
        machine, length, seed, burn_in=burn_in, store_cloud=False,
        track_lce=True, reorth_every=reorth_every,
    )
    return _spectrum_from_logs(logs, length, reorth_every)


def _spectrum_from_logs(logs: np.ndarray, length: int,
                        reorth_every: int) -> LceEstimate:
    if logs.shape[1] == 0:
        return LceEstimate(
            exponents=np.empty(0), stderr=np.empty(0), length=length,
            reorth_every=reorth_every, floor_flags=np.empty(0, dtype=bool),
        )
    per_step = logs / reorth_every
    means = per_step.mean(axis=0)
    order = np.argsort(means)[::-1]
    exponents = means[order]
    stderr = np.empty_like(exponents)
    for pos, col in enumerate(order):
        _, stderr[pos] = _batch_stats(per_step[:, col])
    return LceEstimate(
        exponents=exponents,
        stderr=stderr,
        length=length,
        reorth_every=reorth_every,
        floor_flags=exponents < LCE_FLOOR,
    )


def lyapunov_dimension(entropy_rate: float, exponents, n_states: int):
    """Dimension bound (k, d) from entropy rate and the contraction spectrum.

    Entropy enters as the expansion budget: with exponents sorted descending,
    k is the greatest index keeping h + sum_{i<=k} lambda_i positive and

        d = k + (h + sum_{i<=k} lambda_i) / |lambda_{k+1}|.

    k = 0 reduces to h / |lambda_1|; if the budget survives the whole
    spectrum the result is capped at the simplex dimension N-1.  The result
    is continuous and nondecreasing in h, and is clamped to [0, N-1].
    """
    lams = np.asarray(list(exponents), dtype=float)
    if lams.size == 0:
        raise EmptySpectrum("no exponents; machine has a single state")
    if not np.all(np.isfinite(lams)):
        raise ValueError("exponents must be finite")
    lams = np.sort(lams)[::-1]

    if entropy_rate <= 0.0:
        return 0, 0.0
    prefix = entropy_rate
    k = 0
    for lam in lams:
        if prefix + lam > 0:
            k += 1
            prefix += lam
        else:
            break
    cap = float(n_states - 1)
    if k == lams.size:
        d = cap
    else:
        denom = abs(lams[k])
        d = cap if denom == 0.0 else k + prefix / denom
    return k, float(min(max(d, 0.0), cap))


@dataclass(frozen=True)
class BoxCountResult:
    """Grid-based dimension fit with per-scale diagnostics.

    `dimension` is the slope of the box-occupancy Shannon entropy H_eps
    against log2(1/eps) -- the coarse-grained-entropy scaling that defines
    the dimension being estimated.  The raw box-count slope is kept
    alongside: it weighs rarely-visited boxes equally and runs higher on
    strongly nonuniform clouds.
    """

    dimension: float
    count_slope: float
    eps: np.ndarray
    counts: np.ndarray
    entropies: np.ndarray  # H_eps in bits per scale


def box_counting_dimension(points, eps_grid=None) -> BoxCountResult:
    """Dimension of a point cloud from boxes anchored at the embedding origin.

    Points are mixed states (K, N); 3-state clouds are measured in the
    planar triangle embedding, others in the (N-1)-D coordinate projection.
    No box-offset averaging is done; per-scale counts and entropies are
    returned so fit quality can be inspected.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise DegenerateCloud("empty point cloud")
    eps = np.asarray(DEFAULT_EPS_GRID if eps_grid is None else eps_grid, dtype=float)
    if eps.size < 2:
        raise ValueError("need at least two scales to fit a slope")
    emb = embed_points(pts)

    counts = np.empty(eps.size, dtype=np.int64)
    entropies = np.empty(eps.size)
    for idx, e in enumerate(eps):
        occupancy = _box_occupancy(emb, e)
        counts[idx] = occupancy.size
        p = occupancy / occupancy.sum()
        entropies[idx] = float(-(p * np.log2(p)).sum())

    x = np.log2(1.0 / eps)
    count_slope = float(np.polyfit(x, np.log2(counts), 1)[0])
    dimension = float(np.polyfit(x, entropies, 1)[0])
    return BoxCountResult(
        dimension=dimension,
        count_slope=count_slope,
        eps=eps,
        counts=counts,
        entropies=entropies,
    )


def _box_occupancy(emb: np.ndarray, eps: float) -> np.ndarray:
    """Occupancy counts of nonempty boxes at scale eps (origin-anchored)."""
    idx = np.floor(emb / eps).astype(np.int64)
    dims = emb.shape[1]
    if dims == 1:
        keys = idx[:, 0]
    elif dims <= 3:
        base = np.int64(1) << np.int64(20)
        keys = idx[:, 0]
        for d in range(1, dims):
            keys = keys * base + idx[:, d]
    else:
        _, counts = np.unique(idx, axis=0, return_counts=True)
        return counts
    _, counts = np.unique(keys, return_counts=True)
    return counts


def open_set_overlap_flag(machine: LabeledHMM, cloud: np.ndarray,
                          radius: float = 1e-3, fraction: float = 0.01,
                          max_points: int = 20_000) -> bool:
    """Heuristic: do two symbol maps send the cloud to overlapping images?

    Pushes the cloud through each symbol's update map and checks whether a
    meaningful fraction of one image lies within `radius` of another (in the
    planar embedding).  Overlap means the dimension bound from the exponent
    spectrum can exceed the true dimension.  Advisory only.
    """
    pts = np.asarray(cloud, dtype=float)
    if pts.shape[0] > max_points:
        stride = pts.shape[0] // max_points
        pts = pts[::stride]
    images = []
    for x in range(machine.n_symbols):
        mass = pts @ machine.row_sums[x]
        ok = mass > PROB_FLOOR
        if not np.any(ok):
            continue
        img = (pts[ok] @ machine.matrices[x]) / mass[ok, None]
        images.append(embed_points(np.clip(img, 0.0, None)))
    for a in range(len(images)):
        tree = cKDTree(images[a])
        for b in range(len(images)):
            if a == b:
                continue
            dist, _ = tree.query(images[b], k=1)
            if (dist < radius).mean() > fraction:
                return True
    return False


@dataclass(frozen=True)
class DimensionReport:
    """Entropy rate, exponent spectrum, and the dimension estimates in one row."""

    entropy_rate: float
    entropy_stderr: float
    lce: LceEstimate
    k: int
    d_lce: float
    d_bc: Optional[float] = None
    box: Optional[BoxCountResult] = None
    open_set_flag: Optional[bool] = None


def dimension_report(machine: LabeledHMM, length: int, seed: int,
                     burn_in: int = 1_000, reorth_every: int = 1,
                     compute_bc: bool = False, decimation: int = 1,
                     eps_grid=None, check_open_set: bool = True,
                     keep_cloud: bool = False):
    """One-pass analysis: entropy rate, spectrum, dimension bound, optional d_bc.

    Runs a single trajectory with exponent tracking (and cloud storage when
    the box estimate is requested), then assembles a DimensionReport.
    Returns (report, cloud); cloud is None unless requested/kept.
    """
    store_cloud = compute_bc or keep_cloud
    entropies, cloud, logs = run_simplex_pass(
        machine, length, seed, burn_in=burn_in, decimation=decimation,
        store_cloud=store_cloud, track_lce=True, reorth_every=reorth_every,
    )
    rate, stderr = _batch_stats(entropies)
    lce = _spectrum_from_logs(logs, length, reorth_every)
    k, d_lce = lyapunov_dimension(rate, lce.exponents, machine.n_states)

    box = None
    d_bc = None
    flag = None
    if compute_bc:
        box = box_counting_dimension(cloud, eps_grid)
        d_bc = box.dimension
    if check_open_set and store_cloud:
        flag = open_set_overlap_flag(machine, cloud)
    report = DimensionReport(
        entropy_rate=rate,
        entropy_stderr=stderr,
        lce=lce,
        k=k,
        d_lce=d_lce,
        d_bc=d_bc,
        box=box,
        open_set_flag=flag,
    )
    return report, (cloud if store_cloud else None)
