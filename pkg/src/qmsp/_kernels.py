"""Compiled inner loops for trajectory iteration, exponent tracking, and sampling.

Everything here is deterministic given the uniforms array handed in by the
caller; no kernel owns RNG state, so runs are reproducible regardless of
threading or process layout.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def mixed_state_pass(mats, rowsums, eta0, basis, uniforms, burn_in, decimation,
                     store_cloud, track_lce, reorth_every):
    """One pass of the mixed-state dynamic driven by pre-drawn uniforms.

    mats: (M, N, N) labeled transition matrices, rowsums: (M, N) their row
    sums, eta0: (N,) start distribution, basis: (N, N-1) orthonormal tangent
    basis of the simplex.  Per step: compute the symbol distribution
    Pr(x|eta) = eta . T^x . 1, record its entropy (post burn-in), sample the
    next symbol from it, optionally push a tangent frame through the update
    Jacobian (QR every `reorth_every` steps), then renormalize eta.

    Returns (entropies, cloud, lce_logs): per-step symbol entropies in bits,
    every `decimation`-th post-burn-in eta, and per-reorthonormalization
    log2 diagonal magnitudes of the triangular factor.
    """
    n_sym, n, _ = mats.shape
    m = basis.shape[1]
    total_steps = uniforms.shape[0]
    length = total_steps - burn_in

    ent = np.empty(length)
    n_cloud = (length + decimation - 1) // decimation if store_cloud else 0
    cloud = np.empty((n_cloud, n))
    max_events = total_steps // reorth_every if track_lce else 0
    lce_logs = np.empty((max_events, m))

    probs = np.empty(n_sym)
    eta = eta0.copy()
    eta_t = np.empty(n)      # eta . T^x before normalization
    jac = np.empty((n, n))
    frame = np.eye(m)
    work_nf = np.empty((n, m))
    work_nv = np.empty((n, m))
    ci = 0
    ev = 0

    for t in range(total_steps):
        # symbol distribution from the current mixed state
        for x in range(n_sym):
            s = 0.0
            for i in range(n):
                s += eta[i] * rowsums[x, i]
            probs[x] = s

        if t >= burn_in:
            k = t - burn_in
            h = 0.0
            for x in range(n_sym):
                if probs[x] > 0.0:
                    h -= probs[x] * np.log2(probs[x])
            ent[k] = h
            if store_cloud and k % decimation == 0:
                for i in range(n):
                    cloud[ci, i] = eta[i]
                ci += 1

        # sample the next symbol
        u = uniforms[t]
        xs = -1
        acc = 0.0
        last_pos = 0
        for x in range(n_sym):
            if probs[x] > 0.0:
                last_pos = x
            acc += probs[x]
            if u < acc:
                xs = x
                break
        if xs == -1:
            xs = last_pos
        s = probs[xs]

        for j in range(n):
            v = 0.0
            for i in range(n):
                v += eta[i] * mats[xs, i, j]
            eta_t[j] = v

        if track_lce:
            # update Jacobian of eta -> eta T^x / (eta T^x 1), row convention
            inv_s = 1.0 / s
            inv_s2 = inv_s * inv_s
            for i in range(n):
                ri = rowsums[xs, i]
                for j in range(n):
                    jac[i, j] = mats[xs, i, j] * inv_s - ri * eta_t[j] * inv_s2
            # tangent frame in reduced coordinates: frame <- B^T J^T B frame
            for i in range(n):
                for b in range(m):
                    a = 0.0
                    for c in range(m):
                        a += basis[i, c] * frame[c, b]
                    work_nf[i, b] = a
            for k2 in range(n):
                for b in range(m):
                    a = 0.0
                    for i in range(n):
                        a += jac[i, k2] * work_nf[i, b]
                    work_nv[k2, b] = a
            for a2 in range(m):
                for b in range(m):
                    a = 0.0
                    for i in range(n):
                        a += basis[i, a2] * work_nv[i, b]
                    frame[a2, b] = a

            if (t + 1) % reorth_every == 0:
                record = t + 1 - reorth_every >= burn_in
                # modified Gram-Schmidt; diagonal magnitudes are the stretches
                for c in range(m):
                    for p in range(c):
                        dot = 0.0
                        for r in range(m):
                            dot += frame[r, p] * frame[r, c]
                        for r in range(m):
                            frame[r, c] -= dot * frame[r, p]
                    nrm = 0.0
                    for r in range(m):
                        nrm += frame[r, c] * frame[r, c]
                    nrm = np.sqrt(nrm)
                    if record:
                        lce_logs[ev, c] = np.log2(nrm) if nrm > 0.0 else -1e30
                    if nrm > 0.0:
                        for r in range(m):
                            frame[r, c] /= nrm
                if record:
                    ev += 1

        # renormalized update, clamping tiny negative roundoff
        tot = 0.0
        for j in range(n):
            v = eta_t[j] / s
            if v < 0.0:
                v = 0.0
            eta_t[j] = v
            tot += v
        for j in range(n):
            eta[j] = eta_t[j] / tot

    return ent, cloud, lce_logs[:ev]


@njit(cache=True, nogil=True)
def sample_path(cum_rows, last_idx, init_cum, init_last, uniforms, n_states):
    """Sample a hidden path and its emitted symbols from pre-drawn uniforms.

    cum_rows: (N, M*N) per-state cumulative probabilities over flattened
    (symbol, successor) cells; last_idx: per-state index of the last
    positive-mass cell (guards u ~ 1 roundoff); init_cum: cumulative initial
    distribution with init_last its last positive-mass index.  uniforms[0]
    picks the initial state, one uniform per step afterwards.
    """
    n_steps = uniforms.shape[0] - 1
    symbols = np.empty(n_steps, np.int64)
    states = np.empty(n_steps + 1, np.int64)

    s = np.searchsorted(init_cum, uniforms[0], side="right")
    if s > init_last:
        s = init_last
    states[0] = s
    for t in range(n_steps):
        row = cum_rows[s]
        k = np.searchsorted(row, uniforms[t + 1], side="right")
        if k > last_idx[s]:
            k = last_idx[s]
        symbols[t] = k // n_states
        s = k % n_states
        states[t + 1] = s
    return symbols, states
