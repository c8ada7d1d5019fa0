"""Compiled hot-path kernels for the tree sampler.

The sampler keeps each tree's rows grouped into contiguous per-leaf blocks
(`row_order` + `starts`), with the basis matrix `phi` cached in the same
layout.  Every kernel below works on that layout so a whole tree update
costs a fixed handful of compiled calls plus O(n) work, independent of the
number of leaves.

Status codes: 0 = clean, 1 = factorization needed a 1e-12 diagonal jitter,
2 = factorization failed (caller rejects the proposal).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# Activation codes shared with ridge.ACTIVATION_CODES.
ACT_CONSTANT = 0
ACT_COSINE = 1
ACT_TANH = 2
ACT_RELU = 3

JITTER = 1e-12


@njit(cache=True, inline="always")
def _act(code, t):
    if code == ACT_COSINE:
        return math.cos(t)
    if code == ACT_TANH:
        return math.tanh(t)
    if code == ACT_RELU:
        return t if t > 0.0 else 0.0
    return 1.0


@njit(cache=True)
def _basis_rows(z, row_order, lo, hi, omega, offsets, act, out, out_lo):
    """Fill out[out_lo + i - lo] with the basis row of z[row_order[i]]."""
    q, d = omega.shape
    for i in range(lo, hi):
        zi = row_order[i]
        for k in range(d):
            s = offsets[k]
            for c in range(q):
                s += z[zi, c] * omega[c, k]
            out[out_lo + i - lo, k] = _act(act, s)


@njit(cache=True)
def _chol_in_place(a):
    """Lower Cholesky of an SPD matrix in place; False on pivot failure.
    The strict upper triangle is left untouched and must be ignored."""
    d = a.shape[0]
    for j in range(d):
        s = a[j, j]
        for k in range(j):
            s -= a[j, k] * a[j, k]
        if s <= 0.0:
            return False
        a[j, j] = math.sqrt(s)
        for i in range(j + 1, d):
            t = a[i, j]
            for k in range(j):
                t -= a[i, k] * a[j, k]
            a[i, j] = t / a[j, j]
    return True


@njit(cache=True)
def _factor_precision(gram, sigma2, tau, chol):
    """chol <- lower factor of P = gram/sigma2 + I/tau^2; returns status."""
    d = gram.shape[0]
    inv_s2 = 1.0 / sigma2
    inv_t2 = 1.0 / (tau * tau)
    for i in range(d):
        for j in range(d):
            chol[i, j] = gram[i, j] * inv_s2
        chol[i, i] += inv_t2
    if _chol_in_place(chol):
        return 0
    for i in range(d):
        for j in range(d):
            chol[i, j] = gram[i, j] * inv_s2
        chol[i, i] += inv_t2 + JITTER
    if _chol_in_place(chol):
        return 1
    return 2


@njit(cache=True, inline="always")
def _forward_solve(chol, rhs, out):
    d = chol.shape[0]
    for i in range(d):
        s = rhs[i]
        for k in range(i):
            s -= chol[i, k] * out[k]
        out[i] = s / chol[i, i]


@njit(cache=True, inline="always")
def _back_solve_t(chol, rhs, out):
    """Solve chol' out = rhs (chol lower triangular)."""
    d = chol.shape[0]
    for i in range(d - 1, -1, -1):
        s = rhs[i]
        for k in range(i + 1, d):
            s -= chol[k, i] * out[k]
        out[i] = s / chol[i, i]


@njit(cache=True)
def _lml_from_factor(chol, lin, sigma2, tau, work):
    """-D log tau - 0.5 log|P| + 0.5 Theta' P^-1 Theta given the factor."""
    d = chol.shape[0]
    inv_s2 = 1.0 / sigma2
    logdet = 0.0
    for i in range(d):
        logdet += math.log(chol[i, i])
    logdet *= 2.0
    for i in range(d):
        work[i] = lin[i] * inv_s2
    tmp = np.empty(d)
    _forward_solve(chol, work, tmp)
    quad = 0.0
    for i in range(d):
        quad += tmp[i] * tmp[i]
    return -d * math.log(tau) - 0.5 * logdet + 0.5 * quad


@njit(cache=True)
def _block_moments(phi, lo, hi, resid, row_order, gram, lin):
    """gram <- Phi'Phi and lin <- Phi'r over one contiguous block."""
    d = phi.shape[1]
    for i in range(d):
        lin[i] = 0.0
        for j in range(d):
            gram[i, j] = 0.0
    for i in range(lo, hi):
        ri = resid[row_order[i]]
        for a in range(d):
            va = phi[i, a]
            lin[a] += va * ri
            for b in range(a, d):
                gram[a, b] += va * phi[i, b]
    for a in range(d):
        for b in range(a + 1, d):
            gram[b, a] = gram[a, b]


@njit(cache=True)
def _block_lml(phi, lo, hi, resid, row_order, sigma2, tau):
    d = phi.shape[1]
    gram = np.empty((d, d))
    lin = np.empty(d)
    chol = np.empty((d, d))
    work = np.empty(d)
    _block_moments(phi, lo, hi, resid, row_order, gram, lin)
    status = _factor_precision(gram, sigma2, tau, chol)
    if status == 2:
        return np.nan, 2
    return _lml_from_factor(chol, lin, sigma2, tau, work), status


@njit(cache=True)
def beta_and_fit(phi, starts, resid, row_order, sigma2, tau, normals):
    """Conjugate outer-weight draw for every leaf plus fitted values.

    Returns (beta (L, D), fitted_sorted (n,), status).  beta[l] ~
    N(P^-1 Theta, P^-1) via the Cholesky factor of P: mean from a
    forward/back solve pair, noise from one transposed solve of a standard
    normal vector.
    """
    n_leaf = starts.shape[0] - 1
    d = phi.shape[1]
    inv_s2 = 1.0 / sigma2
    beta = np.empty((n_leaf, d))
    fitted = np.empty(phi.shape[0])
    gram = np.empty((d, d))
    lin = np.empty(d)
    chol = np.empty((d, d))
    theta = np.empty(d)
    w = np.empty(d)
    mean = np.empty(d)
    noise = np.empty(d)
    status = 0
    for l in range(n_leaf):
        lo, hi = starts[l], starts[l + 1]
        _block_moments(phi, lo, hi, resid, row_order, gram, lin)
        st = _factor_precision(gram, sigma2, tau, chol)
        if st == 2:
            return beta, fitted, 2
        if st == 1 and status == 0:
            status = 1
        for i in range(d):
            theta[i] = lin[i] * inv_s2
        _forward_solve(chol, theta, w)
        _back_solve_t(chol, w, mean)
        _back_solve_t(chol, normals[l], noise)
        for i in range(d):
            beta[l, i] = mean[i] + noise[i]
        for i in range(lo, hi):
            s = 0.0
            for k in range(d):
                s += phi[i, k] * beta[l, k]
            fitted[i] = s
    return beta, fitted, status


@njit(cache=True)
def grow_eval(
    x_col,
    lut,
    cutpoint,
    use_lut,
    z,
    row_order,
    lo,
    hi,
    phi,
    resid,
    omega_left,
    offsets_left,
    omega_right,
    offsets_right,
    act,
    sigma2,
    tau,
):
    """Evaluate a grow proposal on the target leaf's block [lo, hi).

    Splits the block's rows by the proposed rule, builds basis matrices for
    both children, and returns
    (go_left, n_left, phi_left, phi_right, lml_parent, lml_left, lml_right,
    status).  phi_left/phi_right are filled in block row order, left rows
    keeping their relative order, then right rows.
    """
    n_block = hi - lo
    d = phi.shape[1]
    go_left = np.empty(n_block, dtype=np.bool_)
    n_left = 0
    for i in range(lo, hi):
        v = x_col[row_order[i]]
        if use_lut:
            left = lut[int(v)]
        else:
            left = v < cutpoint
        go_left[i - lo] = left
        if left:
            n_left += 1

    lml_parent, st0 = _block_lml(phi, lo, hi, resid, row_order, sigma2, tau)
    if st0 == 2:
        empty = np.empty((0, d))
        return go_left, n_left, empty, empty, np.nan, np.nan, np.nan, 2

    phi_left = np.empty((n_left, d))
    phi_right = np.empty((n_block - n_left, d))
    gram_l = np.zeros((d, d))
    lin_l = np.zeros(d)
    gram_r = np.zeros((d, d))
    lin_r = np.zeros(d)
    q = z.shape[1]
    il = 0
    ir = 0
    for i in range(lo, hi):
        zi = row_order[i]
        ri = resid[zi]
        if go_left[i - lo]:
            for k in range(d):
                s = offsets_left[k]
                for c in range(q):
                    s += z[zi, c] * omega_left[c, k]
                phi_left[il, k] = _act(act, s)
            for a in range(d):
                va = phi_left[il, a]
                lin_l[a] += va * ri
                for b in range(a, d):
                    gram_l[a, b] += va * phi_left[il, b]
            il += 1
        else:
            for k in range(d):
                s = offsets_right[k]
                for c in range(q):
                    s += z[zi, c] * omega_right[c, k]
                phi_right[ir, k] = _act(act, s)
            for a in range(d):
                va = phi_right[ir, a]
                lin_r[a] += va * ri
                for b in range(a, d):
                    gram_r[a, b] += va * phi_right[ir, b]
            ir += 1
    for a in range(d):
        for b in range(a + 1, d):
            gram_l[b, a] = gram_l[a, b]
            gram_r[b, a] = gram_r[a, b]

    chol = np.empty((d, d))
    work = np.empty(d)
    status = st0
    st = _factor_precision(gram_l, sigma2, tau, chol)
    if st == 2:
        return go_left, n_left, phi_left, phi_right, np.nan, np.nan, np.nan, 2
    if st > status:
        status = st
    lml_left = _lml_from_factor(chol, lin_l, sigma2, tau, work)
    st = _factor_precision(gram_r, sigma2, tau, chol)
    if st == 2:
        return go_left, n_left, phi_left, phi_right, np.nan, np.nan, np.nan, 2
    if st > status:
        status = st
    lml_right = _lml_from_factor(chol, lin_r, sigma2, tau, work)
    return go_left, n_left, phi_left, phi_right, lml_parent, lml_left, lml_right, status


@njit(cache=True)
def prune_eval(
    z,
    row_order,
    lo,
    mid,
    hi,
    phi,
    resid,
    omega_merged,
    offsets_merged,
    act,
    sigma2,
    tau,
):
    """Evaluate a prune proposal merging adjacent blocks [lo, mid) + [mid, hi).

    Returns (phi_merged, lml_merged, lml_left, lml_right, status); the merged
    basis uses freshly proposed inner weights.
    """
    d = phi.shape[1]
    lml_left, st0 = _block_lml(phi, lo, mid, resid, row_order, sigma2, tau)
    lml_right, st1 = _block_lml(phi, mid, hi, resid, row_order, sigma2, tau)
    if st0 == 2 or st1 == 2:
        return np.empty((0, d)), np.nan, np.nan, np.nan, 2
    status = max(st0, st1)

    phi_merged = np.empty((hi - lo, d))
    _basis_rows(z, row_order, lo, hi, omega_merged, offsets_merged, act, phi_merged, 0)
    gram = np.empty((d, d))
    lin = np.empty(d)
    chol = np.empty((d, d))
    work = np.empty(d)
    for i in range(d):
        lin[i] = 0.0
        for j in range(d):
            gram[i, j] = 0.0
    for i in range(lo, hi):
        ri = resid[row_order[i]]
        for a in range(d):
            va = phi_merged[i - lo, a]
            lin[a] += va * ri
            for b in range(a, d):
                gram[a, b] += va * phi_merged[i - lo, b]
    for a in range(d):
        for b in range(a + 1, d):
            gram[b, a] = gram[a, b]
    st = _factor_precision(gram, sigma2, tau, chol)
    if st == 2:
        return phi_merged, np.nan, np.nan, np.nan, 2
    if st > status:
        status = st
    lml_merged = _lml_from_factor(chol, lin, sigma2, tau, work)
    return phi_merged, lml_merged, lml_left, lml_right, status


@njit(cache=True)
def change_eval(z, row_order, starts, phi, resid, omega_all, offsets_all, act, sigma2, tau):
    """Evaluate a change proposal: fresh inner weights at every leaf.

    omega_all is (L, q, D) and offsets_all (L, D).  Returns
    (phi_new, delta_lml, status) where delta_lml sums the new-minus-old
    marginal terms over all leaves.
    """
    n_leaf = starts.shape[0] - 1
    d = phi.shape[1]
    phi_new = np.empty_like(phi)
    delta = 0.0
    status = 0
    for l in range(n_leaf):
        lo, hi = starts[l], starts[l + 1]
        old, st = _block_lml(phi, lo, hi, resid, row_order, sigma2, tau)
        if st == 2:
            return phi_new, np.nan, 2
        if st > status:
            status = st
        _basis_rows(z, row_order, lo, hi, omega_all[l], offsets_all[l], act, phi_new, lo)
        new, st = _block_lml(phi_new, lo, hi, resid, row_order, sigma2, tau)
        if st == 2:
            return phi_new, np.nan, 2
        if st > status:
            status = st
        delta += new - old
    return phi_new, delta, status
