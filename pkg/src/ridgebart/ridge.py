"""Ridge-function leaves: activations, inner-weight priors, basis matrices.

Each leaf maps a smoothing vector z to sum_d beta_d * act(omega_d' z + b_d).
Inner weights (rho, omega, b) are drawn from their prior both at
initialization and inside tree proposals; outer weights beta get a conjugate
Gaussian update elsewhere.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammainc

from .config import PriorConfig
from .trees import LeafParams, RidgeTree, assign_leaf, assign_rows

__all__ = [
    "ACTIVATION_CODES",
    "activation",
    "sample_rotation",
    "sample_inner_weights",
    "sample_leaf_params",
    "build_basis",
    "leaf_eval",
    "tree_eval",
    "default_tau",
    "solve_lambda",
]

ACTIVATION_CODES = {"constant": 0, "cosine": 1, "tanh": 2, "relu": 3}


def activation(kind: str, t):
    """Apply the named activation elementwise; constant ignores t."""
    t = np.asarray(t, dtype=float)
    if kind == "cosine":
        return np.cos(t)
    if kind == "tanh":
        return np.tanh(t)
    if kind == "relu":
        return np.maximum(t, 0.0)
    if kind == "constant":
        return np.ones_like(t)
    raise ValueError(f"unknown activation {kind!r}")


def sample_rotation(q: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed q x q rotation matrix (determinant +1).

    QR of a standard normal matrix with each column of Q flipped to make
    the corresponding diagonal entry of R positive, then one more column
    flip if needed to land in the rotation group.  For q = 1 this always
    yields (+1).  Column flips leave Q V Q' unchanged for diagonal V, so
    the induced covariance rotation is unaffected by the sign conventions.
    """
    g = rng.standard_normal((q, q))
    qmat, rmat = np.linalg.qr(g)
    signs = np.sign(np.diag(rmat))
    signs[signs == 0.0] = 1.0
    qmat = qmat * signs
    if np.linalg.det(qmat) < 0.0:
        qmat[:, -1] = -qmat[:, -1]
    return qmat


def sample_inner_weights(
    config: PriorConfig, q: int, rng: np.random.Generator
) -> tuple[float, np.ndarray, np.ndarray]:
    """Draw (rho, omega, offsets) from their prior.

    rho ~ Gamma(nu/2, rate nu*lam/2); each omega column ~ N(0, rho^-1 V),
    with V optionally replaced by Q V Q' for a fresh random rotation Q;
    offsets ~ Uniform(0, 2*pi) for cosine and N(0, 1) otherwise.
    """
    if config.activation == "constant":
        raise ValueError("constant activation has no inner weights")
    d = config.n_ridge
    rho = float(rng.gamma(config.nu / 2.0, 2.0 / (config.nu * config.lam)))
    scale = config.omega_scale(q)  # sqrt of diag(V)
    eps = rng.standard_normal((q, d))
    if config.rotate_omega:
        rot = sample_rotation(q, rng)
        omega = (rot * scale) @ eps / math.sqrt(rho)
    else:
        omega = scale[:, None] * eps / math.sqrt(rho)
    if config.activation == "cosine":
        offsets = rng.uniform(0.0, 2.0 * math.pi, size=d)
    else:
        offsets = rng.standard_normal(d)
    return rho, omega, offsets


def sample_leaf_params(
    config: PriorConfig, q: int, rng: np.random.Generator, beta: np.ndarray | None = None
) -> LeafParams:
    """LeafParams with prior inner weights; beta defaults to zeros."""
    if config.activation == "constant":
        base = LeafParams.constant(q)
        return base if beta is None else base.with_beta(beta)
    rho, omega, offsets = sample_inner_weights(config, q, rng)
    if beta is None:
        beta = np.zeros(config.n_ridge)
    return LeafParams(rho, omega, offsets, np.asarray(beta, dtype=float))


def build_basis(z_rows: np.ndarray, params: LeafParams, kind: str) -> np.ndarray:
    """n_l x D matrix of ridge-feature evaluations for the given leaf."""
    z_rows = np.atleast_2d(np.asarray(z_rows, dtype=float))
    if kind == "constant":
        return np.ones((z_rows.shape[0], 1))
    return activation(kind, z_rows @ params.omega + params.offsets)


def leaf_eval(tree: RidgeTree, x: np.ndarray, z: np.ndarray, kind: str) -> float:
    """Route x to its leaf and evaluate that leaf's ridge expansion at z."""
    params = tree.nodes[assign_leaf(tree, np.asarray(x, dtype=float))]
    phi = build_basis(np.asarray(z, dtype=float)[None, :], params, kind)
    return float(phi[0] @ params.beta)


def tree_eval(tree: RidgeTree, x: np.ndarray, z: np.ndarray, kind: str) -> np.ndarray:
    """Vectorized leaf_eval over rows of (x, z)."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    out = np.empty(x.shape[0])
    for leaf_id, rows in assign_rows(tree, x).items():
        if rows.size == 0:
            continue
        params = tree.nodes[leaf_id]
        out[rows] = build_basis(z[rows], params, kind) @ params.beta
    return out


def default_tau(y_min: float, y_max: float, n_trees: int, n_ridge: int) -> float:
    """Outer-weight scale (y_max - y_min) / (4 * sqrt(M * D))."""
    if not y_max > y_min:
        raise ValueError("default_tau requires y_max > y_min")
    return (y_max - y_min) / (4.0 * math.sqrt(n_trees * n_ridge))


def solve_lambda(nu: float, threshold: float = 1.0, probability: float = 0.5) -> float:
    """Rate-scale hyperparameter putting P(rho < threshold) = probability.

    rho ~ Gamma(shape nu/2, rate nu*lam/2); the CDF at the threshold is
    strictly increasing in lam, so a bracketing bisection converges to the
    unique root.  Relative tolerance 1e-10.
    """
    if nu <= 0.0 or threshold <= 0.0 or not 0.0 < probability < 1.0:
        raise ValueError("need nu > 0, threshold > 0, probability in (0, 1)")
    shape = nu / 2.0

    def cdf(lam: float) -> float:
        return float(gammainc(shape, 0.5 * nu * lam * threshold))

    lo, hi = 1e-12, 1.0
    while cdf(hi) < probability:
        hi *= 2.0
    while cdf(lo) > probability:
        lo /= 2.0
    while hi - lo > 1e-10 * hi:
        mid = 0.5 * (lo + hi)
        if cdf(mid) < probability:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
