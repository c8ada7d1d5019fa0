import math

import numpy as np
import pytest
from scipy.stats import gamma as gamma_dist

from ridgebart.config import PriorConfig
from ridgebart.ridge import (
    activation,
    build_basis,
    default_tau,
    leaf_eval,
    sample_inner_weights,
    sample_rotation,
    solve_lambda,
)
from ridgebart.trees import LeafParams, RidgeTree


def test_activation_values():
    assert activation("relu", -2.0) == 0.0
    assert activation("cosine", 0.0) == 1.0
    assert abs(activation("tanh", 1.0) - math.tanh(1.0)) < 1e-12
    assert math.isclose(float(activation("tanh", 1.0)), 0.761594, abs_tol=1e-6)
    assert activation("constant", 123.0) == 1.0
    with pytest.raises(ValueError):
        activation("sigmoid", 0.0)


def test_rho_prior_mean():
    # Gamma(nu/2, rate nu*lam/2) has mean 1/lam.
    config = PriorConfig(tau=1.0, nu=3.0, lam=0.788)
    rng = np.random.default_rng(0)
    rhos = np.array([sample_inner_weights(config, 2, rng)[0] for _ in range(20000)])
    se = rhos.std(ddof=1) / math.sqrt(len(rhos))
    assert abs(rhos.mean() - 1.0 / 0.788) < 3.0 * se


def test_offsets_by_activation():
    rng = np.random.default_rng(1)
    cos_cfg = PriorConfig(tau=1.0, activation="cosine", n_ridge=4)
    _, _, offs = sample_inner_weights(cos_cfg, 2, rng)
    assert ((offs >= 0.0) & (offs <= 2.0 * math.pi)).all()
    relu_cfg = PriorConfig(tau=1.0, activation="relu", n_ridge=200)
    _, _, offs = sample_inner_weights(relu_cfg, 2, rng)
    se = offs.std(ddof=1) / math.sqrt(offs.size)
    assert abs(offs.mean()) < 4 * se


def test_rotation_orthogonal():
    rng = np.random.default_rng(2)
    for q in (1, 2, 3, 7):
        rot = sample_rotation(q, rng)
        assert np.abs(rot @ rot.T - np.eye(q)).max() < 1e-10
    assert sample_rotation(1, rng)[0, 0] == 1.0  # sign convention


def test_rotation_haar_mean():
    rng = np.random.default_rng(3)
    entries = np.array([sample_rotation(3, rng) for _ in range(10000)])
    mean = entries.mean(axis=0)
    se = entries.std(axis=0, ddof=1) / math.sqrt(entries.shape[0])
    assert (np.abs(mean) < 3.0 * se + 1e-12).all()


def test_rotated_identity_covariance_unchanged():
    # With V = I the rotated and unrotated priors coincide; compare
    # second moments of omega across many draws.
    rng = np.random.default_rng(4)
    base = PriorConfig(tau=1.0, nu=30.0, lam=1.0)  # tight rho around 1
    rot = PriorConfig(tau=1.0, nu=30.0, lam=1.0, rotate_omega=True)
    draws_a = np.array([sample_inner_weights(base, 3, rng)[1].ravel() for _ in range(8000)])
    draws_b = np.array([sample_inner_weights(rot, 3, rng)[1].ravel() for _ in range(8000)])
    va, vb = draws_a.var(axis=0), draws_b.var(axis=0)
    pooled_se = np.sqrt(2.0) * va / math.sqrt(8000)
    assert (np.abs(va - vb) < 5 * pooled_se + 0.02).all()


def test_build_basis_cases():
    const = LeafParams.constant(2)
    phi = build_basis(np.zeros((3, 2)), const, "constant")
    assert phi.shape == (3, 1) and (phi == 1.0).all()

    cos_leaf = LeafParams(1.0, np.zeros((2, 3)), np.zeros(3), np.zeros(3))
    phi = build_basis(np.random.default_rng(0).uniform(size=(4, 2)), cos_leaf, "cosine")
    assert np.allclose(phi, 1.0)  # cos(0) = 1

    relu_leaf = LeafParams(1.0, np.array([[1.0], [-1.0]]), np.array([0.1]), np.zeros(1))
    phi = build_basis(np.array([[0.3, 0.6]]), relu_leaf, "relu")
    assert phi[0, 0] == 0.0  # max(0, 0.3 - 0.6 + 0.1)


def test_leaf_eval_cases():
    tree = RidgeTree.single_leaf(LeafParams.constant(1, beta0=0.7))
    assert leaf_eval(tree, np.array([0.2]), np.array([0.9]), "constant") == 0.7

    zero_beta = RidgeTree.single_leaf(
        LeafParams(1.0, np.ones((1, 2)), np.zeros(2), np.zeros(2))
    )
    assert leaf_eval(zero_beta, np.array([0.2]), np.array([0.9]), "cosine") == 0.0

    two_unit = RidgeTree.single_leaf(
        LeafParams(1.0, np.zeros((1, 2)), np.array([0.0, math.pi]), np.array([1.0, 1.0]))
    )
    val = leaf_eval(two_unit, np.array([0.5]), np.array([0.5]), "cosine")
    assert abs(val) < 1e-12  # 1 + cos(pi) = 0


def test_default_tau():
    assert math.isclose(default_tau(0.0, 1.0, 50, 1), 1.0 / (4.0 * math.sqrt(50.0)))
    assert math.isclose(default_tau(0.0, 1.0, 50, 1), 0.0353553, abs_tol=1e-6)
    assert default_tau(-1.0, 1.0, 1, 1) == 0.5
    assert math.isclose(default_tau(0.0, 3.0, 7, 2), 3.0 * default_tau(0.0, 1.0, 7, 2))
    with pytest.raises(ValueError):
        default_tau(1.0, 1.0, 50, 1)


def test_solve_lambda_default():
    lam = solve_lambda(3.0, 1.0, 0.5)
    assert 0.778 <= lam <= 0.798
    cdf = gamma_dist(a=1.5, scale=2.0 / (3.0 * lam)).cdf(1.0)
    assert abs(cdf - 0.5) < 1e-8


def test_solve_lambda_threshold_scaling():
    lam1 = solve_lambda(3.0, 1.0, 0.5)
    lam2 = solve_lambda(3.0, 2.0, 0.5)
    assert math.isclose(lam2, lam1 / 2.0, rel_tol=1e-8)


def test_solve_lambda_other_probability():
    lam = solve_lambda(3.0, 1.0, 0.75)
    cdf = gamma_dist(a=1.5, scale=2.0 / (3.0 * lam)).cdf(1.0)
    assert abs(cdf - 0.75) < 1e-8
    assert lam > solve_lambda(3.0, 1.0, 0.5)  # monotone in probability


def test_rff_kernel_convergence():
    # With omega ~ N(0, rho^-1 I) and b ~ U(0, 2 pi), the average of
    # 2 cos(w'z + b) cos(w'z' + b) over many draws converges to the
    # Gaussian kernel exp(-rho^-1 |z - z'|^2 / 2).  The estimator's Monte
    # Carlo SE at D = 5000 is ~0.014, so the seed is fixed.
    rng = np.random.default_rng(11)
    d = 5000
    for _ in range(10):
        q = int(rng.integers(1, 4))
        z1 = rng.uniform(size=q)
        z2 = rng.uniform(size=q)
        rho = float(rng.uniform(0.5, 3.0))
        omega = rng.normal(0.0, math.sqrt(1.0 / rho), size=(q, d))
        b = rng.uniform(0.0, 2.0 * math.pi, size=d)
        feat1 = np.cos(z1 @ omega + b)
        feat2 = np.cos(z2 @ omega + b)
        approx = 2.0 * np.mean(feat1 * feat2)
        exact = math.exp(-np.sum((z1 - z2) ** 2) / (2.0 * rho))
        assert abs(approx - exact) < 0.02
