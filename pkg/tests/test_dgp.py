import math

import numpy as np

from ridgebart.dgp import (
    FOLLOW_UP_TIMES,
    friedman,
    generate_binary,
    generate_friedman,
    generate_recovery,
    recovery_curve,
)


def test_recovery_curve_values():
    x0 = np.zeros(6)
    assert recovery_curve(x0, 0.0) == 0.0  # B(0) = 1 kills the z = 0 value
    assert abs(recovery_curve(x0, 1e9) - 1.5) < 1e-12  # 1 - A(0) = 1.5
    # C(x) = 5 e^{x3}: isolate via the decay rate at x3 = 1.
    x = np.zeros(6)
    x[2] = 1.0
    f_inf = recovery_curve(x, 1e9)
    val = recovery_curve(x, 1.0)
    c = -math.log(1.0 - val / f_inf)  # B = 1 at x2 = 0
    assert abs(c - 5.0 * math.e) < 1e-6
    assert abs(5.0 * math.e - 13.5914) < 1e-4


def test_recovery_inert_covariates():
    rng = np.random.default_rng(0)
    base = rng.uniform(size=6)
    other = base.copy()
    other[3:] = rng.uniform(size=3)
    for z in (0.5, 3.0, 20.0):
        assert recovery_curve(base, z) == recovery_curve(other, z)


def test_generate_recovery_shapes_and_ranges():
    sim = generate_recovery(200, seed=4)
    assert sim.x.shape[1] == 6
    assert sim.z.min() >= 0.0 and sim.z.max() <= 24.0
    assert sim.patient.max() == 199
    assert sim.f_grid.shape == (200, 25)
    assert np.allclose(sim.grid_times, np.linspace(0, 24, 25))
    # Times cluster near the follow-up grid (within the 0.5 jitter).
    dist = np.min(np.abs(sim.z - FOLLOW_UP_TIMES[None, :]), axis=1)
    assert dist.max() <= 0.5 + 1e-12


def test_generate_recovery_observation_count_mean():
    sim = generate_recovery(20000, seed=5)
    counts = np.bincount(sim.patient)
    assert counts.min() >= 1
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - 4.0) < 3.0 * se  # 1 + Poisson(3)


def test_generate_recovery_noise_sd():
    sim = generate_recovery(25000, seed=6)
    resid = sim.y - sim.f_true
    assert sim.n > 1e5 * 0.8
    assert abs(resid.std(ddof=1) - 0.05) / 0.05 < 0.02


def test_recovery_determinism():
    a = generate_recovery(50, seed=9)
    b = generate_recovery(50, seed=9)
    assert np.array_equal(a.y, b.y) and np.array_equal(a.z, b.z)


def test_friedman_values():
    x = np.full(5, 0.5)
    assert abs(friedman(x) - (math.sin(math.pi * 0.25) + 5.0 + 2.5)) < 1e-12
    assert abs(friedman(x) - 8.207107) < 1e-6
    zero_case = np.array([0.0, 0.7, 0.5, 0.0, 0.0])
    assert friedman(zero_case) == 0.0
    e4 = np.array([0.0, 0.7, 0.5, 1.0, 0.0])
    assert abs(friedman(e4) - friedman(zero_case) - 10.0) < 1e-12


def test_generate_friedman():
    sim = generate_friedman(500, sigma=1.0, p_extra=2, seed=7)
    assert sim.x.shape == (500, 7)
    assert sim.z is sim.x  # general smoothing mode
    assert np.array_equal(sim.f_true, friedman(sim.x))
    again = generate_friedman(500, sigma=1.0, p_extra=2, seed=7)
    assert np.array_equal(sim.y, again.y)


def test_generate_binary():
    sim = generate_binary(100000, seed=8)
    assert set(np.unique(sim.y)) <= {0.0, 1.0}
    # Success probability 0.5 exactly when the shifted surface crosses zero.
    from scipy.special import ndtr

    assert np.allclose(sim.prob_true, ndtr(sim.f_true))
    rate = sim.y.mean()
    p = sim.prob_true.mean()
    se = math.sqrt(p * (1 - p) / sim.n)
    assert abs(rate - p) < 3.0 * se
    assert np.array_equal(sim.y, generate_binary(100000, seed=8).y)
