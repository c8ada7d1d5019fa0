"""Metrics, the dense marginal-likelihood oracle, and the timing harness."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import multivariate_normal

from .config import PriorConfig
from .data import preprocess
from .dgp import generate_friedman
from .rng import chain_rng

__all__ = [
    "rmse",
    "logloss",
    "pointwise_coverage",
    "marginal_oracle",
    "gaussian_base_terms",
    "timing_harness",
    "TimingReport",
]

PROB_CLIP = 1e-12


def rmse(pred: np.ndarray, truth: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth lengths differ")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def logloss(prob: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative Bernoulli log-likelihood with probabilities clipped to
    [1e-12, 1 - 1e-12]."""
    prob = np.asarray(prob, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if prob.shape != labels.shape:
        raise ValueError("prob and labels lengths differ")
    p = np.clip(prob, PROB_CLIP, 1.0 - PROB_CLIP)
    return float(-np.mean(labels * np.log(p) + (1.0 - labels) * np.log1p(-p)))


def pointwise_coverage(lower: np.ndarray, upper: np.ndarray, truth: np.ndarray) -> float:
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if not lower.shape == upper.shape == truth.shape:
        raise ValueError("interval and truth lengths differ")
    return float(np.mean((truth >= lower) & (truth <= upper)))


def marginal_oracle(phi: np.ndarray, r: np.ndarray, sigma2: float, tau: float) -> float:
    """Exact log density of r under N(0, sigma2 I + tau^2 Phi Phi').

    Dense n-dimensional evaluation, deliberately independent of the
    low-dimensional factorization used by the sampler.
    """
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    r = np.asarray(r, dtype=float)
    n = r.shape[0]
    cov = sigma2 * np.eye(n) + tau**2 * (phi @ phi.T)
    return float(multivariate_normal(mean=np.zeros(n), cov=cov).logpdf(r))


def gaussian_base_terms(r: np.ndarray, sigma2: float) -> float:
    """-n/2 log(2 pi sigma2) - |r|^2 / (2 sigma2), the terms the collapsed
    leaf computation drops."""
    r = np.asarray(r, dtype=float)
    n = r.shape[0]
    return -0.5 * n * math.log(2.0 * math.pi * sigma2) - 0.5 * float(r @ r) / sigma2


@dataclass
class TimingReport:
    """Per-size medians plus the fitted log-log scaling exponent."""

    sizes: list[int]
    median_update_seconds: list[float]
    median_iteration_seconds: list[float]
    exponent: float

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "n": self.sizes,
                "median_update_seconds": self.median_update_seconds,
                "median_iteration_seconds": self.median_iteration_seconds,
            }
        )

    def summary(self) -> str:
        lines = [
            f"n={n}: per-update {u * 1e6:.1f} us, per-iteration {i * 1e3:.3f} ms"
            for n, u, i in zip(
                self.sizes, self.median_update_seconds, self.median_iteration_seconds
            )
        ]
        lines.append(f"log-log scaling exponent: {self.exponent:.3f}")
        return "\n".join(lines)


def timing_harness(
    sizes: list[int],
    repetitions: int = 20,
    config: PriorConfig | None = None,
    warmup: int = 30,
    seed: int = 20240,
    chains: int = 3,
) -> TimingReport:
    """Measure per-tree-update wall time on generated regression data.

    For each n, runs `chains` independent short chains: `warmup` unmeasured
    sweeps let trees reach a stationary size, then every tree update over
    `repetitions` sweeps is timed.  Durations pool across chains before
    taking the median, which averages out tree-shape luck.  The exponent is
    the slope of log(median update time) on log(n); zero repetitions yield
    an empty report.
    """
    from .sampler import ChainState, update_sigma2, update_tree

    if config is None:
        config = PriorConfig(n_trees=10, n_ridge=1, activation="cosine", tau=0.5)
    if repetitions <= 0:
        return TimingReport([], [], [], float("nan"))
    med_update, med_iter = [], []
    for n in sizes:
        sim = generate_friedman(n, sigma=1.0, seed=seed)
        dataset, _ = preprocess(sim.x, sim.z, sim.y)
        updates = np.empty(chains * repetitions * config.n_trees)
        iters = np.empty(chains * repetitions)
        k = ki = 0
        for chain in range(chains):
            rng = chain_rng(seed, chain)
            state = ChainState.initialize(dataset, config, rng)
            for _ in range(warmup):
                for m in range(config.n_trees):
                    update_tree(state, m)
                update_sigma2(state)
            for _ in range(repetitions):
                t_iter = time.perf_counter()
                for m in range(config.n_trees):
                    t0 = time.perf_counter()
                    update_tree(state, m)
                    updates[k] = time.perf_counter() - t0
                    k += 1
                update_sigma2(state)
                iters[ki] = time.perf_counter() - t_iter
                ki += 1
        med_update.append(float(np.median(updates)))
        med_iter.append(float(np.median(iters)))
    slope = float(np.polyfit(np.log(sizes), np.log(med_update), 1)[0]) if len(sizes) > 1 else float("nan")
    return TimingReport(list(sizes), med_update, med_iter, slope)
