"""Synthetic benchmark generators.

Three processes at desk scale: longitudinal recovery curves (targeted
smoothing in one time variable), the Friedman function (generic regression
with z = x), and a binary process built from a probit transform of the
recovery surface.  All generators are deterministic given their seed and
retain the true function values for scoring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.special import ndtr

__all__ = [
    "recovery_curve",
    "generate_recovery",
    "friedman",
    "generate_friedman",
    "generate_binary",
    "SimulatedData",
    "FOLLOW_UP_TIMES",
]

# Common follow-up schedule (months) the observation times cluster around.
FOLLOW_UP_TIMES = np.array([1.0, 2.0, 4.0, 6.0, 8.0, 12.0, 16.0, 20.0, 24.0])


@dataclass
class SimulatedData:
    """Raw-scale simulated columns plus the truth needed for scoring."""

    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    f_true: np.ndarray
    prob_true: np.ndarray | None = None
    patient: np.ndarray | None = None
    grid_times: np.ndarray | None = None
    f_grid: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def shared_z(self) -> bool:
        return self.z is self.x

    def frame(self) -> pd.DataFrame:
        cols = {f"x{j + 1}": self.x[:, j] for j in range(self.x.shape[1])}
        if not self.shared_z:
            for j in range(self.z.shape[1]):
                cols[f"z{j + 1}"] = self.z[:, j]
        cols["y"] = self.y
        return pd.DataFrame(cols)

    def truth_frame(self) -> pd.DataFrame:
        cols = {"f_true": self.f_true}
        if self.prob_true is not None:
            cols["prob_true"] = self.prob_true
        return pd.DataFrame(cols)

    def schema(self) -> dict:
        x_cols = [f"x{j + 1}" for j in range(self.x.shape[1])]
        if self.shared_z:
            z_cols = list(x_cols)
        else:
            z_cols = [f"z{j + 1}" for j in range(self.z.shape[1])]
        return {"x": x_cols, "z": z_cols, "outcome": "y", "categorical": []}


def recovery_curve(x: np.ndarray, z) -> np.ndarray:
    """Post-event recovery surface over covariates x[0:3] and time z in [0, 24].

    f = (1 - A) (1 - B exp(-z C)) with A = 0.5|sigmoid(2 x1) - 0.5| - 0.5,
    B = 1 + min(0, 0.15 cos(5 x2)), C = 5 exp(x3).  Remaining covariates are
    inert noise dimensions.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    squeeze = x.ndim == 1
    x2d = np.atleast_2d(x)
    a = 0.5 * np.abs(1.0 / (1.0 + np.exp(-2.0 * x2d[:, 0])) - 0.5) - 0.5
    b = 1.0 + np.minimum(0.0, 0.15 * np.cos(5.0 * x2d[:, 1]))
    c = 5.0 * np.exp(x2d[:, 2])
    out = (1.0 - a) * (1.0 - b * np.exp(-z * c))
    return float(out[0]) if squeeze and np.ndim(z) == 0 else out


def generate_recovery(n_patients: int, seed: int, noise_sd: float = 0.05) -> SimulatedData:
    """Longitudinal recovery observations.

    Each patient gets covariates uniform on [0,1]^6 and 1 + Poisson(3)
    observation times: a random subset of the follow-up schedule (drawn with
    replacement when more times are needed than the schedule has), jittered
    by Uniform(-0.5, 0.5) and clamped to [0, 24].  Outcomes add N(0, 0.05^2)
    noise.  The truth table also evaluates each patient on a uniform
    25-point grid over [0, 24] for coverage checks.
    """
    if n_patients < 1:
        raise ValueError("n_patients must be positive")
    rng = np.random.default_rng(seed)
    x_pat = rng.uniform(size=(n_patients, 6))
    counts = 1 + rng.poisson(3.0, size=n_patients)
    rows_x, rows_z, rows_pat = [], [], []
    grid = FOLLOW_UP_TIMES
    for i in range(n_patients):
        k = int(counts[i])
        if k <= grid.shape[0]:
            times = rng.choice(grid, size=k, replace=False)
        else:
            times = rng.choice(grid, size=k, replace=True)
        times = np.clip(times + rng.uniform(-0.5, 0.5, size=k), 0.0, 24.0)
        rows_x.append(np.repeat(x_pat[i : i + 1], k, axis=0))
        rows_z.append(times)
        rows_pat.append(np.full(k, i, dtype=np.int64))
    x = np.concatenate(rows_x)
    z = np.concatenate(rows_z)
    patient = np.concatenate(rows_pat)
    f = recovery_curve(x, z)
    y = f + noise_sd * rng.standard_normal(f.shape[0])
    grid_times = np.linspace(0.0, 24.0, 25)
    f_grid = recovery_curve(
        np.repeat(x_pat, grid_times.shape[0], axis=0),
        np.tile(grid_times, n_patients),
    ).reshape(n_patients, grid_times.shape[0])
    return SimulatedData(
        x=x,
        z=z[:, None],
        y=y,
        f_true=f,
        patient=patient,
        grid_times=grid_times,
        f_grid=f_grid,
    )


def friedman(x: np.ndarray) -> np.ndarray:
    """sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5."""
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    x2d = np.atleast_2d(x)
    if x2d.shape[1] < 5:
        raise ValueError("friedman needs at least 5 coordinates")
    out = (
        np.sin(math.pi * x2d[:, 0] * x2d[:, 1])
        + 20.0 * (x2d[:, 2] - 0.5) ** 2
        + 10.0 * x2d[:, 3]
        + 5.0 * x2d[:, 4]
    )
    return float(out[0]) if squeeze else out


def generate_friedman(
    n: int, sigma: float = 1.0, p_extra: int = 0, seed: int = 0
) -> SimulatedData:
    """Friedman benchmark: x uniform on [0,1]^(5 + p_extra), unit noise by
    default, smoothing variables equal to the covariates."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=(n, 5 + p_extra))
    f = friedman(x)
    y = f + sigma * rng.standard_normal(n)
    return SimulatedData(x=x, z=x, y=y, f_true=f)


def generate_binary(n: int, seed: int) -> SimulatedData:
    """Binary outcomes from a probit of the recovery surface.

    Covariates uniform on [0,1]^6, one smoothing variable uniform on
    [0, 24]; success probability ndtr(f(x, z) - 0.75), which spans roughly
    (0.2, 0.8) since f ranges over about [0, 1.5].
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=(n, 6))
    z = rng.uniform(0.0, 24.0, size=n)
    f = recovery_curve(x, z)
    prob = ndtr(f - 0.75)
    y = (rng.uniform(size=n) < prob).astype(float)
    return SimulatedData(x=x, z=z[:, None], y=y, f_true=f - 0.75, prob_true=prob)
