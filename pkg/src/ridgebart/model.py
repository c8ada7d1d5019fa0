"""Posterior containers and prediction.

An `Ensemble` is one posterior snapshot: the trees, the noise variance, and
the outcome centering constant.  `PosteriorSamples` is the thinned chain of
snapshots plus the metadata needed to reproduce and reuse a fit (seed,
iteration counts, configuration, transform record).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .config import PriorConfig
from .data import TransformRecord
from .ridge import tree_eval
from .trees import RidgeTree

__all__ = ["Ensemble", "ChainMeta", "PosteriorSamples", "predict", "predict_processed"]


@dataclass(frozen=True)
class Ensemble:
    """One posterior draw of the whole regression function."""

    trees: tuple[RidgeTree, ...]
    sigma2: float
    y_center: float
    activation: str

    def __post_init__(self):
        if self.sigma2 <= 0.0:
            raise ValueError("sigma2 must be positive")

    def evaluate(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Sum of tree evaluations plus the centering constant."""
        out = np.full(x.shape[0], self.y_center)
        for tree in self.trees:
            out += tree_eval(tree, x, z, self.activation)
        return out


@dataclass
class ChainMeta:
    """Provenance of a fit: everything except the draws themselves."""

    seed: int
    n_chains: int
    iterations: int
    burn_in: int
    thin: int
    config: PriorConfig
    transform: TransformRecord
    binary: bool
    schema: dict | None = None  # column names/roles, when fit from a CSV

    @property
    def draws_per_chain(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass
class PosteriorSamples:
    """Pooled post-burn-in draws from one or more chains, in chain order."""

    draws: list[Ensemble]
    meta: ChainMeta

    def __post_init__(self):
        expected = self.meta.n_chains * self.meta.draws_per_chain
        if len(self.draws) != expected:
            raise ValueError(
                f"draw count {len(self.draws)} does not equal "
                f"chains * (iterations - burn_in) / thin = {expected}"
            )

    def config_hash(self) -> str:
        return self.meta.config.hash()


@dataclass
class PredictionSummary:
    """Per-row posterior summaries plus the full draw matrix."""

    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float
    draws: np.ndarray  # (n_draws, n_rows)


def predict_processed(
    samples: PosteriorSamples, x: np.ndarray, z: np.ndarray, level: float = 0.95
) -> PredictionSummary:
    """Predict on inputs already mapped to the unit cube.

    Gaussian fits summarize the latent function value (centering added
    back); binary fits push every draw through the standard normal CDF and
    summarize success probabilities.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape[0] != z.shape[0]:
        raise ValueError("x and z must have the same number of rows")
    draws = np.empty((len(samples.draws), x.shape[0]))
    for i, ensemble in enumerate(samples.draws):
        draws[i] = ensemble.evaluate(x, z)
    if samples.meta.binary:
        draws = ndtr(draws)
    alpha = 0.5 * (1.0 - level)
    lower, upper = np.quantile(draws, [alpha, 1.0 - alpha], axis=0)
    return PredictionSummary(draws.mean(axis=0), lower, upper, level, draws)


def predict(
    samples: PosteriorSamples, raw_x: np.ndarray, raw_z: np.ndarray, level: float = 0.95
) -> PredictionSummary:
    """Predict on raw inputs, mapping them through the training transform."""
    record = samples.meta.transform
    return predict_processed(samples, record.apply_x(raw_x), record.apply_z(raw_z), level)
