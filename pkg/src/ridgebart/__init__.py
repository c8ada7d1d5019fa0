"""Bayesian additive regression trees with ridge-function leaves.

Trees partition the covariates x; each leaf emits a small linear
combination of ridge functions of the smoothing variables z, so the fitted
surface is piecewise smooth in z while staying adaptive in x.  Fitting uses
a Gibbs sampler whose tree updates marginalize the leaf outer weights and
run in time linear in the data size.  Setting ``activation="constant"``
recovers the classic piecewise-constant sum-of-trees baseline.
"""

from .config import BranchingPrior, PriorConfig
from .data import Dataset, TransformRecord, preprocess
from .dgp import (
    friedman,
    generate_binary,
    generate_friedman,
    generate_recovery,
    recovery_curve,
)
from .evaluate import logloss, marginal_oracle, pointwise_coverage, rmse, timing_harness
from .fit import fit_arrays, fit_dataset, resolve_config
from .model import ChainMeta, Ensemble, PosteriorSamples, predict, predict_processed
from .ridge import activation, build_basis, default_tau, sample_rotation, solve_lambda
from .rng import chain_rng
from .sampler import (
    ChainState,
    draw_beta,
    gibbs_iteration,
    leaf_suffstats,
    log_marginal_leaf,
    run_chain,
    sample_ensemble_prior,
)
from .serialize import deserialize, load, save, serialize
from .trees import DecisionRule, LeafParams, PredictorSpace, RidgeTree

__version__ = "0.1.0"

__all__ = [
    "BranchingPrior",
    "PriorConfig",
    "Dataset",
    "TransformRecord",
    "preprocess",
    "friedman",
    "generate_binary",
    "generate_friedman",
    "generate_recovery",
    "recovery_curve",
    "logloss",
    "marginal_oracle",
    "pointwise_coverage",
    "rmse",
    "timing_harness",
    "fit_arrays",
    "fit_dataset",
    "resolve_config",
    "ChainMeta",
    "Ensemble",
    "PosteriorSamples",
    "predict",
    "predict_processed",
    "activation",
    "build_basis",
    "default_tau",
    "sample_rotation",
    "solve_lambda",
    "chain_rng",
    "ChainState",
    "draw_beta",
    "gibbs_iteration",
    "leaf_suffstats",
    "log_marginal_leaf",
    "run_chain",
    "sample_ensemble_prior",
    "serialize",
    "deserialize",
    "save",
    "load",
    "DecisionRule",
    "LeafParams",
    "PredictorSpace",
    "RidgeTree",
    "__version__",
]
