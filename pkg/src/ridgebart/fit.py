"""High-level fitting: default resolution and multi-chain orchestration.

`fit_arrays` is the array-in / samples-out entry point used by the CLI.
Chains are independent: chain i draws from the stream derived from
(seed, i), so results are identical whether chains run serially or in a
process pool, and pooled draws always appear in chain order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import BranchingPrior, PriorConfig, calibrate_sigma_scale
from .data import Dataset, TransformRecord, preprocess
from .model import ChainMeta, PosteriorSamples
from .ridge import default_tau, solve_lambda
from .rng import chain_rng
from .sampler import run_chain

__all__ = ["resolve_config", "fit_dataset", "fit_arrays"]


def resolve_config(
    y: np.ndarray,
    binary: bool,
    activation: str = "cosine",
    n_trees: int = 50,
    n_ridge: int = 1,
    nu: float = 3.0,
    rho_threshold: float = 1.0,
    rho_prob: float = 0.5,
    nu_sigma: float = 3.0,
    rotate_omega: bool = False,
    branching: BranchingPrior | None = None,
) -> PriorConfig:
    """Turn user-facing knobs into a fully concrete `PriorConfig`.

    The outer-weight scale comes from the outcome range; the leaf-scale rate
    is solved so P(rho < rho_threshold) = rho_prob; the noise prior scale is
    calibrated to put 90% mass below Var(y) (fixed at 1 for binary fits,
    where sigma2 is pinned to 1 anyway).
    """
    y = np.asarray(y, dtype=float)
    if activation == "constant" and n_ridge != 1:
        raise ValueError("constant activation requires n_ridge == 1")
    tau = default_tau(float(y.min()), float(y.max()), n_trees, n_ridge)
    lam = solve_lambda(nu, rho_threshold, rho_prob)
    lambda_sigma = 1.0 if binary else calibrate_sigma_scale(y - y.mean(), nu_sigma)
    return PriorConfig(
        n_trees=n_trees,
        n_ridge=n_ridge,
        activation=activation,
        tau=tau,
        nu=nu,
        lam=lam,
        nu_sigma=nu_sigma,
        lambda_sigma=lambda_sigma,
        branching=branching or BranchingPrior(),
        rotate_omega=rotate_omega,
    )


def _chain_worker(args):
    dataset, config, iterations, burn_in, thin, seed, chain_index, y_center, want_diag = args
    rng = chain_rng(seed, chain_index)
    diagnostics: list | None = [] if want_diag else None
    draws = run_chain(
        dataset,
        config,
        iterations=iterations,
        burn_in=burn_in,
        thin=thin,
        rng=rng,
        y_center=y_center,
        diagnostics=diagnostics,
    )
    if diagnostics is not None:
        for rec in diagnostics:
            rec["chain"] = chain_index
    return draws, diagnostics


def fit_dataset(
    dataset: Dataset,
    transform: TransformRecord,
    config: PriorConfig,
    chains: int = 10,
    iterations: int = 2000,
    burn_in: int = 1000,
    thin: int = 1,
    seed: int = 0,
    jobs: int = 1,
    collect_diagnostics: bool = False,
    schema: dict | None = None,
) -> tuple[PosteriorSamples, list[dict]]:
    """Run `chains` independent chains and pool their draws in chain order."""
    if chains < 1:
        raise ValueError("chains must be positive")
    tasks = [
        (dataset, config, iterations, burn_in, thin, seed, i, transform.y_center, collect_diagnostics)
        for i in range(chains)
    ]
    if jobs > 1 and chains > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, chains)) as pool:
            results = list(pool.map(_chain_worker, tasks))
    else:
        results = [_chain_worker(t) for t in tasks]
    draws = [d for chain_draws, _ in results for d in chain_draws]
    diagnostics = [rec for _, diag in results if diag for rec in diag]
    meta = ChainMeta(
        seed=seed,
        n_chains=chains,
        iterations=iterations,
        burn_in=burn_in,
        thin=thin,
        config=config,
        transform=transform,
        binary=dataset.binary,
        schema=schema,
    )
    return PosteriorSamples(draws=draws, meta=meta), diagnostics


def fit_arrays(
    raw_x: np.ndarray,
    raw_z: np.ndarray,
    raw_y: np.ndarray,
    categorical_columns: tuple[int, ...] = (),
    binary: bool = False,
    activation: str = "cosine",
    n_trees: int = 50,
    n_ridge: int = 1,
    chains: int = 10,
    iterations: int = 2000,
    burn_in: int = 1000,
    thin: int = 1,
    seed: int = 0,
    nu: float = 3.0,
    rho_threshold: float = 1.0,
    rho_prob: float = 0.5,
    nu_sigma: float = 3.0,
    rotate_omega: bool = False,
    branching: BranchingPrior | None = None,
    jobs: int = 1,
    collect_diagnostics: bool = False,
    schema: dict | None = None,
) -> tuple[PosteriorSamples, list[dict]]:
    """Preprocess raw arrays, resolve defaults, and fit."""
    dataset, transform = preprocess(
        raw_x, raw_z, raw_y, categorical_columns=categorical_columns, binary=binary
    )
    config = resolve_config(
        raw_y,
        binary,
        activation=activation,
        n_trees=n_trees,
        n_ridge=n_ridge,
        nu=nu,
        rho_threshold=rho_threshold,
        rho_prob=rho_prob,
        nu_sigma=nu_sigma,
        rotate_omega=rotate_omega,
        branching=branching,
    )
    return fit_dataset(
        dataset,
        transform,
        config,
        chains=chains,
        iterations=iterations,
        burn_in=burn_in,
        thin=thin,
        seed=seed,
        jobs=jobs,
        collect_diagnostics=collect_diagnostics,
        schema=schema,
    )
