"""Prior and sampler configuration.

`PriorConfig` collects every knob of the model: ensemble size, ridge
expansion width, activation, outer/inner weight scales, noise prior, and the
branching-process prior on tree shapes.  Instances are immutable; helper
constructors resolve data-dependent defaults.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

ACTIVATIONS = ("cosine", "tanh", "relu", "constant")

# Nodes at this depth are always leaves; bounds worst-case tree size.
MAX_DEPTH = 32


@dataclass(frozen=True)
class BranchingPrior:
    """Tree-shape prior: depth-d nodes split with probability `split_prob(d)`.

    The default form is ``base * (1 + d) ** -exponent``.  Setting ``gamma``
    switches to the geometric form ``gamma ** (d + 1)``; the exponent is
    ``d + 1`` rather than ``d`` so the root is not forced to split.
    """

    base: float = 0.95
    exponent: float = 2.0
    gamma: float | None = None

    def __post_init__(self):
        if self.gamma is not None:
            if not 0.0 < self.gamma < 0.5:
                raise ValueError("gamma must lie in (0, 1/2)")
        else:
            if not 0.0 < self.base < 1.0:
                raise ValueError("base must lie in (0, 1)")
            if self.exponent <= 0.0:
                raise ValueError("exponent must be positive")

    def split_prob(self, depth: int) -> float:
        if depth >= MAX_DEPTH:
            return 0.0
        if self.gamma is not None:
            return self.gamma ** (depth + 1)
        return self.base * (1.0 + depth) ** (-self.exponent)


@dataclass(frozen=True)
class PriorConfig:
    """Full model configuration.

    Parameters
    ----------
    n_trees
        Number of trees in the ensemble.
    n_ridge
        Ridge functions per leaf (1 in constant mode).
    activation
        One of ``cosine``, ``tanh``, ``relu``, ``constant``.  Constant
        activation disables inner-weight sampling and reproduces the
        piecewise-constant baseline model.
    tau
        Prior standard deviation of each outer weight.
    nu, lam
        Gamma hyperparameters of the leaf scale: shape ``nu / 2``, rate
        ``nu * lam / 2``.
    nu_sigma, lambda_sigma
        Inverse-gamma hyperparameters of the noise variance (shape
        ``nu_sigma / 2``, scale ``nu_sigma * lambda_sigma / 2``).
    branching
        Tree-shape prior.
    rotate_omega
        Draw inner directions from a randomly rotated covariance, which
        avoids axis-aligned artifacts on spatial smoothing variables.
    omega_base_cov
        Diagonal of the base covariance V for inner directions (length q);
        None means the identity.
    """

    n_trees: int = 50
    n_ridge: int = 1
    activation: str = "cosine"
    tau: float = 1.0
    nu: float = 3.0
    lam: float = 0.7886579614425795
    nu_sigma: float = 3.0
    lambda_sigma: float = 1.0
    branching: BranchingPrior = field(default_factory=BranchingPrior)
    rotate_omega: bool = False
    omega_base_cov: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be positive")
        if self.n_ridge < 1:
            raise ValueError("n_ridge must be positive")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.activation == "constant" and self.n_ridge != 1:
            raise ValueError("constant activation requires n_ridge == 1")
        for name in ("tau", "nu", "lam", "nu_sigma", "lambda_sigma"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.omega_base_cov is not None:
            if any(v <= 0.0 for v in self.omega_base_cov):
                raise ValueError("omega_base_cov entries must be positive")

    def with_tau_from_range(self, y_min: float, y_max: float) -> "PriorConfig":
        from .ridge import default_tau

        return replace(self, tau=default_tau(y_min, y_max, self.n_trees, self.n_ridge))

    def omega_scale(self, q: int) -> np.ndarray:
        """Per-coordinate standard deviations sqrt(diag V), length q."""
        if self.omega_base_cov is None:
            return np.ones(q)
        if len(self.omega_base_cov) != q:
            raise ValueError("omega_base_cov length must equal q")
        return np.sqrt(np.asarray(self.omega_base_cov, dtype=float))

    def to_dict(self) -> dict:
        d = {
            "n_trees": self.n_trees,
            "n_ridge": self.n_ridge,
            "activation": self.activation,
            "tau": self.tau,
            "nu": self.nu,
            "lam": self.lam,
            "nu_sigma": self.nu_sigma,
            "lambda_sigma": self.lambda_sigma,
            "rotate_omega": self.rotate_omega,
            "omega_base_cov": list(self.omega_base_cov)
            if self.omega_base_cov is not None
            else None,
        }
        if self.branching.gamma is not None:
            d["branching"] = {"gamma": self.branching.gamma}
        else:
            d["branching"] = {
                "base": self.branching.base,
                "exponent": self.branching.exponent,
            }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PriorConfig":
        b = d.get("branching", {})
        if "gamma" in b:
            branching = BranchingPrior(gamma=b["gamma"])
        else:
            branching = BranchingPrior(
                base=b.get("base", 0.95), exponent=b.get("exponent", 2.0)
            )
        cov = d.get("omega_base_cov")
        return cls(
            n_trees=d["n_trees"],
            n_ridge=d["n_ridge"],
            activation=d["activation"],
            tau=d["tau"],
            nu=d["nu"],
            lam=d["lam"],
            nu_sigma=d["nu_sigma"],
            lambda_sigma=d["lambda_sigma"],
            branching=branching,
            rotate_omega=d.get("rotate_omega", False),
            omega_base_cov=tuple(cov) if cov is not None else None,
        )

    def hash(self) -> str:
        """Stable digest of the resolved configuration."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def calibrate_sigma_scale(y: np.ndarray, nu_sigma: float, quantile: float = 0.9) -> float:
    """Scale hyperparameter putting `quantile` prior mass below Var(y).

    With sigma^2 ~ InvGamma(nu_sigma/2, nu_sigma*lambda_sigma/2), solves
    P(sigma^2 < Var(y)) = quantile for lambda_sigma.
    """
    from scipy.special import gammainccinv

    v = float(np.var(y))
    if v <= 0.0:
        raise ValueError("outcome variance must be positive to calibrate the noise prior")
    return 2.0 * v * float(gammainccinv(nu_sigma / 2.0, quantile)) / nu_sigma


def initial_sigma2(y: np.ndarray) -> float:
    v = float(np.var(y))
    return v if v > 0.0 else 1.0


def split_prob_table(branching: BranchingPrior, max_depth: int = MAX_DEPTH) -> np.ndarray:
    """Split probabilities by depth, 0 at and beyond the cap."""
    out = np.zeros(max_depth + 2)
    for d in range(max_depth):
        out[d] = branching.split_prob(d)
    return out


def log_inv_gamma_pdf(x: float, shape: float, scale: float) -> float:
    """Log density of InvGamma(shape, scale) at x."""
    return (
        shape * math.log(scale)
        - math.lgamma(shape)
        - (shape + 1.0) * math.log(x)
        - scale / x
    )
