"""Gibbs sampler with marginalized outer weights.

Each iteration sweeps the trees in order.  For tree m we form the partial
residual (outcome minus all other trees' fits), propose a structural move
(grow / prune) or a redraw of all leaf inner weights (change), and accept
with a Metropolis-Hastings ratio in which the outer weights are integrated
out analytically.  Because proposals draw inner weights from their prior,
the prior and proposal densities of the inner weights cancel, leaving only
tree-shape, marginal-likelihood, and selection terms.  Outer weights are
then refreshed from their conjugate Gaussian conditional, and finally the
noise variance (or, for binary outcomes, the latent probit values) is
updated.

Per-tree work is O(n (D^2 + D) + L (D^3 + D^2)): grow and prune touch only
the target leaf's rows, the change move rebuilds each leaf's basis once,
and cached bases make the conjugate refresh a single pass over the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import truncnorm

from . import _kernels
from .config import PriorConfig
from .data import Dataset
from .errors import NoSplittableVariableError, NumericalError
from .model import Ensemble
from .ridge import ACTIVATION_CODES, build_basis, sample_leaf_params
from .trees import (
    DecisionRule,
    LeafParams,
    PredictorSpace,
    RidgeTree,
    assign_rows,
    grow_structure,
    node_depth,
    prune_structure,
    reachable_bounds,
    sample_decision_rule,
    sample_tree_prior,
)

__all__ = [
    "SuffStats",
    "leaf_suffstats",
    "log_marginal_leaf",
    "draw_beta",
    "ChainState",
    "update_tree",
    "update_sigma2",
    "update_latent_binary",
    "gibbs_iteration",
    "run_chain",
    "sample_ensemble_prior",
]

MOVE_GROW, MOVE_PRUNE, MOVE_CHANGE = "grow", "prune", "change"


# ---------------------------------------------------------------------------
# Conjugate leaf computations (reference implementations; the sweep itself
# uses the compiled kernels, which these mirror exactly).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SuffStats:
    """Leaf posterior precision P, shifted mean Theta, and row count."""

    precision: np.ndarray
    theta: np.ndarray
    n_obs: int


def leaf_suffstats(phi: np.ndarray, r: np.ndarray, sigma2: float, tau: float) -> SuffStats:
    """P = Phi'Phi / sigma2 + I / tau^2 and Theta = Phi'r / sigma2.

    An empty leaf yields the prior-only stats P = I / tau^2, Theta = 0.
    """
    if sigma2 <= 0.0 or tau <= 0.0:
        raise ValueError("sigma2 and tau must be positive")
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    r = np.asarray(r, dtype=float)
    d = phi.shape[1]
    precision = phi.T @ phi / sigma2 + np.eye(d) / tau**2
    theta = phi.T @ r / sigma2 if r.size else np.zeros(d)
    return SuffStats(precision, theta, r.size)


def _chol_with_guard(precision: np.ndarray) -> tuple[np.ndarray, bool]:
    """Cholesky with the one-shot 1e-12 diagonal jitter fallback."""
    try:
        return np.linalg.cholesky(precision), False
    except np.linalg.LinAlgError:
        pass
    try:
        guarded = precision + _kernels.JITTER * np.eye(precision.shape[0])
        return np.linalg.cholesky(guarded), True
    except np.linalg.LinAlgError as exc:
        raise NumericalError("leaf precision matrix is not positive definite") from exc


def log_marginal_leaf(stats: SuffStats, tau: float) -> float:
    """Leaf term of the collapsed tree posterior.

    Returns -D log(tau) - 0.5 log|P| + 0.5 Theta' P^-1 Theta, computed from
    the Cholesky factor of P.  Adding the Gaussian base terms
    -n/2 log(2 pi sigma2) - |r|^2 / (2 sigma2) recovers the exact log
    marginal density of the leaf's residuals.
    """
    chol, _ = _chol_with_guard(stats.precision)
    d = stats.theta.shape[0]
    logdet = 2.0 * float(np.log(np.diag(chol)).sum())
    w = np.linalg.solve(chol, stats.theta)
    return -d * math.log(tau) - 0.5 * logdet + 0.5 * float(w @ w)


def draw_beta(stats: SuffStats, rng: np.random.Generator) -> np.ndarray:
    """Sample the outer weights from N(P^-1 Theta, P^-1)."""
    chol, _ = _chol_with_guard(stats.precision)
    w = np.linalg.solve(chol, stats.theta)
    mean = np.linalg.solve(chol.T, w)
    noise = np.linalg.solve(chol.T, rng.standard_normal(stats.theta.shape[0]))
    return mean + noise


# ---------------------------------------------------------------------------
# Sampler state
# ---------------------------------------------------------------------------


@dataclass
class TreeState:
    """One tree plus its cached row layout.

    Rows are grouped into contiguous per-leaf blocks: `row_order[starts[b] :
    starts[b + 1]]` are the rows of `leaf_order[b]`, and `phi` holds their
    basis values in the same layout.  Sibling leaves created by a grow stay
    adjacent, so a prune merges neighbouring blocks in place.

    During sampling the authoritative outer weights live in `betas`
    (aligned with `leaf_order`); the beta fields inside `tree` are only
    materialized on snapshots to avoid rebuilding node payloads every
    update.
    """

    tree: RidgeTree
    leaf_order: list[int]
    starts: np.ndarray
    row_order: np.ndarray
    phi: np.ndarray
    fitted: np.ndarray
    betas: np.ndarray

    @classmethod
    def build(cls, tree: RidgeTree, x: np.ndarray, z: np.ndarray, activation: str) -> "TreeState":
        n = x.shape[0]
        rows_by_leaf = assign_rows(tree, x)
        leaf_order = _dfs_leaves(tree)
        d = tree.leaf_params(leaf_order[0]).beta.shape[0]
        row_order = np.empty(n, dtype=np.int64)
        starts = np.zeros(len(leaf_order) + 1, dtype=np.int64)
        phi = np.empty((n, d))
        fitted = np.empty(n)
        betas = np.empty((len(leaf_order), d))
        pos = 0
        for b, leaf_id in enumerate(leaf_order):
            rows = rows_by_leaf[leaf_id]
            starts[b] = pos
            row_order[pos : pos + rows.size] = rows
            params = tree.leaf_params(leaf_id)
            betas[b] = params.beta
            block = build_basis(z[rows], params, activation) if rows.size else np.empty((0, d))
            phi[pos : pos + rows.size] = block
            fitted[rows] = block @ params.beta
            pos += rows.size
        starts[-1] = pos
        return cls(tree, leaf_order, starts, row_order, phi, fitted, betas)

    def block_of(self, leaf_id: int) -> int:
        return self.leaf_order.index(leaf_id)

    def prunable_in_order(self) -> list[int]:
        """Internal nodes with two leaf children, derived from the block
        layout (sibling leaves are always adjacent)."""
        order = self.leaf_order
        out = []
        for i in range(len(order) - 1):
            a = order[i]
            if (a & 1) == 0 and order[i + 1] == a + 1:
                out.append(a >> 1)
        return out

    def materialized_tree(self) -> RidgeTree:
        """Tree with the current outer weights written into its leaves."""
        updates = {
            leaf_id: self.tree.leaf_params(leaf_id).with_beta(self.betas[b])
            for b, leaf_id in enumerate(self.leaf_order)
        }
        return self.tree.replace_leaves(updates)


def _dfs_leaves(tree: RidgeTree) -> list[int]:
    out: list[int] = []
    stack = [1]
    while stack:
        node = stack.pop()
        if tree.is_leaf(node):
            out.append(node)
        else:
            stack.append(2 * node + 1)
            stack.append(2 * node)
    return out


@dataclass
class ChainState:
    """Mutable state of one MCMC chain."""

    config: PriorConfig
    x: np.ndarray
    z: np.ndarray
    space: PredictorSpace
    target: np.ndarray
    trees: list[TreeState]
    sigma2: float
    residual: np.ndarray
    rng: np.random.Generator
    binary: bool = False
    y_labels: np.ndarray | None = None
    iteration: int = 0
    jitter_events: int = 0
    numerical_rejects: int = 0
    proposed: dict[str, int] = field(default_factory=lambda: {m: 0 for m in (MOVE_GROW, MOVE_PRUNE, MOVE_CHANGE)})
    accepted: dict[str, int] = field(default_factory=lambda: {m: 0 for m in (MOVE_GROW, MOVE_PRUNE, MOVE_CHANGE)})
    _scratch: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        self._scratch = np.empty(self.target.shape[0])

    @classmethod
    def initialize(
        cls,
        dataset: Dataset,
        config: PriorConfig,
        rng: np.random.Generator,
        sigma2: float | None = None,
    ) -> "ChainState":
        """Cold start: single-leaf trees with prior inner weights, beta = 0."""
        space = PredictorSpace.of(dataset)
        q = dataset.q
        trees = []
        for _ in range(config.n_trees):
            params = sample_leaf_params(config, q, rng)
            trees.append(TreeState.build(RidgeTree.single_leaf(params), dataset.x, dataset.z, config.activation))
        if dataset.binary:
            sigma2 = 1.0
            target = np.zeros(dataset.n)  # replaced by the first latent draw
        else:
            if sigma2 is None:
                sigma2 = float(np.var(dataset.y)) or 1.0
            target = dataset.y.copy()
        state = cls(
            config=config,
            x=dataset.x,
            z=dataset.z,
            space=space,
            target=target,
            trees=trees,
            sigma2=sigma2,
            residual=target.copy(),
            rng=rng,
            binary=dataset.binary,
            y_labels=dataset.y.copy() if dataset.binary else None,
        )
        state._sync_residual()
        if dataset.binary:
            update_latent_binary(state, rng)
        return state

    @classmethod
    def from_ensemble(
        cls,
        dataset: Dataset,
        config: PriorConfig,
        ensemble: Ensemble,
        rng: np.random.Generator,
    ) -> "ChainState":
        trees = [TreeState.build(t, dataset.x, dataset.z, config.activation) for t in ensemble.trees]
        state = cls(
            config=config,
            x=dataset.x,
            z=dataset.z,
            space=PredictorSpace.of(dataset),
            target=dataset.y.copy(),
            trees=trees,
            sigma2=ensemble.sigma2,
            residual=dataset.y.copy(),
            rng=rng,
            binary=dataset.binary,
            y_labels=dataset.y.copy() if dataset.binary else None,
        )
        state._sync_residual()
        return state

    def _sync_residual(self):
        total = np.zeros(self.target.shape[0])
        for ts in self.trees:
            total += ts.fitted
        self.residual = self.target - total

    def set_target(self, new_target: np.ndarray):
        """Swap the regression target (new outcome draw or latent vector)."""
        new_target = np.asarray(new_target, dtype=float)
        self.residual = self.residual + (new_target - self.target)
        self.target = new_target

    def total_fit(self) -> np.ndarray:
        return self.target - self.residual

    def snapshot(self, y_center: float = 0.0) -> Ensemble:
        return Ensemble(
            trees=tuple(ts.materialized_tree() for ts in self.trees),
            sigma2=self.sigma2,
            y_center=y_center,
            activation=self.config.activation,
        )

    def total_leaves(self) -> int:
        return sum(ts.tree.n_leaves for ts in self.trees)


# ---------------------------------------------------------------------------
# Moves
# ---------------------------------------------------------------------------


def _pick_move(n_leaves: int, rng: np.random.Generator) -> str:
    u = rng.uniform()
    if n_leaves == 1:
        return MOVE_GROW if u < 0.8 else MOVE_CHANGE
    if u < 0.4:
        return MOVE_GROW
    if u < 0.8:
        return MOVE_PRUNE
    return MOVE_CHANGE


_LOG_08 = math.log(0.8)
_LOG_04 = math.log(0.4)
_LOG_02 = math.log(0.2)


def _log_move_prob(move: str, n_leaves: int) -> float:
    if move == MOVE_CHANGE:
        return _LOG_02
    if n_leaves == 1:
        return _LOG_08 if move == MOVE_GROW else -math.inf
    return _LOG_04


def _inner_arrays(config: PriorConfig, q: int, rng: np.random.Generator) -> tuple[float, np.ndarray, np.ndarray]:
    """(rho, omega, offsets) for one proposed leaf, zeros in constant mode."""
    if config.activation == "constant":
        return 1.0, np.zeros((q, 1)), np.zeros(1)
    from .ridge import sample_inner_weights

    return sample_inner_weights(config, q, rng)


def _inner_arrays_pair(config: PriorConfig, q: int, rng: np.random.Generator):
    """Inner weights for two proposed leaves with batched draws (same
    distribution as two sequential prior draws)."""
    if config.activation == "constant":
        zero = (1.0, np.zeros((q, 1)), np.zeros(1))
        return zero, zero
    if config.rotate_omega:
        return _inner_arrays(config, q, rng), _inner_arrays(config, q, rng)
    d = config.n_ridge
    rho = rng.gamma(config.nu / 2.0, 2.0 / (config.nu * config.lam), size=2)
    eps = rng.standard_normal((2, q, d))
    scale = config.omega_scale(q)[:, None]
    omega_l = scale * eps[0] / math.sqrt(rho[0])
    omega_r = scale * eps[1] / math.sqrt(rho[1])
    if config.activation == "cosine":
        offs = rng.uniform(0.0, 2.0 * math.pi, size=(2, d))
    else:
        offs = rng.standard_normal((2, d))
    return (float(rho[0]), omega_l, offs[0]), (float(rho[1]), omega_r, offs[1])


def _sample_rule_fast(
    tree: RidgeTree, leaf_id: int, space: PredictorSpace, rng: np.random.Generator
) -> DecisionRule:
    """Same distribution as `sample_decision_rule` over this leaf's region,
    but for all-continuous spaces only the chosen variable's interval is
    reconstructed from the path."""
    if space.categorical_levels:
        return sample_decision_rule(reachable_bounds(tree, leaf_id, space), rng)
    j = int(rng.integers(space.p))
    lo, hi = 0.0, 1.0
    depth = node_depth(leaf_id)
    for i in range(depth, 0, -1):
        rule = tree.nodes[leaf_id >> i]
        if rule.variable == j:
            if ((leaf_id >> (i - 1)) & 1) == 0:
                hi = min(hi, rule.cutpoint)
            else:
                lo = max(lo, rule.cutpoint)
    return DecisionRule(variable=j, cutpoint=float(rng.uniform(lo, hi)))


def _propose_grow(
    state: ChainState, ts: TreeState, r_part: np.ndarray, forced: dict | None = None
) -> tuple[float, dict] | None:
    """Returns (log_ratio, apply_info) or None when the proposal is void.

    `forced` pins the leaf, rule, and child parameters instead of drawing
    them; used by tests that need matched forward/reverse proposals.
    """
    tree = ts.tree
    rng = state.rng
    n_leaves = len(ts.leaf_order)
    if forced is None:
        leaf_id = ts.leaf_order[int(rng.integers(n_leaves))]
    else:
        leaf_id = forced["leaf_id"]
    depth = node_depth(leaf_id)
    split_p = state.config.branching.split_prob(depth)
    if split_p <= 0.0:
        return None  # depth cap: the grown tree has zero prior mass
    if forced is None:
        try:
            rule = _sample_rule_fast(tree, leaf_id, state.space, rng)
        except NoSplittableVariableError:
            return None
        (rho_l, omega_l, off_l), (rho_r, omega_r, off_r) = _inner_arrays_pair(
            state.config, state.z.shape[1], rng
        )
    else:
        rule = forced["rule"]
        rho_l, omega_l, off_l = forced["left"]
        rho_r, omega_r, off_r = forced["right"]

    block = ts.block_of(leaf_id)
    lo, hi = int(ts.starts[block]), int(ts.starts[block + 1])
    if rule.left_levels is not None:
        n_levels = state.space.categorical_levels[rule.variable]
        lut = np.zeros(n_levels, dtype=np.bool_)
        lut[sorted(rule.left_levels)] = True
        use_lut, cutpoint = True, 0.0
    else:
        lut = np.zeros(0, dtype=np.bool_)
        use_lut, cutpoint = False, float(rule.cutpoint)
    go_left, n_left, phi_l, phi_r, lml_p, lml_l, lml_r, status = _kernels.grow_eval(
        state.x[:, rule.variable],
        lut,
        cutpoint,
        use_lut,
        state.z,
        ts.row_order,
        lo,
        hi,
        ts.phi,
        r_part,
        omega_l,
        off_l,
        omega_r,
        off_r,
        ACTIVATION_CODES[state.config.activation],
        state.sigma2,
        state.config.tau,
    )
    if status == 2:
        state.numerical_rejects += 1
        return None
    if status == 1:
        state.jitter_events += 1

    split_p_child = state.config.branching.split_prob(depth + 1)
    log_prior = math.log(split_p) + 2.0 * math.log1p(-split_p_child) - math.log1p(-split_p)
    # Rule density appears in both the prior ratio and the forward proposal
    # density, so it cancels and is omitted from both.
    n_nog_new = len(ts.prunable_in_order()) + 1
    if leaf_id > 1 and isinstance(tree.nodes.get(leaf_id ^ 1), LeafParams):
        n_nog_new -= 1  # the parent stops being prunable
    log_fwd = _log_move_prob(MOVE_GROW, n_leaves) - math.log(n_leaves)
    log_rev = _log_move_prob(MOVE_PRUNE, n_leaves + 1) - math.log(n_nog_new)
    log_ratio = log_prior + (lml_l + lml_r - lml_p) + log_rev - log_fwd
    info = {
        "kind": MOVE_GROW,
        "leaf_id": leaf_id,
        "rule": rule,
        "left": LeafParams(rho_l, omega_l, off_l, np.zeros(state.config.n_ridge)),
        "right": LeafParams(rho_r, omega_r, off_r, np.zeros(state.config.n_ridge)),
        "block": block,
        "go_left": go_left,
        "n_left": int(n_left),
        "phi_left": phi_l,
        "phi_right": phi_r,
    }
    return log_ratio, info


def _apply_grow(ts: TreeState, info: dict):
    block = info["block"]
    lo, hi = int(ts.starts[block]), int(ts.starts[block + 1])
    leaf_id = info["leaf_id"]
    rows = ts.row_order[lo:hi]
    go_left = info["go_left"]
    n_left = info["n_left"]
    ts.row_order[lo:hi] = np.concatenate([rows[go_left], rows[~go_left]])
    ts.phi[lo : lo + n_left] = info["phi_left"]
    ts.phi[lo + n_left : hi] = info["phi_right"]
    ts.starts = np.insert(ts.starts, block + 1, lo + n_left)
    ts.leaf_order[block : block + 1] = [2 * leaf_id, 2 * leaf_id + 1]
    ts.tree = grow_structure(ts.tree, leaf_id, info["rule"], info["left"], info["right"])


def _propose_prune(
    state: ChainState, ts: TreeState, r_part: np.ndarray, forced: dict | None = None
) -> tuple[float, dict] | None:
    tree = ts.tree
    rng = state.rng
    candidates = ts.prunable_in_order()
    if forced is None:
        node_id = candidates[int(rng.integers(len(candidates)))]
        rho_m, omega_m, off_m = _inner_arrays(state.config, state.z.shape[1], rng)
    else:
        node_id = forced["node_id"]
        rho_m, omega_m, off_m = forced["merged"]

    b_left = ts.block_of(2 * node_id)
    lo, mid, hi = (
        int(ts.starts[b_left]),
        int(ts.starts[b_left + 1]),
        int(ts.starts[b_left + 2]),
    )
    phi_m, lml_m, lml_l, lml_r, status = _kernels.prune_eval(
        state.z,
        ts.row_order,
        lo,
        mid,
        hi,
        ts.phi,
        r_part,
        omega_m,
        off_m,
        ACTIVATION_CODES[state.config.activation],
        state.sigma2,
        state.config.tau,
    )
    if status == 2:
        state.numerical_rejects += 1
        return None
    if status == 1:
        state.jitter_events += 1

    depth = node_depth(node_id)
    split_p = state.config.branching.split_prob(depth)
    split_p_child = state.config.branching.split_prob(depth + 1)
    log_prior = math.log1p(-split_p) - math.log(split_p) - 2.0 * math.log1p(-split_p_child)
    n_leaves = len(ts.leaf_order)
    n_leaves_new = n_leaves - 1
    log_fwd = _log_move_prob(MOVE_PRUNE, n_leaves) - math.log(len(candidates))
    log_rev = _log_move_prob(MOVE_GROW, n_leaves_new) - math.log(n_leaves_new)
    log_ratio = log_prior + (lml_m - lml_l - lml_r) + log_rev - log_fwd
    info = {
        "kind": MOVE_PRUNE,
        "node_id": node_id,
        "merged": LeafParams(rho_m, omega_m, off_m, np.zeros(state.config.n_ridge)),
        "block": b_left,
        "phi_merged": phi_m,
    }
    return log_ratio, info


def _apply_prune(ts: TreeState, info: dict):
    b = info["block"]
    lo, hi = int(ts.starts[b]), int(ts.starts[b + 2])
    ts.phi[lo:hi] = info["phi_merged"]
    ts.starts = np.delete(ts.starts, b + 1)
    ts.leaf_order[b : b + 2] = [info["node_id"]]
    ts.tree = prune_structure(ts.tree, info["node_id"], info["merged"])


def _propose_change(
    state: ChainState, ts: TreeState, r_part: np.ndarray, forced: dict | None = None
) -> tuple[float, dict] | None:
    rng = state.rng
    q = state.z.shape[1]
    d = state.config.n_ridge
    n_leaf = len(ts.leaf_order)
    if forced is not None:
        rho_all = forced["rho"]
        omega_all = forced["omega"]
        offsets_all = forced["offsets"]
    else:
        config = state.config
        if config.activation == "constant":
            omega_all = np.zeros((n_leaf, q, d))
            offsets_all = np.zeros((n_leaf, d))
            rho_all = np.ones(n_leaf)
        elif config.rotate_omega:
            omega_all = np.empty((n_leaf, q, d))
            offsets_all = np.empty((n_leaf, d))
            rho_all = np.empty(n_leaf)
            for b in range(n_leaf):
                rho_all[b], omega_all[b], offsets_all[b] = _inner_arrays(config, q, rng)
        else:
            # Batched equivalent of per-leaf prior draws.
            rho_all = rng.gamma(config.nu / 2.0, 2.0 / (config.nu * config.lam), size=n_leaf)
            eps = rng.standard_normal((n_leaf, q, d))
            scale = config.omega_scale(q)
            omega_all = scale[None, :, None] * eps / np.sqrt(rho_all)[:, None, None]
            if config.activation == "cosine":
                offsets_all = rng.uniform(0.0, 2.0 * math.pi, size=(n_leaf, d))
            else:
                offsets_all = rng.standard_normal((n_leaf, d))
    phi_new, delta, status = _kernels.change_eval(
        state.z,
        ts.row_order,
        ts.starts,
        ts.phi,
        r_part,
        omega_all,
        offsets_all,
        ACTIVATION_CODES[state.config.activation],
        state.sigma2,
        state.config.tau,
    )
    if status == 2:
        state.numerical_rejects += 1
        return None
    if status == 1:
        state.jitter_events += 1
    info = {
        "kind": MOVE_CHANGE,
        "phi_new": phi_new,
        "rho": rho_all,
        "omega": omega_all,
        "offsets": offsets_all,
    }
    return float(delta), info


def _apply_change(ts: TreeState, info: dict):
    ts.phi = info["phi_new"]
    updates = {}
    for b, leaf_id in enumerate(ts.leaf_order):
        old = ts.tree.leaf_params(leaf_id)
        updates[leaf_id] = LeafParams(
            float(info["rho"][b]), info["omega"][b], info["offsets"][b], old.beta
        )
    ts.tree = ts.tree.replace_leaves(updates)


def propose_and_accept(state: ChainState, m: int, r_part: np.ndarray) -> tuple[str, bool]:
    """One MH step on tree m against the partial residual; returns
    (move kind, accepted)."""
    ts = state.trees[m]
    move = _pick_move(len(ts.leaf_order), state.rng)
    state.proposed[move] += 1
    if move == MOVE_GROW:
        proposal = _propose_grow(state, ts, r_part)
    elif move == MOVE_PRUNE:
        proposal = _propose_prune(state, ts, r_part)
    else:
        proposal = _propose_change(state, ts, r_part)
    if proposal is None:
        return move, False
    log_ratio, info = proposal
    u = state.rng.uniform()
    if not (log_ratio >= 0.0 or (u > 0.0 and math.log(u) < log_ratio)):
        return move, False
    state.accepted[move] += 1
    if move == MOVE_GROW:
        _apply_grow(ts, info)
    elif move == MOVE_PRUNE:
        _apply_prune(ts, info)
    else:
        _apply_change(ts, info)
    return move, True


# ---------------------------------------------------------------------------
# Full conditional updates
# ---------------------------------------------------------------------------


def update_tree(state: ChainState, m: int) -> tuple[str, bool]:
    """MH move on tree m, then conjugate outer weights and fit refresh."""
    ts = state.trees[m]
    r_part = np.add(state.residual, ts.fitted, out=state._scratch)
    move, accepted = propose_and_accept(state, m, r_part)
    n_leaf = len(ts.leaf_order)
    normals = state.rng.standard_normal((n_leaf, state.config.n_ridge))
    beta, fitted_sorted, status = _kernels.beta_and_fit(
        ts.phi, ts.starts, r_part, ts.row_order, state.sigma2, state.config.tau, normals
    )
    if status == 2:
        # Unreachable for P >= I/tau^2; keep the previous weights rather
        # than crash mid-chain.
        state.numerical_rejects += 1
        state.residual = np.subtract(r_part, ts.fitted, out=state.residual)
        return move, accepted
    if status == 1:
        state.jitter_events += 1
    ts.betas = beta
    ts.fitted[ts.row_order] = fitted_sorted
    state.residual = np.subtract(r_part, ts.fitted, out=state.residual)
    return move, accepted


def update_sigma2(state: ChainState) -> float:
    """Conjugate inverse-gamma draw given the current fit."""
    n = state.target.shape[0]
    sse = float(state.residual @ state.residual)
    shape = 0.5 * (state.config.nu_sigma + n)
    scale = 0.5 * (state.config.nu_sigma * state.config.lambda_sigma + sse)
    g = state.rng.gamma(shape, 1.0)
    state.sigma2 = scale / g
    return state.sigma2


def update_latent_binary(state: ChainState, rng: np.random.Generator | None = None) -> np.ndarray:
    """Truncated-normal latent draw for probit outcomes (sigma2 fixed at 1)."""
    rng = rng or state.rng
    f = state.total_fit()
    y = state.y_labels
    u = rng.uniform(size=f.shape[0])
    a = np.where(y == 1.0, -f, -np.inf)
    b = np.where(y == 1.0, np.inf, -f)
    latent = truncnorm.ppf(u, a, b, loc=f, scale=1.0)
    state.set_target(latent)
    return latent


def gibbs_iteration(state: ChainState) -> dict:
    """One full sweep: every tree, then sigma2 (or the latent vector)."""
    for m in range(len(state.trees)):
        update_tree(state, m)
    if state.binary:
        update_latent_binary(state)
    else:
        update_sigma2(state)
    state._sync_residual()  # kill float drift; exact recompute is O(nM)
    state.iteration += 1
    return _diagnostics_record(state)


def _diagnostics_record(state: ChainState) -> dict:
    n = state.target.shape[0]
    sse = float(state.residual @ state.residual)
    loglik = -0.5 * n * math.log(2.0 * math.pi * state.sigma2) - 0.5 * sse / state.sigma2
    rec = {
        "iteration": state.iteration,
        "sigma2": state.sigma2,
        "loglik": loglik,
        "leaves": state.total_leaves(),
    }
    for move in (MOVE_GROW, MOVE_PRUNE, MOVE_CHANGE):
        rec[f"proposed_{move}"] = state.proposed[move]
        rec[f"accepted_{move}"] = state.accepted[move]
    return rec


# ---------------------------------------------------------------------------
# Chain driver
# ---------------------------------------------------------------------------


def run_chain(
    dataset: Dataset,
    config: PriorConfig,
    iterations: int,
    burn_in: int,
    thin: int,
    rng: np.random.Generator,
    y_center: float = 0.0,
    sigma2_init: float | None = None,
    diagnostics: list | None = None,
) -> list[Ensemble]:
    """Run one chain and return the thinned post-burn-in snapshots.

    The draw count is exactly (iterations - burn_in) / thin, which must be
    an integer.  Deterministic given the generator state.
    """
    if iterations < burn_in or burn_in < 0 or thin < 1:
        raise ValueError("need iterations >= burn_in >= 0 and thin >= 1")
    if (iterations - burn_in) % thin != 0:
        raise ValueError("iterations - burn_in must be a multiple of thin")
    state = ChainState.initialize(dataset, config, rng, sigma2=sigma2_init)
    draws: list[Ensemble] = []
    for it in range(1, iterations + 1):
        rec = gibbs_iteration(state)
        if diagnostics is not None:
            diagnostics.append(rec)
        if it > burn_in and (it - burn_in) % thin == 0:
            draws.append(state.snapshot(y_center))
    return draws


def sample_ensemble_prior(
    dataset: Dataset, config: PriorConfig, rng: np.random.Generator
) -> Ensemble:
    """Draw a full ensemble (trees, leaf params, sigma2) from the prior."""
    space = PredictorSpace.of(dataset)
    q = dataset.q

    def leaf_sampler():
        beta = rng.normal(0.0, config.tau, size=config.n_ridge)
        return sample_leaf_params(config, q, rng, beta=beta)

    trees = tuple(
        sample_tree_prior(config, space, rng, leaf_sampler) for _ in range(config.n_trees)
    )
    if dataset.binary:
        sigma2 = 1.0
    else:
        shape = 0.5 * config.nu_sigma
        scale = 0.5 * config.nu_sigma * config.lambda_sigma
        sigma2 = scale / rng.gamma(shape, 1.0)
    return Ensemble(trees=trees, sigma2=sigma2, y_center=0.0, activation=config.activation)
