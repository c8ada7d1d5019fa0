"""Decision-tree mechanics: routing, structural edits, and the shape prior.

Trees are stored as a flat map from heap index to node payload: the root is
node 1 and node k has children 2k and 2k+1, so ids are stable across grow
and prune edits.  Internal nodes hold a `DecisionRule`; leaves hold
`LeafParams`.  Trees are treated as immutable values: structural edits
return a new tree sharing untouched node payloads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import PriorConfig
from .errors import InvalidMoveError, NoSplittableVariableError

__all__ = [
    "DecisionRule",
    "LeafParams",
    "RidgeTree",
    "PredictorSpace",
    "NodeBounds",
    "node_depth",
    "reachable_bounds",
    "sample_decision_rule",
    "rule_log_density",
    "sample_tree_prior",
    "log_tree_prior",
    "grow_structure",
    "prune_structure",
    "assign_leaf",
    "assign_rows",
]


@dataclass(frozen=True)
class DecisionRule:
    """Split on x[variable]: continuous rules route left iff value < cutpoint,
    categorical rules route left iff the level code is in `left_levels`."""

    variable: int
    cutpoint: float | None = None
    left_levels: frozenset[int] | None = None

    def __post_init__(self):
        if (self.cutpoint is None) == (self.left_levels is None):
            raise ValueError("rule must set exactly one of cutpoint / left_levels")

    @property
    def is_categorical(self) -> bool:
        return self.left_levels is not None

    def goes_left(self, value: float) -> bool:
        if self.left_levels is not None:
            return int(value) in self.left_levels
        return value < self.cutpoint


@dataclass(frozen=True)
class LeafParams:
    """Leaf ridge expansion: scale rho, inner directions omega (q x D),
    offsets b (D,), and outer weights beta (D,)."""

    rho: float
    omega: np.ndarray
    offsets: np.ndarray
    beta: np.ndarray

    @classmethod
    def constant(cls, q: int, beta0: float = 0.0) -> "LeafParams":
        return cls(1.0, np.zeros((q, 1)), np.zeros(1), np.array([beta0]))

    def with_beta(self, beta: np.ndarray) -> "LeafParams":
        return LeafParams(self.rho, self.omega, self.offsets, np.asarray(beta, dtype=float))


@dataclass(frozen=True)
class PredictorSpace:
    """What the tree rules can split on: p columns, some categorical."""

    p: int
    categorical_levels: dict[int, int] = field(default_factory=dict)

    @classmethod
    def of(cls, dataset) -> "PredictorSpace":
        return cls(dataset.p, dict(dataset.categorical_levels))


def node_depth(node_id: int) -> int:
    return node_id.bit_length() - 1


@dataclass(frozen=True)
class RidgeTree:
    """Binary decision tree with ridge-expansion leaves."""

    nodes: dict[int, DecisionRule | LeafParams]

    @classmethod
    def single_leaf(cls, params: LeafParams) -> "RidgeTree":
        return cls({1: params})

    def is_leaf(self, node_id: int) -> bool:
        return isinstance(self.nodes[node_id], LeafParams)

    def leaf_ids(self) -> list[int]:
        return sorted(k for k, v in self.nodes.items() if isinstance(v, LeafParams))

    def internal_ids(self) -> list[int]:
        return sorted(k for k, v in self.nodes.items() if isinstance(v, DecisionRule))

    def prunable_ids(self) -> list[int]:
        """Internal nodes whose children are both leaves."""
        return [
            k
            for k in self.internal_ids()
            if isinstance(self.nodes.get(2 * k), LeafParams)
            and isinstance(self.nodes.get(2 * k + 1), LeafParams)
        ]

    @property
    def n_leaves(self) -> int:
        return sum(1 for v in self.nodes.values() if isinstance(v, LeafParams))

    def leaf_params(self, leaf_id: int) -> LeafParams:
        params = self.nodes[leaf_id]
        if not isinstance(params, LeafParams):
            raise InvalidMoveError(f"node {leaf_id} is not a leaf")
        return params

    def replace_leaves(self, updates: dict[int, LeafParams]) -> "RidgeTree":
        for k in updates:
            if not isinstance(self.nodes.get(k), LeafParams):
                raise InvalidMoveError(f"node {k} is not a leaf")
        return RidgeTree({**self.nodes, **updates})


def assign_leaf(tree: RidgeTree, x: np.ndarray) -> int:
    """Route a single point to its leaf id."""
    node = 1
    payload = tree.nodes[node]
    while isinstance(payload, DecisionRule):
        node = 2 * node if payload.goes_left(x[payload.variable]) else 2 * node + 1
        payload = tree.nodes[node]
    return node


def assign_rows(tree: RidgeTree, x: np.ndarray) -> dict[int, np.ndarray]:
    """Route every row of x; returns leaf id -> row indices (ascending)."""
    out: dict[int, np.ndarray] = {}
    stack = [(1, np.arange(x.shape[0]))]
    while stack:
        node, rows = stack.pop()
        payload = tree.nodes[node]
        if isinstance(payload, LeafParams):
            out[node] = rows
            continue
        values = x[rows, payload.variable]
        if payload.left_levels is not None:
            left = np.isin(values.astype(np.int64), sorted(payload.left_levels))
        else:
            left = values < payload.cutpoint
        stack.append((2 * node, rows[left]))
        stack.append((2 * node + 1, rows[~left]))
    return out


@dataclass
class NodeBounds:
    """Predictor region reachable at a node: open intervals for continuous
    columns and surviving level sets for categorical columns."""

    lower: np.ndarray
    upper: np.ndarray
    levels: dict[int, tuple[int, ...]]

    def splittable(self) -> list[int]:
        out = []
        for j in range(self.lower.shape[0]):
            if j in self.levels:
                if len(self.levels[j]) >= 2:
                    out.append(j)
            else:
                out.append(j)
        return out


def reachable_bounds(tree: RidgeTree, node_id: int, space: PredictorSpace) -> NodeBounds:
    """Intersect the rules on the root-to-node path."""
    lower = np.zeros(space.p)
    upper = np.ones(space.p)
    levels = {j: tuple(range(k)) for j, k in space.categorical_levels.items()}
    depth = node_depth(node_id)
    for i in range(depth, 0, -1):
        parent = node_id >> i
        went_left = ((node_id >> (i - 1)) & 1) == 0
        rule = tree.nodes[parent]
        j = rule.variable
        if rule.left_levels is not None:
            if went_left:
                levels[j] = tuple(v for v in levels[j] if v in rule.left_levels)
            else:
                levels[j] = tuple(v for v in levels[j] if v not in rule.left_levels)
        else:
            if went_left:
                upper[j] = min(upper[j], rule.cutpoint)
            else:
                lower[j] = max(lower[j], rule.cutpoint)
    return NodeBounds(lower, upper, levels)


def sample_decision_rule(bounds: NodeBounds, rng: np.random.Generator) -> DecisionRule:
    """Draw a rule valid at a node: uniform variable among the splittable
    ones, then a uniform cutpoint over the reachable interval or a uniform
    nonempty proper subset of the reachable levels."""
    candidates = bounds.splittable()
    if not candidates:
        raise NoSplittableVariableError("no variable can split this node")
    j = candidates[rng.integers(len(candidates))]
    if j in bounds.levels:
        reachable = bounds.levels[j]
        k = len(reachable)
        # Uniform over the 2^k - 2 nonempty proper subsets via a bitmask.
        mask = int(rng.integers(1, (1 << k) - 1))
        left = frozenset(reachable[i] for i in range(k) if mask >> i & 1)
        return DecisionRule(variable=j, left_levels=left)
    cut = float(rng.uniform(bounds.lower[j], bounds.upper[j]))
    return DecisionRule(variable=j, cutpoint=cut)


def rule_log_density(rule: DecisionRule, bounds: NodeBounds) -> float:
    """Log density/probability of `rule` under `sample_decision_rule`."""
    candidates = bounds.splittable()
    total = -math.log(len(candidates))
    j = rule.variable
    if rule.left_levels is not None:
        k = len(bounds.levels[j])
        total -= math.log(2.0**k - 2.0)
    else:
        total -= math.log(bounds.upper[j] - bounds.lower[j])
    return total


def sample_tree_prior(
    config: PriorConfig,
    space: PredictorSpace,
    rng: np.random.Generator,
    leaf_sampler,
) -> RidgeTree:
    """Draw a tree from the branching-process prior.

    `leaf_sampler()` supplies `LeafParams` for each leaf.  Nodes at depth d
    become internal with probability `branching.split_prob(d)`; the cap at
    depth 32 forces a leaf.  A node whose every variable is exhausted also
    stays a leaf.
    """
    nodes: dict[int, DecisionRule | LeafParams] = {}
    tree = RidgeTree(nodes)  # filled in place during construction only
    stack = [1]
    while stack:
        node_id = stack.pop()
        d = node_depth(node_id)
        if rng.uniform() < config.branching.split_prob(d):
            bounds = reachable_bounds(tree, node_id, space)
            try:
                rule = sample_decision_rule(bounds, rng)
            except NoSplittableVariableError:
                nodes[node_id] = leaf_sampler()
                continue
            nodes[node_id] = rule
            # Right child first so the left subtree is generated first.
            stack.append(2 * node_id + 1)
            stack.append(2 * node_id)
        else:
            nodes[node_id] = leaf_sampler()
    return tree


def log_tree_prior(tree: RidgeTree, config: PriorConfig, space: PredictorSpace) -> float:
    """Log prior of the tree structure and its rules (leaf params excluded).

    Sums log split/stop probabilities by depth plus, for each internal node,
    the log density of its rule given the region reachable there.
    """
    branching = config.branching
    total = 0.0
    for node_id in sorted(tree.nodes):
        d = node_depth(node_id)
        ps = branching.split_prob(d)
        if tree.is_leaf(node_id):
            total += math.log1p(-ps) if ps > 0.0 else 0.0
        else:
            if ps <= 0.0:
                return -math.inf
            total += math.log(ps)
            bounds = reachable_bounds(tree, node_id, space)
            total += rule_log_density(tree.nodes[node_id], bounds)
    return total


def grow_structure(
    tree: RidgeTree,
    leaf_id: int,
    rule: DecisionRule,
    left_params: LeafParams,
    right_params: LeafParams,
) -> RidgeTree:
    """Split a leaf into two children under `rule`."""
    if not isinstance(tree.nodes.get(leaf_id), LeafParams):
        raise InvalidMoveError(f"grow target {leaf_id} is not a leaf")
    nodes = dict(tree.nodes)
    nodes[leaf_id] = rule
    nodes[2 * leaf_id] = left_params
    nodes[2 * leaf_id + 1] = right_params
    return RidgeTree(nodes)


def prune_structure(tree: RidgeTree, node_id: int, merged_params: LeafParams) -> RidgeTree:
    """Collapse an internal node with two leaf children back into a leaf."""
    left, right = 2 * node_id, 2 * node_id + 1
    if not isinstance(tree.nodes.get(node_id), DecisionRule):
        raise InvalidMoveError(f"prune target {node_id} is not internal")
    if not (
        isinstance(tree.nodes.get(left), LeafParams)
        and isinstance(tree.nodes.get(right), LeafParams)
    ):
        raise InvalidMoveError(f"prune target {node_id} has non-leaf children")
    nodes = dict(tree.nodes)
    del nodes[left]
    del nodes[right]
    nodes[node_id] = merged_params
    return RidgeTree(nodes)
