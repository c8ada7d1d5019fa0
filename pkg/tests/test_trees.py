import math

import numpy as np
import pytest

from ridgebart.config import BranchingPrior, PriorConfig
from ridgebart.errors import InvalidMoveError, NoSplittableVariableError
from ridgebart.trees import (
    DecisionRule,
    LeafParams,
    PredictorSpace,
    RidgeTree,
    assign_leaf,
    assign_rows,
    grow_structure,
    log_tree_prior,
    node_depth,
    prune_structure,
    reachable_bounds,
    sample_decision_rule,
    sample_tree_prior,
)


def leaf(v=0.0):
    return LeafParams(1.0, np.zeros((1, 1)), np.zeros(1), np.array([v]))


def test_single_leaf_routing():
    tree = RidgeTree.single_leaf(leaf())
    assert assign_leaf(tree, np.array([0.3])) == 1
    assert assign_leaf(tree, np.array([0.9])) == 1


def test_root_rule_strict_inequality():
    tree = RidgeTree({1: DecisionRule(0, cutpoint=0.5), 2: leaf(), 3: leaf()})
    assert assign_leaf(tree, np.array([0.49])) == 2
    assert assign_leaf(tree, np.array([0.5])) == 3
    assert assign_leaf(tree, np.array([0.51])) == 3


def test_nested_rules_hand_trace():
    # Root splits x0 at 0.5; left child splits x0 at 0.25.
    tree = RidgeTree(
        {
            1: DecisionRule(0, cutpoint=0.5),
            2: DecisionRule(0, cutpoint=0.25),
            3: leaf(),
            4: leaf(),
            5: leaf(),
        }
    )
    # x0 = 0.3 goes left at the root (0.3 < 0.5), right at node 2.
    assert assign_leaf(tree, np.array([0.3])) == 5
    assert assign_leaf(tree, np.array([0.2])) == 4
    assert assign_leaf(tree, np.array([0.7])) == 3


def test_categorical_routing():
    tree = RidgeTree(
        {1: DecisionRule(0, left_levels=frozenset({0, 2})), 2: leaf(), 3: leaf()}
    )
    assert assign_leaf(tree, np.array([0.0])) == 2
    assert assign_leaf(tree, np.array([2.0])) == 2
    assert assign_leaf(tree, np.array([1.0])) == 3


def test_partition_property():
    rng = np.random.default_rng(5)
    space = PredictorSpace(3)
    config = PriorConfig(tau=0.5)
    for _ in range(20):
        tree = sample_tree_prior(config, space, rng, lambda: leaf())
        x = rng.uniform(size=(1000, 3))
        rows = assign_rows(tree, x)
        sizes = sum(v.size for v in rows.values())
        assert sizes == 1000
        all_rows = np.sort(np.concatenate([v for v in rows.values()]))
        assert np.array_equal(all_rows, np.arange(1000))
        for i in range(50):
            assert assign_leaf(tree, x[i]) in rows


def test_grow_prune_inversion_simple():
    tree = RidgeTree.single_leaf(leaf(0.3))
    rule = DecisionRule(0, cutpoint=0.4)
    grown = grow_structure(tree, 1, rule, leaf(1.0), leaf(2.0))
    assert grown.n_leaves == 2 and len(grown.nodes) == 3
    back = prune_structure(grown, 1, leaf(0.3))
    assert back.nodes.keys() == tree.nodes.keys()
    assert back.leaf_params(1).beta == tree.leaf_params(1).beta


def test_grow_prune_inversion_random():
    rng = np.random.default_rng(11)
    space = PredictorSpace(2)
    config = PriorConfig(tau=0.5)
    for _ in range(200):
        tree = sample_tree_prior(config, space, rng, lambda: leaf(float(rng.normal())))
        leaves = tree.leaf_ids()
        target = leaves[rng.integers(len(leaves))]
        if node_depth(target) >= 31:
            continue
        bounds = reachable_bounds(tree, target, space)
        rule = sample_decision_rule(bounds, rng)
        original = tree.nodes[target]
        grown = grow_structure(tree, target, rule, leaf(), leaf())
        restored = prune_structure(grown, target, original)
        assert restored.nodes.keys() == tree.nodes.keys()
        for k in tree.nodes:
            assert type(restored.nodes[k]) is type(tree.nodes[k])


def test_prunable_enumeration():
    # Complete depth-2 tree: leaves {4,5,6,7}; prune candidates {2,3}.
    tree = RidgeTree(
        {
            1: DecisionRule(0, cutpoint=0.5),
            2: DecisionRule(0, cutpoint=0.25),
            3: DecisionRule(0, cutpoint=0.75),
            4: leaf(),
            5: leaf(),
            6: leaf(),
            7: leaf(),
        }
    )
    assert tree.prunable_ids() == [2, 3]


def test_grow_prune_wrong_target_errors():
    tree = RidgeTree({1: DecisionRule(0, cutpoint=0.5), 2: leaf(), 3: leaf()})
    with pytest.raises(InvalidMoveError):
        grow_structure(tree, 1, DecisionRule(0, cutpoint=0.3), leaf(), leaf())
    with pytest.raises(InvalidMoveError):
        prune_structure(tree, 2, leaf())
    deep = grow_structure(tree, 2, DecisionRule(0, cutpoint=0.3), leaf(), leaf())
    with pytest.raises(InvalidMoveError):
        prune_structure(deep, 1, leaf())  # children not both leaves


def test_split_probabilities():
    b = BranchingPrior()
    assert b.split_prob(0) == 0.95
    assert math.isclose(b.split_prob(2), 0.95 / 9.0)
    # Geometric form indexes gamma^(d+1) so the root is not forced internal.
    g = BranchingPrior(gamma=0.25)
    assert g.split_prob(0) == 0.25
    assert g.split_prob(3) == 0.25**4
    assert g.split_prob(40) == 0.0
    assert b.split_prob(32) == 0.0


def test_rule_sampling_full_interval():
    rng = np.random.default_rng(3)
    space = PredictorSpace(1)
    tree = RidgeTree.single_leaf(leaf())
    cuts = []
    for _ in range(4000):
        rule = sample_decision_rule(reachable_bounds(tree, 1, space), rng)
        assert rule.variable == 0
        cuts.append(rule.cutpoint)
    cuts = np.array(cuts)
    assert cuts.min() > 0.0 and cuts.max() < 1.0
    assert abs(cuts.mean() - 0.5) < 3.0 * cuts.std() / np.sqrt(len(cuts))


def test_rule_sampling_restricted_interval():
    rng = np.random.default_rng(4)
    space = PredictorSpace(1)
    tree = RidgeTree(
        {1: DecisionRule(0, cutpoint=0.5), 2: leaf(), 3: leaf()}
    )
    bounds = reachable_bounds(tree, 3, space)
    assert bounds.lower[0] == 0.5 and bounds.upper[0] == 1.0
    for _ in range(500):
        rule = sample_decision_rule(bounds, rng)
        assert 0.5 < rule.cutpoint < 1.0


def test_categorical_subsets_uniform():
    rng = np.random.default_rng(8)
    space = PredictorSpace(1, {0: 3})
    tree = RidgeTree.single_leaf(leaf())
    bounds = reachable_bounds(tree, 1, space)
    counts = {}
    n = 12000
    for _ in range(n):
        rule = sample_decision_rule(bounds, rng)
        key = tuple(sorted(rule.left_levels))
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 6  # 2^3 - 2 admissible subsets
    for key, c in counts.items():
        se = math.sqrt(n * (1 / 6) * (5 / 6))
        assert abs(c - n / 6) < 4 * se, (key, c)


def test_no_splittable_variable():
    space = PredictorSpace(1, {0: 2})
    tree = RidgeTree(
        {1: DecisionRule(0, left_levels=frozenset({0})), 2: leaf(), 3: leaf()}
    )
    bounds = reachable_bounds(tree, 2, space)  # only level 0 remains
    with pytest.raises(NoSplittableVariableError):
        sample_decision_rule(bounds, np.random.default_rng(0))


def test_log_tree_prior_values():
    space = PredictorSpace(1)
    config = PriorConfig(tau=0.5)
    single = RidgeTree.single_leaf(leaf())
    assert math.isclose(log_tree_prior(single, config, space), math.log(0.05))

    split = RidgeTree({1: DecisionRule(0, cutpoint=0.3), 2: leaf(), 3: leaf()})
    expected = math.log(0.95) + 2.0 * math.log(1.0 - 0.2375) + math.log(1.0) + math.log(1.0)
    assert math.isclose(log_tree_prior(split, config, space), expected)

    gamma_cfg = PriorConfig(tau=0.5, branching=BranchingPrior(gamma=0.2))
    assert math.isclose(log_tree_prior(single, gamma_cfg, space), math.log(0.8))


def test_prior_shape_frequencies_match():
    # Shape probabilities under the branching process (rule densities
    # integrate out): single leaf, root split, complete depth-2 tree.
    rng = np.random.default_rng(17)
    space = PredictorSpace(1)
    config = PriorConfig(tau=0.5)
    b = config.branching
    p0, p1 = b.split_prob(0), b.split_prob(1)
    p2 = b.split_prob(2)
    expect = {
        "single": 1.0 - p0,
        "rootsplit": p0 * (1.0 - p1) ** 2,
        "complete2": p0 * p1**2 * (1.0 - p2) ** 4,
    }
    n = 20000
    counts = dict.fromkeys(expect, 0)
    for _ in range(n):
        tree = sample_tree_prior(config, space, rng, lambda: leaf())
        ids = set(tree.nodes)
        if ids == {1}:
            counts["single"] += 1
        elif ids == {1, 2, 3}:
            counts["rootsplit"] += 1
        elif ids == {1, 2, 3, 4, 5, 6, 7} and tree.prunable_ids() == [2, 3]:
            counts["complete2"] += 1
    for shape, p in expect.items():
        se = math.sqrt(n * p * (1.0 - p))
        assert abs(counts[shape] - n * p) <= 3.0 * se, (shape, counts[shape], n * p, se)


def test_sampled_trees_have_nonempty_cells():
    rng = np.random.default_rng(23)
    space = PredictorSpace(2, {1: 3})
    config = PriorConfig(tau=0.5)
    for _ in range(200):
        tree = sample_tree_prior(config, space, rng, lambda: leaf())
        for leaf_id in tree.leaf_ids():
            bounds = reachable_bounds(tree, leaf_id, space)
            assert bounds.lower[0] < bounds.upper[0]
            assert len(bounds.levels[1]) >= 1
