import math

import numpy as np
import pytest

import ridgebart as rb
from ridgebart.model import ChainMeta, Ensemble, PosteriorSamples, predict_processed
from ridgebart.ridge import tree_eval
from ridgebart.trees import LeafParams, RidgeTree


def make_meta(n_chains=1, iterations=1, burn_in=0, thin=1, binary=False):
    config = rb.PriorConfig(n_trees=1, activation="constant", tau=0.5)
    transform = rb.TransformRecord(
        x_min=np.zeros(1), x_max=np.ones(1),
        z_min=np.zeros(1), z_max=np.ones(1),
        x_levels={}, y_center=2.0, binary=binary,
    )
    return ChainMeta(7, n_chains, iterations, burn_in, thin, config, transform, binary)


def constant_samples(beta, y_center=2.0, binary=False):
    tree = RidgeTree.single_leaf(LeafParams.constant(1, beta0=beta))
    draw = Ensemble(trees=(tree,), sigma2=1.0, y_center=y_center, activation="constant")
    return PosteriorSamples(draws=[draw], meta=make_meta(binary=binary))


def test_additive_decomposition_in_index_order():
    # Removing one tree's per-row evaluation and adding it back reproduces
    # the ensemble total within 1e-12 when summed in index order.
    sim = rb.generate_friedman(80, seed=31)
    ds, tr = rb.preprocess(sim.x, sim.z, sim.y)
    config = rb.resolve_config(sim.y, False, activation="cosine", n_trees=8)
    draws = rb.run_chain(ds, config, iterations=30, burn_in=20, thin=1,
                         rng=rb.chain_rng(4, 0), y_center=tr.y_center)
    ensemble = draws[-1]
    total = ensemble.evaluate(ds.x, ds.z)
    for m in range(len(ensemble.trees)):
        partial = np.full(ds.n, ensemble.y_center)
        for k, tree in enumerate(ensemble.trees):
            if k != m:
                partial += tree_eval(tree, ds.x, ds.z, ensemble.activation)
        rebuilt = partial + tree_eval(ensemble.trees[m], ds.x, ds.z, ensemble.activation)
        assert np.abs(rebuilt - total).max() < 1e-12


def test_predict_constant_tree_adds_center():
    samples = constant_samples(beta=0.3, y_center=2.0)
    x = np.array([[0.1], [0.8]])
    pred = predict_processed(samples, x, x)
    assert np.allclose(pred.mean, 2.3)
    assert np.allclose(pred.lower, 2.3) and np.allclose(pred.upper, 2.3)


def test_predict_zero_beta_returns_center():
    samples = constant_samples(beta=0.0, y_center=2.0)
    pred = predict_processed(samples, np.array([[0.5]]), np.array([[0.5]]))
    assert pred.mean[0] == 2.0


def test_predict_binary_probability_half_at_zero():
    samples = constant_samples(beta=0.0, y_center=0.0, binary=True)
    pred = predict_processed(samples, np.array([[0.5]]), np.array([[0.5]]))
    assert math.isclose(pred.mean[0], 0.5)


def test_predict_validation():
    samples = constant_samples(beta=0.0)
    with pytest.raises(ValueError):
        predict_processed(samples, np.zeros((2, 1)), np.zeros((3, 1)))
    with pytest.raises(ValueError):
        predict_processed(samples, np.zeros((2, 1)), np.zeros((2, 1)), level=1.5)


def test_draw_count_invariant_enforced():
    with pytest.raises(ValueError):
        PosteriorSamples(draws=[], meta=make_meta(iterations=4, burn_in=0, thin=1))


def test_predict_applies_transform_and_clamps():
    # Raw inputs map through the recorded min-max transform with clamping.
    rng = np.random.default_rng(0)
    raw_x = rng.uniform(2.0, 6.0, size=(40, 1))
    raw_z = rng.uniform(0.0, 24.0, size=(40, 1))
    y = raw_z.ravel() * 0.1 + rng.normal(0, 0.1, 40)
    samples, _ = rb.fit_arrays(raw_x, raw_z, y, n_trees=4, chains=1,
                               iterations=40, burn_in=20, seed=6)
    inside = rb.predict(samples, np.array([[4.0]]), np.array([[12.0]]))
    outside = rb.predict(samples, np.array([[99.0]]), np.array([[12.0]]))
    boundary = rb.predict(samples, np.array([[raw_x.max()]]), np.array([[12.0]]))
    assert math.isclose(outside.mean[0], boundary.mean[0], rel_tol=1e-12)
    assert np.isfinite(inside.mean[0])
