"""Constant-leaf reduction and the linear-time update claim.

With activation="constant" every leaf emits a single scalar, reproducing
the classic sum-of-trees model: the leaf precision collapses to
sigma^-2 n_leaf + tau^-2 and the marginal tree update is the familiar
scalar formula.  The second half times tree updates across dataset sizes
to show the per-update cost grows linearly in n.

Run: python demos/vanilla_baseline_and_timing.py
"""

import numpy as np

import ridgebart as rb
from ridgebart.evaluate import gaussian_base_terms, marginal_oracle
from ridgebart.sampler import leaf_suffstats, log_marginal_leaf

# The scalar reduction, spelled out on one leaf.
rng = np.random.default_rng(0)
residuals = rng.normal(size=8)
phi = rb.build_basis(rng.uniform(size=(8, 3)), rb.LeafParams.constant(3), "constant")
stats = leaf_suffstats(phi, residuals, sigma2=1.5, tau=0.4)
print("constant-leaf precision:", stats.precision[0, 0],
      "= n/sigma2 + 1/tau^2 =", 8 / 1.5 + 0.4**-2)
collapsed = log_marginal_leaf(stats, 0.4) + gaussian_base_terms(residuals, 1.5)
print("collapsed marginal:", collapsed,
      "| dense oracle:", marginal_oracle(phi, residuals, 1.5, 0.4))

# A small vanilla fit.
sim = rb.generate_friedman(400, sigma=1.0, seed=2)
samples, _ = rb.fit_arrays(
    sim.x, sim.x, sim.y, activation="constant", n_trees=50,
    chains=2, iterations=600, burn_in=300, seed=4, jobs=2,
)
record = samples.meta.transform
pred = rb.predict_processed(samples, record.apply_x(sim.x), record.apply_z(sim.x))
print(f"\nvanilla baseline in-sample rmse(f): {rb.rmse(pred.mean, sim.f_true):.4f}")

# Per-update cost across n: the median should roughly double with n.
report = rb.timing_harness([2000, 4000, 8000, 16000], repetitions=15, warmup=30, chains=2)
print("\nper-tree-update timings:")
print(report.summary())
