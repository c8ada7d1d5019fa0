"""Generic nonparametric regression with smoothing variables equal to the
covariates (z = x), on the classic five-dimensional benchmark surface.

Compares ridge-leaf fits against the piecewise-constant baseline
(activation="constant") on held-out rows.  The ridge variants need enough
data and iterations to pay off; at this scale (n = 1000, 2 chains x 2000
iterations) they beat the baseline, while much smaller runs may not.

Run: python demos/friedman_regression.py  (a few minutes)
"""

import numpy as np

import ridgebart as rb

sim = rb.generate_friedman(1000, sigma=1.0, seed=7)
rng = np.random.default_rng(0)
test = np.sort(rng.choice(sim.n, size=200, replace=False))
train = np.setdiff1d(np.arange(sim.n), test)

results = {}
for activation in ("relu", "cosine", "constant"):
    samples, _ = rb.fit_arrays(
        sim.x[train], sim.x[train], sim.y[train],
        activation=activation, n_trees=50, n_ridge=1,
        chains=2, iterations=2000, burn_in=1000, thin=2, seed=3, jobs=2,
    )
    record = samples.meta.transform
    pred = rb.predict_processed(
        samples, record.apply_x(sim.x[test]), record.apply_z(sim.x[test])
    )
    results[activation] = {
        "rmse_f": rb.rmse(pred.mean, sim.f_true[test]),
        "coverage": rb.pointwise_coverage(pred.lower, pred.upper, sim.f_true[test]),
    }
    print(f"fit {activation}: rmse(f) = {results[activation]['rmse_f']:.4f}")

print(f"\n{'activation':>10s} {'rmse(f)':>8s} {'coverage':>9s}")
for activation, row in results.items():
    print(f"{activation:>10s} {row['rmse_f']:8.4f} {row['coverage']:9.3f}")
