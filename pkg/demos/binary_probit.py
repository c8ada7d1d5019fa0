"""Binary outcomes via probit latent augmentation.

Labels follow Bernoulli(Phi(f(x, z) - 0.75)) with f a smooth spatial-style
surface.  The sampler fixes the noise variance at 1 and alternates
truncated-normal latent draws with the usual tree updates; predictions are
success probabilities.

Run: python demos/binary_probit.py
"""

import numpy as np

import ridgebart as rb

sim = rb.generate_binary(2000, seed=11)
rng = np.random.default_rng(1)
test = np.sort(rng.choice(sim.n, size=400, replace=False))
train = np.setdiff1d(np.arange(sim.n), test)
print(f"{train.size} training shots, positive rate {sim.y[train].mean():.3f}")

samples, _ = rb.fit_arrays(
    sim.x[train], sim.z[train], sim.y[train],
    binary=True, activation="cosine", n_trees=50, n_ridge=1,
    chains=2, iterations=1000, burn_in=500, thin=2, seed=5, jobs=2,
)
record = samples.meta.transform
pred = rb.predict_processed(
    samples, record.apply_x(sim.x[test]), record.apply_z(sim.z[test]), level=0.95
)

print(f"held-out log-loss: {rb.logloss(pred.mean, sim.y[test]):.4f}")
print(f"log-loss of the true probabilities: {rb.logloss(sim.prob_true[test], sim.y[test]):.4f}")
print(f"rmse against the true probabilities: {rb.rmse(pred.mean, sim.prob_true[test]):.4f}")

# Probability profile along the smoothing variable for one covariate row.
z_grid = np.linspace(0.0, 24.0, 9)[:, None]
x_row = np.repeat(sim.x[0][None, :], z_grid.shape[0], axis=0)
curve = rb.predict_processed(samples, record.apply_x(x_row), record.apply_z(z_grid))
print("\nestimated success probability along z for one subject:")
for zv, m, lo, hi in zip(z_grid.ravel(), curve.mean, curve.lower, curve.upper):
    print(f"  z = {zv:4.1f}: {m:.3f} [{lo:.3f}, {hi:.3f}]")
