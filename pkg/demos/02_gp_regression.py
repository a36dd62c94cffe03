"""Exact GP regression on a toy 1-D series: prior, fit, posterior."""

import numpy as np

from pvgp import gp
from pvgp.kernels import KernelSpec

rng = np.random.default_rng(42)

# hidden truth: a smooth function observed with noise at 25 points
truth_spec = KernelSpec("se", amplitude=2.0, lengthscales=(6.0,), noise_variance=0.1)
X = np.sort(rng.choice(np.arange(80), size=25, replace=False)).astype(float)[:, None]
K = gp.build_covariance(X, X, truth_spec, with_noise=True)
y = np.linalg.cholesky(K + 1e-12 * np.eye(25)) @ rng.standard_normal(25) + 10.0
train = gp.TrainingSet.from_arrays(X, y)

# a few prior draws at the query grid, before seeing any data
Q = np.arange(0.0, 80.0)[:, None]
draws = gp.sample_prior(Q, truth_spec, count=3, seed=1)
print("prior draw ranges:", [f"[{d.min():.2f}, {d.max():.2f}]" for d in draws])

# fit hyperparameters by maximum marginal likelihood, then predict
template = KernelSpec("se", amplitude=train.target_scale, lengthscales=(8.0,), noise_variance=0.2)
fitted = gp.fit_hyperparameters(train, template, restarts=3, seed=0)
print("fitted kernel:", fitted.to_text())
print("log marginal likelihood:", round(gp.log_marginal_likelihood(train, fitted), 3))

pred = gp.posterior(train, Q, fitted)

# crude terminal plot: posterior mean with +-2 sd band width
lo, hi = pred.mean.min(), pred.mean.max()
print("\nposterior mean (* = observation):")
observed = {int(x): v for x, v in zip(X.ravel(), y)}
for i in range(0, 80, 4):
    col = int(48 * (pred.mean[i] - lo) / (hi - lo + 1e-12))
    line = " " * col + ("*" if i in observed else "o")
    print(f"t={i:3d} mean={pred.mean[i]:7.2f} sd={pred.std[i]:5.2f} |{line}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.figure(figsize=(8, 4))
    plt.fill_between(Q.ravel(), pred.mean - 2 * pred.std, pred.mean + 2 * pred.std, alpha=0.3, label="+-2 sd")
    plt.plot(Q.ravel(), pred.mean, label="posterior mean")
    plt.plot(X.ravel(), y, "k.", label="observations")
    plt.legend()
    plt.tight_layout()
    plt.savefig("gp_regression_demo.png", dpi=120)
    print("\nsaved gp_regression_demo.png")
except ImportError:
    pass
