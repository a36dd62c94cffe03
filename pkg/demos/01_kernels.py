"""Tour of the covariance kernels and their canonical text form."""

import numpy as np

from pvgp import kernels
from pvgp.kernels import KernelSpec, eval_matern, eval_periodic, eval_rq, eval_se

# the stationary families at a few scaled distances
print("scaled distance   se        rq(a=2)   matern12  matern52")
for r in [0.0, 0.5, 1.0, 2.0, 4.0]:
    row = [
        eval_se(r * r, 1.0),
        eval_rq(r * r, 1.0, 2.0),
        eval_matern(r, 1.0, 0.5),
        eval_matern(r, 1.0, 2.5),
    ]
    print(f"{r:15.1f}   " + "  ".join(f"{v:8.5f}" for v in row))

# the periodic warp: one solar day is 288 five-minute steps
base = KernelSpec("matern", nu=0.5)
print("\ntime lag (steps)  periodic-matern12(w=1, T=288)")
for lag in [0, 36, 72, 144, 216, 288, 432]:
    print(f"{lag:16d}  {float(eval_periodic(lag, 1.0, 1.0, 288.0, base)):8.5f}")

# a composite spec and its round-tripping text form
spec = kernels.parse("periodic(matern12; h=2.0, ls=[1.0, 0.3], w=0.8, T=288.0) + whitenoise(sigma2=0.05)")
print("\nparsed spec:", spec.to_text())
assert kernels.parse(spec.to_text()) == spec

# Gram matrices stay positive semidefinite
rng = np.random.default_rng(0)
X = np.column_stack([np.sort(rng.uniform(0, 600, 15)), rng.uniform(0, 1, 15)])
K = kernels.main_matrix(spec, X, X, same_samples=True) + spec.noise_variance * np.eye(15)
print(f"15x15 Gram: min eigenvalue = {np.linalg.eigvalsh(K).min():.2e} (trace {np.trace(K):.2f})")
