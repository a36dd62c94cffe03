"""Exact Gaussian-process inference.

Prior sampling, posterior mean/covariance, log marginal likelihood, and
multi-restart hyperparameter fitting, all against the composite kernels of
:mod:`pvgp.kernels`.  Targets are centred on the training mean and scaled
by the training standard deviation internally; kernel hyperparameters stay
in target units (watts), so specs written by hand and specs returned by
the fitter are directly comparable.

Linear algebra goes through a Cholesky factorisation of the jittered Gram
matrix, never an explicit inverse.  Jitter starts at ``1e-10 * mean(diag)``
and escalates tenfold up to ``1e-4`` before a :class:`ConditioningError`
is raised naming the kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.optimize

from . import kernels
from .kernels import PERIODIC, RATIONAL_QUADRATIC, WHITE_NOISE, KernelSpec

__all__ = [
    "TrainingSet",
    "PosteriorPrediction",
    "ConditioningError",
    "FitError",
    "build_covariance",
    "posterior",
    "log_marginal_likelihood",
    "fit_hyperparameters",
    "sample_prior",
    "fd_gradient",
]

JITTER_INITIAL = 1e-10
JITTER_MAX = 1e-4
MAX_FIT_ITERATIONS = 200
FD_STEP = 1e-4


class ConditioningError(RuntimeError):
    """Gram matrix could not be factorised even at maximum jitter."""


class FitError(RuntimeError):
    """No optimiser restart produced a finite objective."""


@dataclass
class TrainingSet:
    """Aligned inputs and power targets for one PV system.

    ``inputs`` is an (n, d) matrix whose column 0 is the integer-valued
    time index (5-minute units) and column 1, when present, the normalised
    cloud-coverage mean in [0, 1].  ``target_mean`` and ``target_scale``
    are the centring constants (watts); they default to the sample mean
    and standard deviation of ``targets``.
    """

    inputs: np.ndarray
    targets: np.ndarray
    target_mean: float
    target_scale: float

    @classmethod
    def from_arrays(cls, inputs, targets) -> "TrainingSet":
        inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        targets = np.asarray(targets, dtype=float).ravel()
        if targets.size:
            mean = float(targets.mean())
            scale = float(targets.std())
        else:
            mean, scale = 0.0, 1.0
        if scale <= 0:
            scale = 1.0  # constant targets: centring alone suffices
        return cls(inputs=inputs, targets=targets, target_mean=mean, target_scale=scale)

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        self.targets = np.asarray(self.targets, dtype=float).ravel()
        self.validate()

    def validate(self) -> None:
        n, d = self.inputs.shape
        if d not in (1, 2):
            raise ValueError(f"inputs must have 1 or 2 columns, got {d}")
        if self.targets.shape != (n,):
            raise ValueError(f"targets length {self.targets.size} != inputs rows {n}")
        if not (np.isfinite(self.inputs).all() and np.isfinite(self.targets).all()):
            raise ValueError("training data contains non-finite entries")
        if n > 1 and not np.all(np.diff(self.inputs[:, 0]) > 0):
            raise ValueError("time indices must be strictly increasing")
        if not (self.target_scale > 0 and math.isfinite(self.target_scale)):
            raise ValueError(f"target_scale must be > 0, got {self.target_scale}")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def ndim(self) -> int:
        return self.inputs.shape[1]

    def scaled_targets(self) -> np.ndarray:
        return (self.targets - self.target_mean) / self.target_scale


@dataclass
class PosteriorPrediction:
    """Predictive mean (watts) and covariance (watts^2) at query inputs."""

    mean: np.ndarray
    cov: np.ndarray

    @property
    def std(self) -> np.ndarray:
        """Per-point predictive standard deviation, watts."""
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))


def build_covariance(A, B, spec: KernelSpec, with_noise: bool = False) -> np.ndarray:
    """Covariance block ``K(A, B)`` under ``spec``.

    The Kronecker-delta noise term contributes only when ``with_noise`` is
    set and A and B are the same sample list, i.e. the same array object;
    cross-covariance blocks never carry it, even between equal-valued
    inputs, because the delta keys on sample identity rather than values.
    """
    same = A is B
    A2 = np.atleast_2d(np.asarray(A, dtype=float))
    B2 = A2 if same else np.atleast_2d(np.asarray(B, dtype=float))
    K = kernels.main_matrix(spec, A2, B2, same_samples=same)
    if with_noise and same and spec.noise_variance > 0:
        K = K + spec.noise_variance * np.eye(A2.shape[0])
    return K


def _cholesky_with_jitter(K: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Lower Cholesky factor of K plus escalating jitter."""
    scale = float(np.mean(np.diag(K))) if K.shape[0] else 1.0
    if scale <= 0 or not math.isfinite(scale):
        scale = 1.0
    eps = JITTER_INITIAL
    while eps <= JITTER_MAX * (1 + 1e-12):
        try:
            return scipy.linalg.cholesky(K + eps * scale * np.eye(K.shape[0]), lower=True)
        except scipy.linalg.LinAlgError:
            eps *= 10.0
    raise ConditioningError(
        f"covariance factorisation failed at jitter {JITTER_MAX:g} for kernel {spec.to_text()}"
    )


def posterior(train: TrainingSet, query_X, spec: KernelSpec) -> PosteriorPrediction:
    """Posterior mean and covariance at ``query_X`` given training data.

    Computes ``m* = mu + K(X*,X) K(X,X)^-1 (y - mu)`` and
    ``C* = K(X*,X*) - K(X*,X) K(X,X)^-1 K(X*,X)^T`` on centred/scaled
    targets, then maps back to watts.  With no training rows the prior is
    returned: constant mean ``target_mean`` and covariance ``K(X*,X*)``.
    """
    # fresh array: query samples are never "the same list" as training rows
    query_X = np.array(query_X, dtype=float, ndmin=2)
    if query_X.shape[1] != train.ndim:
        raise ValueError(f"query has {query_X.shape[1]} columns, training has {train.ndim}")
    spec.validate(ndim=train.ndim)

    Kss = build_covariance(query_X, query_X, spec)
    if train.n == 0:
        mean = np.full(query_X.shape[0], train.target_mean)
        return PosteriorPrediction(mean=mean, cov=_tidy_cov(Kss))

    s2 = train.target_scale**2
    K = build_covariance(train.inputs, train.inputs, spec, with_noise=True) / s2
    L = _cholesky_with_jitter(K, spec)
    y = train.scaled_targets()
    alpha = scipy.linalg.cho_solve((L, True), y)
    Ks = build_covariance(query_X, train.inputs, spec) / s2
    mean = train.target_mean + train.target_scale * (Ks @ alpha)
    V = scipy.linalg.solve_triangular(L, Ks.T, lower=True)
    cov = Kss - s2 * (V.T @ V)
    return PosteriorPrediction(mean=mean, cov=_tidy_cov(cov))


def _tidy_cov(cov: np.ndarray) -> np.ndarray:
    cov = (cov + cov.T) / 2.0
    d = np.diag(cov).copy()
    np.fill_diagonal(cov, np.clip(d, 0.0, None))
    return cov


def log_marginal_likelihood(train: TrainingSet, spec: KernelSpec) -> float:
    """Exact-GP log marginal likelihood of the centred/scaled targets.

    ``-1/2 y^T K^-1 y - 1/2 log|K| - (n/2) log 2pi`` with K the training
    Gram including the noise term.
    """
    spec.validate(ndim=train.ndim)
    if train.n == 0:
        return 0.0
    s2 = train.target_scale**2
    K = build_covariance(train.inputs, train.inputs, spec, with_noise=True) / s2
    L = _cholesky_with_jitter(K, spec)
    y = train.scaled_targets()
    alpha = scipy.linalg.cho_solve((L, True), y)
    return float(-0.5 * y @ alpha - np.log(np.diag(L)).sum() - 0.5 * train.n * math.log(2 * math.pi))


def sample_prior(query_X, spec: KernelSpec, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` functions from ``N(0, K(X, X))`` at the query inputs.

    Returns a (count, m) array, deterministic per seed.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    query_X = np.atleast_2d(np.asarray(query_X, dtype=float))
    K = build_covariance(query_X, query_X, spec, with_noise=True)
    L = _cholesky_with_jitter(K, spec)
    z = np.random.default_rng(seed).standard_normal((query_X.shape[0], count))
    return (L @ z).T


# -- hyperparameter fitting -------------------------------------------------


def fd_gradient(fn, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Central finite-difference gradient of a scalar function.

    This is the gradient the optimiser consumes; its agreement with a
    higher-order stencil is part of the numerical contract.
    """
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        g[k] = (fn(x + e) - fn(x - e)) / (2.0 * step)
    return g


@dataclass(frozen=True)
class _Param:
    """One free hyperparameter: where it lives and its log-space init bounds.

    ``box_margin`` widens the optimiser box beyond the init range; the
    period keeps a margin of 1 so a freed T stays near the known cycle
    instead of degenerating into a quasi-stationary kernel.
    """

    name: str
    lo: float
    hi: float
    box_margin: float = 100.0

    def get(self, spec: KernelSpec) -> float:
        if self.name == "amplitude":
            return spec.amplitude
        if self.name == "noise_variance":
            return spec.noise_variance
        if self.name == "roughness":
            return spec.roughness
        if self.name == "period":
            return spec.period
        if self.name == "alpha":
            return spec.alpha if spec.family == RATIONAL_QUADRATIC else spec.base.alpha
        d = int(self.name[2:])  # lsD
        return spec.lengthscales[d]

    def put(self, spec: KernelSpec, value: float) -> KernelSpec:
        if self.name == "amplitude":
            return replace(spec, amplitude=value)
        if self.name == "noise_variance":
            return replace(spec, noise_variance=value)
        if self.name == "roughness":
            return replace(spec, roughness=value)
        if self.name == "period":
            return replace(spec, period=value)
        if self.name == "alpha":
            if spec.family == RATIONAL_QUADRATIC:
                return replace(spec, alpha=value)
            return replace(spec, base=replace(spec.base, alpha=value))
        d = int(self.name[2:])
        ls = list(spec.lengthscales)
        ls[d] = value
        return replace(spec, lengthscales=tuple(ls))


# init range for the periodic roughness w (warped distance is in [0, 2])
_ROUGHNESS_INIT = (0.1, 10.0)


def _free_parameters(train: TrainingSet, spec: KernelSpec, optimize_period: bool) -> list[_Param]:
    params: list[_Param] = []
    scale = train.target_scale
    params.append(_Param("amplitude", 0.01 * scale, 10.0 * scale))

    if train.n:
        ranges = np.ptp(train.inputs, axis=0)
    else:
        ranges = np.ones(train.ndim)
    ls_bounds = [(1.0, max(10.0 * float(r), 2.0)) for r in ranges]

    if spec.family == PERIODIC:
        params.append(_Param("roughness", *_ROUGHNESS_INIT))
        for d in range(1, train.ndim):
            params.append(_Param(f"ls{d}", *ls_bounds[d]))
        if spec.base.family == RATIONAL_QUADRATIC:
            params.append(_Param("alpha", 0.1, 100.0))
        if optimize_period:
            params.append(_Param("period", 0.5 * spec.period, 2.0 * spec.period, box_margin=1.0))
    elif spec.family != WHITE_NOISE:
        for d in range(train.ndim):
            params.append(_Param(f"ls{d}", *ls_bounds[d]))
        if spec.family == RATIONAL_QUADRATIC:
            params.append(_Param("alpha", 0.1, 100.0))

    var = scale**2
    params.append(_Param("noise_variance", 1e-6 * var, 1.0 * var))
    return params


def _spec_from_logs(template: KernelSpec, params: list[_Param], x: np.ndarray) -> KernelSpec:
    spec = template
    for p, v in zip(params, x):
        spec = p.put(spec, math.exp(v))
    return spec


def fit_hyperparameters(
    train: TrainingSet,
    spec_template: KernelSpec,
    restarts: int = 3,
    seed: int = 0,
    max_iter: int = MAX_FIT_ITERATIONS,
    optimize_period: bool = False,
) -> KernelSpec:
    """Maximise the log marginal likelihood over positive hyperparameters.

    Works in log space with L-BFGS-B; gradients come from central finite
    differences of the objective (:func:`fd_gradient`).  Restart 0 starts
    from the template's own hyperparameter values; every further restart
    starts from a log-uniform draw within the documented init bounds.
    Results are merged by best objective, ties broken by lowest restart
    index.  Deterministic given ``seed``.

    The period T is held fixed unless ``optimize_period`` is set: the
    daily cycle is physically known, and the likelihood over T is sharply
    multimodal (harmonics), so freeing it pays off only when the template
    already starts near the true period.  A freed T is boxed to
    [0.5, 2] times its starting value.
    """
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    spec_template.validate(ndim=train.ndim)
    params = _free_parameters(train, spec_template, optimize_period)
    if not params:
        return spec_template

    def objective(x: np.ndarray) -> float:
        try:
            value = -log_marginal_likelihood(train, _spec_from_logs(spec_template, params, x))
        except (ConditioningError, FloatingPointError, kernels.KernelSpecError):
            return 1e25
        return value if math.isfinite(value) else 1e25

    lo = np.log([p.lo for p in params])
    hi = np.log([p.hi for p in params])
    margin = np.log([p.box_margin for p in params])
    box_lo, box_hi = lo - margin, hi + margin
    box = list(zip(box_lo, box_hi))
    rng = np.random.default_rng(seed)

    template_values = np.array([max(p.get(spec_template), 1e-300) for p in params])
    template_start = np.clip(np.log(template_values), box_lo, box_hi)

    best: tuple[float, int, np.ndarray] | None = None
    for r in range(restarts):
        x0 = template_start if r == 0 else rng.uniform(lo, hi)
        result = scipy.optimize.minimize(
            objective,
            x0,
            jac=lambda x: fd_gradient(objective, x),
            method="L-BFGS-B",
            bounds=box,
            options={"maxiter": max_iter, "ftol": 1e-8},
        )
        f = float(result.fun)
        if math.isfinite(f) and f < 1e24 and (best is None or f < best[0]):
            best = (f, r, result.x.copy())
    if best is None:
        raise FitError(f"all {restarts} restart(s) failed to produce a finite objective")
    return _spec_from_logs(spec_template, params, best[2])
