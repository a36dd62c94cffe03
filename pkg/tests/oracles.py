"""Independent reference implementations used to check the library.

Everything here is deliberately written the slow, obvious way (scalar
loops, explicit inverses, brute-force summation) and kept free of the
code paths it is meant to verify.
"""

import math
from dataclasses import replace

import numpy as np

from pvgp.kernels import PERIODIC, RATIONAL_QUADRATIC, SQUARED_EXPONENTIAL, WHITE_NOISE

# the library's documented jitter floor, shared so oracles factor the same matrix
JITTER0 = 1e-10


def composite_oracle(xi, xj, i, j, spec):
    """Scalar re-derivation of the composite kernel from the raw formulas."""
    xi = [float(v) for v in np.atleast_1d(xi)]
    xj = [float(v) for v in np.atleast_1d(xj)]
    noise = spec.noise_variance if i == j else 0.0
    if spec.family == WHITE_NOISE:
        return (spec.amplitude**2 if i == j else 0.0) + noise

    def profile(family, r, alpha, nu, half):
        if family == SQUARED_EXPONENTIAL:
            return math.exp(-0.5 * r * r) if half else math.exp(-r * r)
        if family == RATIONAL_QUADRATIC:
            q = r * r / (2.0 * alpha) if half else r * r / alpha
            return (1.0 + q) ** (-alpha)
        if nu == 0.5:
            return math.exp(-r)
        if nu == 1.5:
            return (1.0 + math.sqrt(3) * r) * math.exp(-math.sqrt(3) * r)
        return (1.0 + math.sqrt(5) * r + 5.0 / 3.0 * r * r) * math.exp(-math.sqrt(5) * r)

    if spec.family == PERIODIC:
        u = 2.0 * abs(math.sin(math.pi * (xi[0] - xj[0]) / spec.period))
        k = profile(spec.base.family, u / spec.roughness, spec.base.alpha, spec.base.nu, half=True)
        if len(xi) > 1:
            r2 = sum(((a - b) / l) ** 2 for a, b, l in zip(xi[1:], xj[1:], spec.lengthscales[1:]))
            k *= profile(spec.base.family, math.sqrt(r2), spec.base.alpha, spec.base.nu, half=False)
        return spec.amplitude**2 * k + noise
    r2 = sum(((a - b) / l) ** 2 for a, b, l in zip(xi, xj, spec.lengthscales))
    return spec.amplitude**2 * profile(spec.family, math.sqrt(r2), spec.alpha, spec.nu, half=False) + noise


def gram_oracle(X, spec, with_noise):
    """Training Gram via the scalar oracle; noise rides on matching indices."""
    X = np.atleast_2d(X)
    probe = spec if with_noise else replace(spec, noise_variance=0.0)
    n = X.shape[0]
    K = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            K[i, j] = composite_oracle(X[i], X[j], i, j, probe)
    return K


def cross_oracle(Q, X, spec):
    """Cross block via the scalar oracle; disjoint index spaces, no delta."""
    Q, X = np.atleast_2d(Q), np.atleast_2d(X)
    K = np.empty((Q.shape[0], X.shape[0]))
    for q in range(Q.shape[0]):
        for i in range(X.shape[0]):
            K[q, i] = composite_oracle(Q[q], X[i], X.shape[0] + q, i, spec)
    return K


def posterior_oracle(train, Q, spec):
    """Posterior mean/cov by explicit matrix inversion in watt space."""
    Q = np.atleast_2d(Q)
    Kxx = gram_oracle(train.inputs, spec, with_noise=True)
    Kxx = Kxx + JITTER0 * np.mean(np.diag(Kxx)) * np.eye(train.n)
    Kinv = np.linalg.inv(Kxx)
    Ks = cross_oracle(Q, train.inputs, spec)
    Kqq = gram_oracle(Q, spec, with_noise=False)
    mu = train.target_mean
    mean = mu + Ks @ Kinv @ (train.targets - mu)
    cov = Kqq - Ks @ Kinv @ Ks.T
    return mean, cov


def lml_oracle(train, spec):
    """Log marginal likelihood by explicit determinant and inverse."""
    s2 = train.target_scale**2
    K = gram_oracle(train.inputs, spec, with_noise=True) / s2
    K = K + JITTER0 * np.mean(np.diag(K)) * np.eye(train.n)
    y = (train.targets - train.target_mean) / train.target_scale
    sign, logdet = np.linalg.slogdet(K)
    assert sign > 0
    return float(-0.5 * y @ np.linalg.inv(K) @ y - 0.5 * logdet - 0.5 * train.n * math.log(2 * math.pi))


def stencil_gradient(fn, x, step=1e-3):
    """Fourth-order five-point central-difference gradient."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        g[k] = (-fn(x + 2 * e) + 8 * fn(x + e) - 8 * fn(x - e) + fn(x - 2 * e)) / (12.0 * step)
    return g


def patch_mean_oracle(frame, px, py, size):
    """Naive double-loop window average over the raw frame."""
    total = 0.0
    for col in range(px - size // 2, px + size // 2):
        for row in range(py - size // 2, py + size // 2):
            total += float(frame[row, col])
    return total / (size * size)


def solar_elevation_psa(lat_deg, lon_deg, when):
    """PSA solar-position algorithm (Blanco-Muriel et al. 2001), ~0.01 deg.

    Independent of the library's almanac-based implementation; used as the
    high-accuracy cross-check.
    """
    import datetime as _dt

    if when.tzinfo is not None:
        when = when.astimezone(_dt.timezone.utc).replace(tzinfo=None)
    hour = when.hour + when.minute / 60.0 + when.second / 3600.0
    # Julian day from calendar date (Fliegel-Van Flandern), then elapsed J2000 days
    year, month, day = when.year, when.month, when.day
    aux1 = (month - 14) // 12
    aux2 = (1461 * (year + 4800 + aux1)) // 4 + (367 * (month - 2 - 12 * aux1)) // 12
    aux2 += -(3 * ((year + 4900 + aux1) // 100)) // 4 + day - 32075
    jd = aux2 - 0.5 + hour / 24.0
    elapsed = jd - 2451545.0

    omega = 2.1429 - 0.0010394594 * elapsed
    mean_long = 4.8950630 + 0.017202791698 * elapsed
    mean_anom = 6.2400600 + 0.0172019699 * elapsed
    ecl_long = (
        mean_long
        + 0.03341607 * math.sin(mean_anom)
        + 0.00034894 * math.sin(2 * mean_anom)
        - 0.0001134
        - 0.0000203 * math.sin(omega)
    )
    obliquity = 0.4090928 - 6.2140e-9 * elapsed + 0.0000396 * math.cos(omega)

    sin_ecl = math.sin(ecl_long)
    ra = math.atan2(math.cos(obliquity) * sin_ecl, math.cos(ecl_long)) % (2 * math.pi)
    dec = math.asin(math.sin(obliquity) * sin_ecl)

    gmst = 6.6974243242 + 0.0657098283 * elapsed + hour
    lmst = math.radians(gmst * 15 + lon_deg)
    ha = lmst - ra
    lat = math.radians(lat_deg)
    zenith = math.acos(
        min(1.0, max(-1.0, math.cos(lat) * math.cos(ha) * math.cos(dec) + math.sin(dec) * math.sin(lat)))
    )
    # parallax correction
    zenith += (6371.01 / 149597890.0) * math.sin(zenith)
    return 90.0 - math.degrees(zenith)
