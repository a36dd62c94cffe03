"""Covariance kernels for the PV power Gaussian-process model.

A kernel is described declaratively by :class:`KernelSpec` and evaluated
either point-wise (``eval_composite``) or as a full Gram block
(``main_matrix``, used by :mod:`pvgp.gp`).  Five families are supported:

* ``whitenoise``   -- index-keyed noise, ``h^2`` on the diagonal only
* ``se``           -- squared exponential, ``h^2 * exp(-r2)``
* ``rq``           -- rational quadratic, ``h^2 * (1 + r2/alpha)^-alpha``
* ``matern``       -- half-integer Matern (nu in {1/2, 3/2, 5/2})
* ``periodic``     -- sinusoidal warp of the time axis around a stationary
                      base kernel (the daily solar cycle)

``r2`` is the per-dimension-scaled squared distance
``sum_d ((x_d - x'_d) / ls_d)^2``.  The plain stationary forms carry no 1/2
factor in the exponent; inside the periodic warp the base profiles use the
standard periodic-kernel parameterisation (an SE base yields
``h^2 * exp(-2 sin^2(pi*d/T) / w^2)``).

On multi-dimensional inputs (time index, cloud coverage) a stationary spec
acts on the joint scaled distance, while a periodic spec warps the time
dimension only and multiplies by its base kernel over the remaining
dimensions; ``lengthscales[0]`` is ignored for periodic specs because the
roughness ``w`` plays that role on the warped axis.

Text form
---------
Every spec has a canonical textual serialisation::

    kernel     = main [" + " noiseterm]
    noiseterm  = "whitenoise(sigma2=" FLOAT ")"
    main       = stationary | periodic | "whitenoise(h=" FLOAT ")"
    stationary = name "(" args ")"      ; name in {se, rq, matern12,
                                        ;          matern32, matern52}
    periodic   = "periodic(" name "; " args ")"
    args       = "h=" FLOAT ", ls=[" FLOAT {", " FLOAT} "]"
                 [", alpha=" FLOAT]     ; rq only
                 [", w=" FLOAT ", T=" FLOAT]   ; periodic only

Floats are written with ``repr`` so that ``parse(to_text(s)) == s``
round-trips exactly.  Example::

    periodic(matern12; h=1.0, ls=[1.0, 0.3], w=1.0, T=288.0) + whitenoise(sigma2=0.01)
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "WHITE_NOISE",
    "SQUARED_EXPONENTIAL",
    "RATIONAL_QUADRATIC",
    "MATERN",
    "PERIODIC",
    "STATIONARY_FAMILIES",
    "MATERN_NUS",
    "KernelSpec",
    "KernelSpecError",
    "eval_white_noise",
    "eval_se",
    "eval_rq",
    "eval_matern",
    "eval_periodic",
    "eval_composite",
    "main_matrix",
    "parse",
]

WHITE_NOISE = "whitenoise"
SQUARED_EXPONENTIAL = "se"
RATIONAL_QUADRATIC = "rq"
MATERN = "matern"
PERIODIC = "periodic"

STATIONARY_FAMILIES = (SQUARED_EXPONENTIAL, RATIONAL_QUADRATIC, MATERN)
MATERN_NUS = (0.5, 1.5, 2.5)

_SQRT3 = math.sqrt(3.0)
_SQRT5 = math.sqrt(5.0)


class KernelSpecError(ValueError):
    """Invalid kernel description (bad hyperparameters or text form)."""


@dataclass(frozen=True)
class KernelSpec:
    """Declarative description of a (possibly composite) covariance kernel.

    Parameters
    ----------
    family : str
        One of the module family constants.
    amplitude : float
        Signal amplitude ``h`` in target units (watts for power models).
        For a ``whitenoise`` main kernel, ``amplitude**2`` is the variance.
    lengthscales : tuple of float
        One lengthscale per input dimension.  Ignored for ``whitenoise``;
        index 0 is ignored for ``periodic`` (superseded by ``roughness``).
    alpha : float, optional
        Rational-quadratic index (``rq`` family only).
    nu : float, optional
        Matern smoothness, one of ``MATERN_NUS`` (``matern`` only).
    roughness : float, optional
        Lengthscale ``w`` on the warped time axis (``periodic`` only).
    period : float, optional
        Period ``T`` in time-index units (``periodic`` only); one solar
        day is 288.
    base : KernelSpec, optional
        Stationary base kernel of a ``periodic`` spec.  Its amplitude and
        lengthscales are unused; only the family shape (``alpha``/``nu``)
        matters.
    noise_variance : float
        White-noise variance ``sigma^2`` added on the training diagonal,
        in squared target units.  Attached at the composite level.
    """

    family: str
    amplitude: float = 1.0
    lengthscales: tuple[float, ...] = (1.0,)
    alpha: float | None = None
    nu: float | None = None
    roughness: float | None = None
    period: float | None = None
    base: "KernelSpec | None" = None
    noise_variance: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lengthscales", tuple(float(v) for v in np.atleast_1d(self.lengthscales)))
        self.validate()

    def validate(self, ndim: int | None = None) -> None:
        """Check hyperparameter invariants; raise :class:`KernelSpecError`."""
        fam = self.family
        if fam not in (WHITE_NOISE, PERIODIC) + STATIONARY_FAMILIES:
            raise KernelSpecError(f"unknown kernel family {fam!r}")
        if not (self.amplitude > 0 and math.isfinite(self.amplitude)):
            raise KernelSpecError(f"amplitude must be > 0, got {self.amplitude}")
        if not (self.noise_variance >= 0 and math.isfinite(self.noise_variance)):
            raise KernelSpecError(f"noise_variance must be >= 0, got {self.noise_variance}")
        if fam != WHITE_NOISE and any(not (v > 0 and math.isfinite(v)) for v in self.lengthscales):
            raise KernelSpecError(f"lengthscales must be > 0, got {self.lengthscales}")
        if fam == RATIONAL_QUADRATIC and not (self.alpha is not None and self.alpha > 0):
            raise KernelSpecError("rq kernel needs alpha > 0")
        if fam == MATERN and self.nu not in MATERN_NUS:
            raise KernelSpecError(f"matern nu must be one of {MATERN_NUS}, got {self.nu}")
        if fam == PERIODIC:
            if not (self.roughness is not None and self.roughness > 0):
                raise KernelSpecError("periodic kernel needs roughness w > 0")
            if not (self.period is not None and self.period > 0):
                raise KernelSpecError("periodic kernel needs period T > 0")
            if self.base is None or self.base.family not in STATIONARY_FAMILIES:
                raise KernelSpecError("periodic base must be a stationary family (se, rq, matern)")
        if ndim is not None and fam != WHITE_NOISE and len(self.lengthscales) != ndim:
            raise KernelSpecError(
                f"spec has {len(self.lengthscales)} lengthscale(s) but inputs have {ndim} dimension(s)"
            )

    # -- text form -----------------------------------------------------

    def to_text(self) -> str:
        """Canonical textual serialisation (see module docstring)."""
        main = self._main_text()
        if self.noise_variance > 0:
            return f"{main} + whitenoise(sigma2={self.noise_variance!r})"
        return main

    def _main_text(self) -> str:
        if self.family == WHITE_NOISE:
            return f"whitenoise(h={self.amplitude!r})"
        ls = "[" + ", ".join(repr(v) for v in self.lengthscales) + "]"
        args = f"h={self.amplitude!r}, ls={ls}"
        if self.family == SQUARED_EXPONENTIAL:
            return f"se({args})"
        if self.family == RATIONAL_QUADRATIC:
            return f"rq({args}, alpha={self.alpha!r})"
        if self.family == MATERN:
            return f"{_matern_name(self.nu)}({args})"
        # periodic
        assert self.base is not None
        base_name = _matern_name(self.base.nu) if self.base.family == MATERN else self.base.family
        if self.base.family == RATIONAL_QUADRATIC:
            args += f", alpha={self.base.alpha!r}"
        args += f", w={self.roughness!r}, T={self.period!r}"
        return f"periodic({base_name}; {args})"

    def __str__(self) -> str:
        return self.to_text()


def _matern_name(nu: float | None) -> str:
    return {0.5: "matern12", 1.5: "matern32", 2.5: "matern52"}[nu]


_NAME_TO_FAMILY = {
    "se": (SQUARED_EXPONENTIAL, None),
    "rq": (RATIONAL_QUADRATIC, None),
    "matern12": (MATERN, 0.5),
    "matern32": (MATERN, 1.5),
    "matern52": (MATERN, 2.5),
}

_TERM_RE = re.compile(r"^(\w+)\(\s*(?:(\w+)\s*;\s*)?(.*)\)$")


def parse(text: str) -> KernelSpec:
    """Parse the canonical text form back into a :class:`KernelSpec`."""
    terms = _split_terms(text)
    if not 1 <= len(terms) <= 2:
        raise KernelSpecError(f"expected 'main' or 'main + whitenoise(...)', got {text!r}")
    spec = _parse_main(terms[0])
    if len(terms) == 2:
        name, _, args = _parse_term(terms[1])
        if name != "whitenoise" or set(args) != {"sigma2"}:
            raise KernelSpecError(f"noise term must be whitenoise(sigma2=...), got {terms[1]!r}")
        sigma2 = args["sigma2"]
        if sigma2 < 0:
            raise KernelSpecError(f"sigma2 must be >= 0, got {sigma2}")
        spec = replace(spec, noise_variance=sigma2)
    return spec


def _split_terms(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth == 0 and text[i : i + 3] == " + ":
            parts.append("".join(cur).strip())
            cur = []
            i += 3
            continue
        cur.append(ch)
        i += 1
    parts.append("".join(cur).strip())
    return [p for p in parts if p]


def _parse_term(term: str) -> tuple[str, str | None, dict[str, object]]:
    m = _TERM_RE.match(term.strip())
    if not m:
        raise KernelSpecError(f"cannot parse kernel term {term!r}")
    name, base_name, argtext = m.group(1), m.group(2), m.group(3).strip()
    args: dict[str, object] = {}
    for piece in _split_args(argtext):
        if "=" not in piece:
            raise KernelSpecError(f"expected key=value in {term!r}, got {piece!r}")
        key, val = (s.strip() for s in piece.split("=", 1))
        if val.startswith("["):
            if not val.endswith("]"):
                raise KernelSpecError(f"unterminated list in {term!r}")
            args[key] = tuple(float(v) for v in val[1:-1].split(",") if v.strip())
        else:
            try:
                args[key] = float(val)
            except ValueError as exc:
                raise KernelSpecError(f"bad number {val!r} in {term!r}") from exc
    return name, base_name, args


def _split_args(argtext: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in argtext:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur:
        parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def _parse_main(term: str) -> KernelSpec:
    name, base_name, args = _parse_term(term)
    if name == "whitenoise":
        if set(args) != {"h"}:
            raise KernelSpecError(f"whitenoise main kernel takes h=..., got {term!r}")
        return KernelSpec(WHITE_NOISE, amplitude=float(args["h"]))  # type: ignore[arg-type]
    if name == "periodic":
        if base_name not in _NAME_TO_FAMILY:
            raise KernelSpecError(f"unknown periodic base {base_name!r}")
        fam, nu = _NAME_TO_FAMILY[base_name]
        base = KernelSpec(fam, alpha=args.get("alpha") if fam == RATIONAL_QUADRATIC else None, nu=nu)  # type: ignore[arg-type]
        return KernelSpec(
            PERIODIC,
            amplitude=_require_float(args, "h", term),
            lengthscales=args.get("ls", (1.0,)),  # type: ignore[arg-type]
            roughness=_require_float(args, "w", term),
            period=_require_float(args, "T", term),
            base=base,
        )
    if name in _NAME_TO_FAMILY:
        fam, nu = _NAME_TO_FAMILY[name]
        return KernelSpec(
            fam,
            amplitude=_require_float(args, "h", term),
            lengthscales=args.get("ls", (1.0,)),  # type: ignore[arg-type]
            alpha=args.get("alpha") if fam == RATIONAL_QUADRATIC else None,  # type: ignore[arg-type]
            nu=nu,
        )
    raise KernelSpecError(f"unknown kernel name {name!r}")


def _require_float(args: dict[str, object], key: str, term: str) -> float:
    if key not in args or not isinstance(args[key], float):
        raise KernelSpecError(f"missing scalar argument {key!r} in {term!r}")
    return args[key]  # type: ignore[return-value]


# -- point-wise evaluation ----------------------------------------------


def eval_white_noise(i: int, j: int, sigma2: float) -> float:
    """Index-keyed white noise: ``sigma2`` when ``i == j``, else 0."""
    if sigma2 < 0:
        raise KernelSpecError(f"sigma2 must be >= 0, got {sigma2}")
    return float(sigma2) if i == j else 0.0


def eval_se(r2, h: float):
    """Squared exponential on scaled squared distance: ``h^2 * exp(-r2)``."""
    return h * h * np.exp(-np.asarray(r2, dtype=float))


def eval_rq(r2, h: float, alpha: float):
    """Rational quadratic: ``h^2 * (1 + r2/alpha)^-alpha``."""
    return h * h * (1.0 + np.asarray(r2, dtype=float) / alpha) ** (-alpha)


def eval_matern(r, h: float, nu: float):
    """Half-integer Matern on scaled distance ``r``.

    nu = 1/2: ``h^2 exp(-r)``;  nu = 3/2: ``h^2 (1 + sqrt(3) r) exp(-sqrt(3) r)``;
    nu = 5/2: ``h^2 (1 + sqrt(5) r + 5 r^2/3) exp(-sqrt(5) r)``.
    """
    if nu not in MATERN_NUS:
        raise KernelSpecError(f"matern nu must be one of {MATERN_NUS}, got {nu}")
    return h * h * _matern_profile(np.asarray(r, dtype=float), nu)


def _matern_profile(r, nu: float):
    if nu == 0.5:
        return np.exp(-r)
    if nu == 1.5:
        return (1.0 + _SQRT3 * r) * np.exp(-_SQRT3 * r)
    return (1.0 + _SQRT5 * r + (5.0 / 3.0) * r * r) * np.exp(-_SQRT5 * r)


def _warp_profile(u, w: float, family: str, alpha: float | None, nu: float | None):
    """Unit-amplitude base profile on the warped chord distance ``u``.

    The warped axis uses the textbook periodic-kernel parameterisation, so
    the SE profile carries the 1/2 factor here even though the plain SE
    kernel does not.
    """
    u = np.asarray(u, dtype=float)
    if family == SQUARED_EXPONENTIAL:
        return np.exp(-0.5 * (u / w) ** 2)
    if family == RATIONAL_QUADRATIC:
        return (1.0 + (u / w) ** 2 / (2.0 * alpha)) ** (-alpha)
    return _matern_profile(u / w, nu)


def eval_periodic(d_time, h: float, w: float, period: float, base: KernelSpec):
    """Periodic kernel value for time distance ``d_time``.

    Maps the time axis onto a circle of period ``period``; the chord
    distance ``u = 2|sin(pi*d/T)|`` is fed to the base family's profile
    with lengthscale ``w``.  An SE base gives
    ``h^2 * exp(-2 sin^2(pi*d/T) / w^2)``.
    """
    if not (h > 0 and w > 0 and period > 0):
        raise KernelSpecError("periodic kernel needs h, w, T > 0")
    if base.family not in STATIONARY_FAMILIES:
        raise KernelSpecError("periodic base must be a stationary family (se, rq, matern)")
    u = 2.0 * np.abs(np.sin(np.pi * np.asarray(d_time, dtype=float) / period))
    return h * h * _warp_profile(u, w, base.family, base.alpha, base.nu)


def _stationary_correlation(r2, family: str, alpha: float | None, nu: float | None):
    """Unit-amplitude stationary kernel on scaled squared distance."""
    r2 = np.asarray(r2, dtype=float)
    if family == SQUARED_EXPONENTIAL:
        return np.exp(-r2)
    if family == RATIONAL_QUADRATIC:
        return (1.0 + r2 / alpha) ** (-alpha)
    return _matern_profile(np.sqrt(r2), nu)


def eval_composite(xi, xj, i: int, j: int, spec: KernelSpec) -> float:
    """Full composite kernel for one input pair: main kernel plus noise.

    ``xi``/``xj`` are input vectors of equal dimensionality; ``i``/``j``
    are their sample indices (the white-noise term keys on indices, not
    values, so duplicated rows stay distinguishable).
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    xj = np.atleast_1d(np.asarray(xj, dtype=float))
    if xi.shape != xj.shape:
        raise ValueError(f"input dimensionality mismatch: {xi.shape} vs {xj.shape}")
    spec.validate(ndim=xi.size)
    return float(_main_value(xi, xj, i, j, spec) + eval_white_noise(i, j, spec.noise_variance))


def _main_value(xi, xj, i, j, spec: KernelSpec) -> float:
    if spec.family == WHITE_NOISE:
        return spec.amplitude**2 if i == j else 0.0
    if spec.family == PERIODIC:
        k = float(eval_periodic(xi[0] - xj[0], spec.amplitude, spec.roughness, spec.period, spec.base))
        if xi.size > 1:
            ls = np.asarray(spec.lengthscales[1:])
            r2 = float(np.sum(((xi[1:] - xj[1:]) / ls) ** 2))
            k *= float(_stationary_correlation(r2, spec.base.family, spec.base.alpha, spec.base.nu))
        return k
    ls = np.asarray(spec.lengthscales)
    r2 = float(np.sum(((xi - xj) / ls) ** 2))
    return spec.amplitude**2 * float(_stationary_correlation(r2, spec.family, spec.alpha, spec.nu))


# -- vectorised Gram blocks ----------------------------------------------


def main_matrix(spec: KernelSpec, A: np.ndarray, B: np.ndarray, same_samples: bool = False) -> np.ndarray:
    """Main-kernel block ``K_main(A, B)`` without the composite noise term.

    ``same_samples`` marks A and B as the same ordered sample list, which
    is what lets the index-keyed ``whitenoise`` family contribute its
    diagonal.  The composite noise term is handled by the caller
    (:func:`pvgp.gp.build_covariance`).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"input dimensionality mismatch: {A.shape[1]} vs {B.shape[1]}")
    spec.validate(ndim=A.shape[1])

    if spec.family == WHITE_NOISE:
        K = np.zeros((A.shape[0], B.shape[0]))
        if same_samples:
            np.fill_diagonal(K, spec.amplitude**2)
        return K

    if spec.family == PERIODIC:
        dt = A[:, 0:1] - B[:, 0:1].T
        u = 2.0 * np.abs(np.sin(np.pi * dt / spec.period))
        K = spec.amplitude**2 * _warp_profile(u, spec.roughness, spec.base.family, spec.base.alpha, spec.base.nu)
        if A.shape[1] > 1:
            r2 = _scaled_sqdist(A[:, 1:], B[:, 1:], spec.lengthscales[1:])
            K = K * _stationary_correlation(r2, spec.base.family, spec.base.alpha, spec.base.nu)
        return K

    r2 = _scaled_sqdist(A, B, spec.lengthscales)
    return spec.amplitude**2 * _stationary_correlation(r2, spec.family, spec.alpha, spec.nu)


def _scaled_sqdist(A: np.ndarray, B: np.ndarray, lengthscales) -> np.ndarray:
    ls = np.asarray(lengthscales, dtype=float)
    diff = A[:, None, :] / ls - B[None, :, :] / ls
    return np.einsum("ijk,ijk->ij", diff, diff)
