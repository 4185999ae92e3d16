"""Adaptive quadrature for integrands with inverse-square-root endpoint zeros.

All the singular integrals in this package have the form

    integral_a^b  g(r) / sqrt(w(r)) dr

where the radicand w is positive inside (a, b) and has a simple zero at one or
both endpoints (turning points of the radial motion).  The substitution
r = a + s^2 (resp. r = b - t^2) turns the endpoint behaviour into a smooth
integrand, which is then fed to adaptive Gauss-Kronrod quadrature.

Evaluating w near its zero by subtraction is noisy; the engine therefore works
with the *reduced weight*

    omega(r) = w(r) / ((r - a)^[lower] (b - r)^[upper])

which extends continuously to the endpoints.  Callers that know a closed
smooth form for omega can pass it (`reduced`) and get machine-precision
results even on nearly degenerate intervals; otherwise omega is built from w
with a guard that never divides by an offset below the floating-point noise
floor.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad

_EPS = float(np.finfo(float).eps)

#: default relative tolerance of all singular quadratures
DEFAULT_TOL = 1e-10


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float          # quadrature error estimate (sum over legs)
    lower_part: float     # contribution of [a, split]
    upper_part: float     # contribution of [split, b]
    split: float


def sqrt_endpoint_quad(g: Callable, a: float, b: float, w: Callable, *,
                       lower_singular: bool = True, upper_singular: bool = True,
                       reduced: Callable | None = None,
                       split: float | None = None,
                       rel_tol: float = DEFAULT_TOL,
                       limit: int = 200) -> QuadResult:
    """integral_a^b g(r)/sqrt(w(r)) dr with simple w-zeros at flagged endpoints.

    split: interior split point; defaults to the geometric mean of the
        endpoints when both are singular and a > 0 (which resolves the
        multi-scale structure of near-collision integrals), else the midpoint.
    reduced: optional smooth omega(r) = w(r)/((r-a)^La (b-r)^Lb).
    """
    if not (b > a):
        raise ValueError("need b > a")
    span = b - a
    guard = 64.0 * _EPS * max(abs(a), abs(b), 1e-300)
    La = 1 if lower_singular else 0
    Lb = 1 if upper_singular else 0

    def omega(d_lower: float, d_upper: float) -> float:
        """Reduced weight at the point with the given (exact) endpoint offsets."""
        if reduced is not None:
            return reduced(a + d_lower)
        dl, du = d_lower, d_upper
        for _ in range(8):
            dl = max(dl, guard)
            du = max(du, guard)
            r = a + dl if La else b - du
            val = w(r)
            if La:
                val /= dl
            if Lb:
                val /= du
            if math.isfinite(val) and val > 0.0:
                return val
            # rounding noise at the zero: back the offsets away and retry
            dl *= 4.0
            du *= 4.0
        raise QuadratureError(
            f"radicand not positive near r={a + d_lower!r} (interval [{a!r}, {b!r}])")

    def leg_lower(s: float) -> float:
        d = s * s
        om = omega(d, span - d)
        rad = om * (span - d) if Lb else om
        return 2.0 * g(a + d) / math.sqrt(rad)

    def leg_upper(t: float) -> float:
        d = t * t
        om = omega(span - d, d)
        rad = om * (span - d) if La else om
        return 2.0 * g(b - d) / math.sqrt(rad)

    def leg_plain(r: float) -> float:
        val = w(r)
        if val <= 0.0:
            raise QuadratureError(f"radicand negative at r={r!r} inside [{a!r}, {b!r}]")
        return g(r) / math.sqrt(val)

    if split is None:
        split = math.sqrt(a * b) if (La and Lb and a > 0) else 0.5 * (a + b)
    if not (a < split < b):
        raise ValueError("split must be interior")

    opts = dict(epsabs=0.0, epsrel=rel_tol, limit=limit)
    # near machine precision the adaptive rule may report that roundoff stops
    # it short of the requested tolerance; the returned error estimate is
    # still trustworthy, so judge by it instead of the warning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        if La:
            I1, e1 = quad(leg_lower, 0.0, math.sqrt(split - a), **opts)
        else:
            I1, e1 = quad(leg_plain, a, split, **opts)
        if Lb:
            I2, e2 = quad(leg_upper, 0.0, math.sqrt(b - split), **opts)
        else:
            I2, e2 = quad(leg_plain, split, b, **opts)
    value = I1 + I2
    err = e1 + e2
    if not math.isfinite(value) or err > 1e4 * rel_tol * max(abs(value), 1e-12):
        raise QuadratureError(
            f"quadrature did not converge on [{a!r}, {b!r}]: value {value!r}, "
            f"error estimate {err!r}")
    return QuadResult(value, err, I1, I2, split)


def regularized_lower_quad(g: Callable, r0: float, *, at_rest: bool,
                           rel_tol: float = DEFAULT_TOL) -> float:
    """integral_0^r0 g(rho) drho where g vanishes at 0 like sqrt(rho) but has
    unbounded derivatives there (fall-time integrands of weak singularities).

    The substitution rho = s^2 tames the derivative blow-up at 0.  When
    `at_rest` the integrand has an inverse-square-root singularity at r0
    (start from a turning point), handled by rho = r0 - t^2.
    """
    m = 0.5 * r0

    def low(s: float) -> float:
        return 2.0 * s * g(s * s)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        I1, e1 = quad(low, 0.0, math.sqrt(m), epsabs=0.0, epsrel=rel_tol, limit=200)
        if at_rest:
            def up(t: float) -> float:
                return 2.0 * t * g(r0 - t * t)
            I2, e2 = quad(up, 0.0, math.sqrt(r0 - m), epsabs=0.0, epsrel=rel_tol, limit=200)
        else:
            I2, e2 = quad(g, m, r0, epsabs=0.0, epsrel=rel_tol, limit=200)
    value = I1 + I2
    if not math.isfinite(value) or e1 + e2 > 1e4 * rel_tol * max(abs(value), 1e-12):
        raise QuadratureError(
            f"fall-time quadrature did not converge on [0, {r0!r}]")
    return value
