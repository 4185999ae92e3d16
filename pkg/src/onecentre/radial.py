"""The reduced one-dimensional radial problem.

For a plane orbit of energy E and angular momentum l in a smoothed central
potential, the radial coordinate is governed by

    rdot^2 = 2 (E + V_eps(r)) - l^2 / r^2,

and motion is possible where f(r) = 2 r^2 (E + V_eps(r)) >= l^2.  This module
finds the turning points (pericentre/apocentre) of f(r) = l^2, the first
positive zero of f, and evaluates the singular time-of-flight integrals

    T(r_a, r_b) = integral  drho / sqrt(2 (E + V_eps(rho)) - l^2/rho^2)

with turning-point-aware quadrature.  For zero angular momentum and a weak
singularity the fall reaches the origin in finite time (collision_time).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .potentials import PotentialSpec, SmoothedPotential
from .quadrature import DEFAULT_TOL, regularized_lower_quad, sqrt_endpoint_quad

#: roots closer than this (relative to the peak of f) count as a double root
DEGENERATE_TOL = 1e-12
#: number of points in the bracket scan for turning points
SCAN_POINTS = 10_000


@dataclass(frozen=True)
class RadialProblem:
    """(potential, E, l): the reduced problem for one orbit family."""

    potential: SmoothedPotential
    energy: float
    ang_momentum: float

    def __post_init__(self):
        if self.ang_momentum < 0:
            raise ValueError("angular momentum magnitude must be nonnegative")

    def f(self, r):
        """f(r) = 2 r^2 (E + V_eps(r)); motion needs f(r) >= l^2."""
        r = np.asarray(r, float) if np.ndim(r) else r
        return 2.0 * r * r * (self.energy + self.potential.value(r))

    def radicand(self, r: float) -> float:
        """rdot^2 = 2 (E + V_eps(r)) - l^2/r^2."""
        l = self.ang_momentum
        return 2.0 * (self.energy + self.potential.value(r)) - (l * l) / (r * r)

    def radial_speed(self, r: float) -> float:
        v2 = self.radicand(r)
        if v2 < 0:
            raise ValueError(f"radius {r!r} is outside the allowed region")
        return math.sqrt(v2)


@dataclass(frozen=True)
class TurningPoints:
    """Apsidal data of one orbit.

    pericenter: smallest radius (0 for collision orbits, i.e. l = 0, eps = 0).
    apocenter: largest radius (+inf for unbounded orbits).
    first_zero: first positive zero of f (+inf when f stays positive).
    cutoff: min(safe_radius, apocenter) -- the upper limit of every integral.
    degenerate: True for circular orbits (double root).
    """

    pericenter: float
    apocenter: float
    first_zero: float
    cutoff: float
    degenerate: bool = False


@dataclass(frozen=True)
class DropFromRest:
    """Collision orbit bounded in the ball: start at rest at the outer radius
    where E + V vanishes (that radius must lie inside the ball)."""

    energy: float
    ball_radius: float = math.inf


@dataclass(frozen=True)
class InwardCrossing:
    """Collision orbit entering the ball from its boundary, with the inward
    speed fixed by the energy."""

    energy: float
    ball_radius: float


Case = DropFromRest | InwardCrossing


def case_anchor(case: Case, potential: PotentialSpec) -> tuple[float, float]:
    """Nominal initial radius and signed radial speed for a collision case.

    Drop case: (rest radius, 0); crossing case: (ball radius, -sqrt(2(E+V))).
    Raises when the case preconditions fail (rest radius outside/inside the
    ball as appropriate, or imaginary boundary speed).
    """
    bare = SmoothedPotential(potential, 0.0)
    rest_radius = first_zero(RadialProblem(bare, case.energy, 0.0))
    if isinstance(case, DropFromRest):
        if not rest_radius < case.ball_radius:
            raise ValueError(
                f"drop case needs the rest radius {rest_radius!r} inside the ball "
                f"{case.ball_radius!r}")
        return rest_radius, 0.0
    if not rest_radius >= case.ball_radius:
        raise ValueError(
            f"crossing case needs the rest radius {rest_radius!r} at or beyond the "
            f"ball {case.ball_radius!r}")
    speed_sq = 2.0 * (case.energy + bare.value(case.ball_radius))
    if speed_sq < 0:
        raise ValueError("boundary speed is imaginary: energy too low for the ball radius")
    return case.ball_radius, -math.sqrt(speed_sq)


def first_zero(rp: RadialProblem, r_start: float = 1.0, r_cap: float = 1e9) -> float:
    """First positive zero of f, i.e. the radius where E + V_eps = 0.

    Since E + V_eps decreases in r, a doubling scan from r_start locates the
    sign change; +inf when none exists below r_cap.
    """
    def g(r):
        return rp.energy + rp.potential.value(r)

    x = r_start
    while g(x) <= 0:
        x *= 0.5
        if x < 1e-14:
            return 0.0
    while g(x) > 0:
        x_prev = x
        x *= 2.0
        if x > r_cap:
            return math.inf
    return float(brentq(g, x_prev, x, xtol=1e-15, rtol=8.9e-16))


def turning_points(rp: RadialProblem, safe_radius: float = math.inf) -> TurningPoints:
    """Locate pericentre and apocentre by bracket scan plus root refinement.

    The pericentre is the smallest positive root of f(r) = l^2 crossed with f
    increasing (convention 0 when there is none, e.g. l = 0 with eps = 0); the
    apocenter is the next root crossed with f decreasing (convention +inf).
    Raises when l^2 exceeds the maximum of f on the scan range (no orbit).
    """
    l = rp.ang_momentum
    l2 = l * l
    P = first_zero(rp)

    if l == 0.0:
        # collision orbit for eps = 0 and weak singularity; for eps > 0 the
        # centre is regular and reached whenever E + V_eps(0) > 0 -- and since
        # V_eps decreases, an energy below the core value admits no motion.
        if rp.potential.epsilon > 0.0 and rp.energy + rp.potential.value(0.0) <= 0.0:
            raise ValueError("no orbit: energy below the smoothed core potential")
        return TurningPoints(0.0, P, P, min(safe_radius, P))

    hi = P if math.isfinite(P) else max(1e3, 10.0 * safe_radius if math.isfinite(safe_radius) else 0.0)
    grid = np.geomspace(1e-12, hi * (1.0 - 1e-12), SCAN_POINTS)
    with np.errstate(all="ignore"):
        fvals = rp.f(grid) - l2
    finite = np.isfinite(fvals)
    grid, fvals = grid[finite], fvals[finite]
    i_max = int(np.argmax(fvals))

    # refine the peak: near-circular orbits keep the allowed region between
    # grid points, and the degeneracy test needs the true maximum
    if 0 < i_max < len(grid) - 1:
        from scipy.optimize import minimize_scalar
        res = minimize_scalar(lambda r: l2 - rp.f(r),
                              bounds=(grid[i_max - 1], grid[i_max + 1]),
                              method="bounded", options={"xatol": 1e-14})
        r_peak, f_peak = float(res.x), float(-res.fun)
    else:
        r_peak, f_peak = float(grid[i_max]), float(fvals[i_max])

    if f_peak < -DEGENERATE_TOL:
        raise ValueError(f"no orbit: l^2 = {l2!r} exceeds max f = {f_peak + l2!r} on the scan range")
    if f_peak < DEGENERATE_TOL:
        return TurningPoints(r_peak, r_peak, P, min(safe_radius, r_peak), degenerate=True)

    def refine(lo: float, hi_: float) -> float:
        return float(brentq(lambda r: rp.f(r) - l2, lo, hi_, xtol=1e-15, rtol=8.9e-16))

    below_left = np.where(fvals[:i_max + 1] < 0)[0]
    if len(below_left) == 0:
        pericenter = 0.0
    else:
        pericenter = refine(grid[below_left[-1]], r_peak)

    below_right = np.where(fvals[i_max:] < 0)[0]
    if len(below_right) > 0:
        apocenter = refine(r_peak, grid[i_max + below_right[0]])
    elif math.isfinite(P):
        # the outer crossing hides between the last scan point and the zero
        # of f, where f - l^2 = -l^2 < 0 brackets it from the right
        apocenter = refine(max(r_peak, grid[-1]), P)
    else:
        apocenter = math.inf

    return TurningPoints(pericenter, apocenter, P,
                         min(safe_radius, apocenter), degenerate=False)


def time_of_flight(rp: RadialProblem, r_a: float, r_b: float,
                   turning: TurningPoints | None = None,
                   rel_tol: float = DEFAULT_TOL) -> float:
    """Time for the radial coordinate to move from r_a to r_b (monotonically).

    Endpoints equal to the pericentre/apocenter carry inverse-square-root
    singularities, removed by the quadratic substitutions of the engine.
    """
    if not (0.0 <= r_a <= r_b):
        raise ValueError("need 0 <= r_a <= r_b")
    if math.isclose(r_a, r_b, rel_tol=1e-12):
        return 0.0
    if turning is None:
        turning = turning_points(rp)
    if turning.degenerate:
        raise ValueError("circular orbit: no radial motion between distinct radii")
    l2 = rp.ang_momentum ** 2

    def w(r):
        return rp.f(r) - l2

    lower_sing = math.isclose(r_a, turning.pericenter, rel_tol=1e-12, abs_tol=1e-300)
    upper_sing = math.isfinite(turning.apocenter) and math.isclose(
        r_b, turning.apocenter, rel_tol=1e-12, abs_tol=0.0)

    if rp.ang_momentum == 0.0 and turning.pericenter == 0.0:
        # radial fall: difference of fall times from the origin, each computed
        # with the substitution that tames the integrand near 0
        upper = _fall_time_to_zero(rp, r_b, at_rest=upper_sing, rel_tol=rel_tol)
        lower = 0.0 if r_a == 0.0 else _fall_time_to_zero(rp, r_a, at_rest=False,
                                                          rel_tol=rel_tol)
        return upper - lower

    # integrand 1/sqrt(radicand) = r/sqrt(f - l^2)
    res = sqrt_endpoint_quad(lambda r: r, r_a, r_b, w,
                             lower_singular=lower_sing, upper_singular=upper_sing,
                             rel_tol=rel_tol)
    return res.value


def _fall_time_to_zero(rp: RadialProblem, r0: float, at_rest: bool,
                       rel_tol: float) -> float:
    def g(rho):
        rad = 2.0 * (rp.energy + rp.potential.value(rho))
        if rad <= 0:
            raise ValueError(f"E + V not positive at rho={rho!r}")
        return 1.0 / math.sqrt(rad)

    return regularized_lower_quad(g, r0, at_rest=at_rest, rel_tol=rel_tol)


def collision_time(rp: RadialProblem, r0: float,
                   rel_tol: float = DEFAULT_TOL) -> float:
    """Time to fall from r0 into the origin on a zero-angular-momentum orbit.

    T0 = integral_0^r0 drho / sqrt(2 (E + V(rho))), finite whenever the
    singularity is weak (the integrand vanishes like sqrt(rho) near 0).  When
    r0 is the first zero of f the start is at rest and the upper endpoint is a
    turning point.
    """
    if rp.ang_momentum != 0.0:
        raise ValueError("collision time is defined for zero angular momentum")
    P = first_zero(rp)
    if r0 > P * (1.0 + 1e-12):
        raise ValueError(f"r0={r0!r} is beyond the zero-velocity radius {P!r}")
    at_rest = math.isfinite(P) and math.isclose(r0, P, rel_tol=1e-12)
    return _fall_time_to_zero(rp, r0, at_rest=at_rest, rel_tol=rel_tol)
