"""Apsidal angle quadrature, integrand bound functions, and convergence sweeps.

The apsidal angle of an orbit with angular momentum l > 0 between its
pericentre and the integration cutoff beta = min(safe radius, apocenter) is

    angle = integral_{R-}^{beta}  l dr / (r sqrt(f(r) - l^2)),

with inverse-square-root endpoint zeros (both ends when beta is the
apocenter).  The value is reported together with the split at the geometric
mean of the endpoints: the outer part decays like (R-/beta)^(1/4) as the orbit
approaches collision, while the inner part carries the limit.

The module also evaluates two auxiliary functions used to bound the angle
integrand uniformly in the smoothing parameter -- an envelope built from
smoothed potential increments, and the desingularized factor left after the
endpoint zeros are extracted -- plus the calibration identity

    integral_1^xi dx / (x sqrt((x-1)(1-x/xi))) = pi      for every xi > 1,

which exercises the quadrature engine against an exact value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .potentials import PotentialSpec, SmoothedPotential
from .quadrature import DEFAULT_TOL, sqrt_endpoint_quad
from .radial import (Case, RadialProblem, TurningPoints, case_anchor,
                     turning_points)
from .tables import ConvergenceTable, LimitVerdict, limit_verdict


@dataclass(frozen=True)
class ApsidalAngle:
    """Apsidal angle with its quadrature split and error estimate."""

    angle: float
    pericenter: float
    cutoff: float
    inner_part: float     # [R-, sqrt(R- * beta)]
    outer_part: float     # [sqrt(R- * beta), beta]
    quad_error: float


def apsidal_angle(rp: RadialProblem, safe_radius: float = math.inf,
                  turning: TurningPoints | None = None,
                  rel_tol: float = DEFAULT_TOL) -> ApsidalAngle:
    """Apsidal angle of the orbit described by rp, integrated up to the cutoff.

    Requires l > 0 and a positive pericentre; circular orbits are rejected
    (the angle formula degenerates on a double root).
    """
    l = rp.ang_momentum
    if l <= 0:
        raise ValueError("apsidal angle needs positive angular momentum")
    if turning is None:
        turning = turning_points(rp, safe_radius)
    if turning.degenerate:
        raise ValueError("circular orbit: apsidal angle undefined by the turning-point formula")
    if turning.pericenter <= 0:
        raise ValueError("pericentre is not positive")

    beta = min(safe_radius, turning.apocenter)
    upper_singular = beta == turning.apocenter
    l2 = l * l

    res = sqrt_endpoint_quad(lambda r: l / r, turning.pericenter, beta,
                             lambda r: rp.f(r) - l2,
                             lower_singular=True, upper_singular=upper_singular,
                             split=math.sqrt(turning.pericenter * beta),
                             rel_tol=rel_tol)
    return ApsidalAngle(res.value, turning.pericenter, beta,
                        res.lower_part, res.upper_part, res.error)


def calibration_integral(xi: float, rel_tol: float = DEFAULT_TOL) -> float:
    """Exact-pi self test of the quadrature engine, for any xi > 1.

    The reduced weight of (x-1)(1-x/xi) is the constant 1/xi, so the engine
    runs at machine precision even for nearly degenerate intervals.
    """
    if xi <= 1.0:
        raise ValueError("xi must exceed 1")
    res = sqrt_endpoint_quad(
        lambda x: 1.0 / x, 1.0, xi,
        lambda x: (x - 1.0) * (1.0 - x / xi),
        reduced=lambda x: 1.0 / xi,
        rel_tol=rel_tol)
    return res.value


def integrand_envelope(potential: PotentialSpec, eps: float,
                       y: float, x: float, r_outer: float) -> float:
    """Lower-bound envelope built from smoothed potential increments.

    For admissible potentials and eps small enough this stays >= r_outer for
    every 0 < y < x < r_outer inside the safe radius; that is what caps the
    desingularized angle integrand.  The apparent singularity at x = y is
    removable (the bracket vanishes linearly in x/y - 1).
    """
    if not (0.0 < y < x <= r_outer):
        raise ValueError("need 0 < y < x <= r_outer")
    if x == r_outer:
        return math.inf
    sm = SmoothedPotential(potential, eps)
    vx, vy, vr = sm.value(x), sm.value(y), sm.value(r_outer)
    ratio = (vx - vr) / (vy - vr)
    bracket = (x / y) ** 2 * ratio * (r_outer**2 - y**2) / (r_outer**2 - x**2) - 1.0
    return (r_outer + x) / (x / y - 1.0) * bracket


def increment_ratio(potential: PotentialSpec, eps: float,
                    y: float, x: float, r_outer: float) -> float:
    """(V_eps(x) - V_eps(r_outer)) / (V_eps(y) - V_eps(r_outer)) for y < x < r_outer.

    For admissible potentials this is >= its eps = 0 value once eps is small
    enough, which is the monotonicity step behind the envelope bound.
    """
    sm = SmoothedPotential(potential, eps)
    return (sm.value(x) - sm.value(r_outer)) / (sm.value(y) - sm.value(r_outer))


def desingularized_factor(rp: RadialProblem, beta: float, v_sq: float,
                          rho: float) -> float:
    """The factor left under the square root of the angle integrand after the
    endpoint zeros (rho - 1) and (beta - rho R-) are extracted.

    rho is the radius in units of the pericentre, in (1, beta/R-); v_sq is the
    squared radial velocity at beta (zero when beta is the apocenter).  For
    admissible potentials and eps small enough the factor is bounded by beta
    throughout its domain.
    """
    tp = turning_points(rp, beta)
    rm = tp.pericenter
    if rm <= 0:
        raise ValueError("needs a positive pericentre")
    if not (1.0 < rho < beta / rm):
        raise ValueError("rho outside (1, beta/pericentre)")
    sm = rp.potential
    num = (beta - rho * rm) * (rho - 1.0)
    incr = (sm.value(rho * rm) - sm.value(beta) + 0.5 * v_sq) / \
           (sm.value(rm) - sm.value(beta) + 0.5 * v_sq)
    den = (rm * rm * rho * rho / (beta * beta) - 1.0) + \
        rho * rho * incr * (beta * beta - rm * rm) / (beta * beta)
    return num / den


def smoothed_ratio_limit(potential: PotentialSpec, rho: float,
                         schedule: list[tuple[float, float]] | None = None) -> ConvergenceTable:
    """Table of V_eps(rho*delta)/V_eps(delta) along a (delta, eps) -> (0,0) schedule.

    For slowly varying potentials the ratio tends to 1; homogeneous potentials
    settle at rho^(-alpha) instead.
    """
    if rho < 1.0:
        raise ValueError("rho must be >= 1")
    if schedule is None:
        schedule = [(10.0 ** -k, 10.0 ** -k) for k in range(1, 9)]
    table = ConvergenceTable(("delta", "eps", "ratio"),
                             meta={"rho": rho, "quantity": "V_eps(rho d)/V_eps(d)"})
    for delta, eps in schedule:
        sm = SmoothedPotential(potential, eps)
        table.add(float(delta), float(eps), float(sm.value(rho * delta) / sm.value(delta)))
    ratios = table.column("ratio")
    verdict = limit_verdict(ratios, target=1.0)
    table.meta["limit_estimate"] = verdict.estimate
    table.meta["converges_to_one"] = verdict.converged
    return table


# --- convergence sweeps -----------------------------------------------------

@dataclass(frozen=True)
class SweepPath:
    path_id: str
    cells: tuple[tuple[float, float], ...]   # (eps, l) per cell, schedule order


def default_paths(exponents=range(2, 7)) -> list[SweepPath]:
    """Diagonal plus the two axis-first paths through the (eps, l) grid."""
    ks = list(exponents)
    fine = 10.0 ** -ks[-1]
    diag = tuple((10.0 ** -k, 10.0 ** -k) for k in ks)
    eps_first = tuple((fine, 10.0 ** -k) for k in ks)
    l_first = tuple((10.0 ** -k, fine) for k in ks)
    return [SweepPath("diagonal", diag),
            SweepPath("eps_first", eps_first),
            SweepPath("l_first", l_first)]


def _sweep_cell(potential: PotentialSpec, case: Case, eps: float, l: float,
                rel_tol: float):
    """One sweep cell: initial-data-consistent energy, turning points, angle.

    The cell energy is the energy of the perturbed datum (nominal anchor,
    angular momentum l, smoothing eps), which tends to the case energy as the
    schedule refines.
    """
    sm = SmoothedPotential(potential, eps)
    anchor, v1_bar = case_anchor(case, potential)
    energy = 0.5 * v1_bar * v1_bar + 0.5 * l * l / (anchor * anchor) - sm.value(anchor)
    rp = RadialProblem(sm, energy, l)
    tp = turning_points(rp, case.ball_radius)
    ang = apsidal_angle(rp, case.ball_radius, turning=tp, rel_tol=rel_tol)
    return tp, ang


def _cell_worker(args) -> tuple:
    """Process-pool entry: rebuild the potential from its config and run a cell."""
    from .potentials import from_config
    cfg, case, eps, l, rel_tol = args
    try:
        tp, ang = _sweep_cell(from_config(cfg), case, eps, l, rel_tol)
        return (tp.pericenter, ang.cutoff, ang.angle, ang.quad_error,
                ang.inner_part, ang.outer_part, None)
    except (ValueError, RuntimeError) as exc:
        return (math.nan,) * 6 + (str(exc),)


def convergence_sweep(potential: PotentialSpec, case: Case,
                      paths: list[SweepPath] | None = None,
                      rel_tol: float = DEFAULT_TOL,
                      target: float = math.pi / 2.0,
                      uniformity_tol: float = 1e-2,
                      jobs: int = 1) -> ConvergenceTable:
    """Apsidal angles over (eps, l) schedules, with per-path limit verdicts.

    Individual cell failures are recorded in the table (angle = nan) and the
    sweep continues.  meta carries, per path, the Aitken limit estimate and
    the convergence verdict, plus a uniformity verdict: all path estimates
    within `uniformity_tol` of each other.  jobs > 1 runs cells in a process
    pool (built-in potential families only); rows stay in schedule order.
    """
    if paths is None:
        paths = default_paths()
    table = ConvergenceTable(
        ("path_id", "k", "epsilon", "l", "R_minus", "beta", "delta_theta",
         "quad_err", "I1", "I2"),
        meta={"case": type(case).__name__, "energy": case.energy,
              "ball_radius": case.ball_radius, "target": target})

    flat = [(path, k, eps, l) for path in paths for k, (eps, l) in enumerate(path.cells)]
    if jobs > 1 and potential.config is not None:
        from concurrent.futures import ProcessPoolExecutor
        args = [(potential.config, case, eps, l, rel_tol) for _, _, eps, l in flat]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell_worker, args))
    else:
        results = [None] * len(flat)

    estimates: dict[str, LimitVerdict] = {}
    angles_by_path: dict[str, list[float]] = {p.path_id: [] for p in paths}
    for i, (path, k, eps, l) in enumerate(flat):
        if results[i] is None:
            try:
                tp, ang = _sweep_cell(potential, case, eps, l, rel_tol)
                row = (tp.pericenter, ang.cutoff, ang.angle, ang.quad_error,
                       ang.inner_part, ang.outer_part, None)
            except (ValueError, RuntimeError) as exc:
                row = (math.nan,) * 6 + (str(exc),)
        else:
            row = results[i]
        pericenter, cutoff, angle, err, i1, i2, failure = row
        table.add(path.path_id, k, eps, l, pericenter, cutoff, angle, err, i1, i2)
        if failure is None:
            angles_by_path[path.path_id].append(angle)
        else:
            table.meta.setdefault("cell_errors", []).append((path.path_id, k, failure))

    for path in paths:
        angles = angles_by_path[path.path_id]
        if len(angles) >= 3:
            estimates[path.path_id] = limit_verdict(angles, target=target)

    table.meta["path_limits"] = {
        pid: {"estimate": v.estimate, "converged": v.converged}
        for pid, v in estimates.items()}
    if estimates:
        vals = [v.estimate for v in estimates.values()]
        table.meta["uniform"] = (max(vals) - min(vals)) <= uniformity_tol
    return table
