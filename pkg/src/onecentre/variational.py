"""Action of discretized paths and the non-minimality probe for transmission.

Paths are piecewise linear on a uniform grid over [-T, T] with fixed
endpoints; the action is

    A(u) = integral ( |u'|^2 / 2 + V(|u|) ) dt,

evaluated with the exact kinetic energy of the piecewise-linear path and a
midpoint rule for the potential.  The midpoint rule never samples the exact
collision node; cells where the path passes near the origin are refined
dyadically until their contribution settles, so the (integrable) blow-up of V
along a collision path is captured.

The probe displaces a straight transmission path orthogonally by the plateau
profile

    delta                      for |t| < T1,
    delta (T - |t|)/(T - T1)   for T1 <= |t| <= T,

which removes the collision at cost exactly delta^2/(T - T1) of kinetic
action when T1 and T are grid-aligned, and gains potential action that beats
the cost for every small delta: the transmission path is not a local
minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .potentials import PotentialSpec, SmoothedPotential
from .radial import DropFromRest, RadialProblem, case_anchor, collision_time
from .simulator import PhaseState, integrate
from .flow import transmission_extend

#: per-cell refinement tolerance of the potential quadrature
REFINE_TOL = 1e-10
MAX_DEPTH = 48
#: default number of cells of the uniform grid
DEFAULT_CELLS = 2 ** 14


@dataclass(frozen=True)
class DiscretePath:
    """Piecewise-linear path: uniform times on [-T, T], one 2-vector per node."""

    times: np.ndarray
    values: np.ndarray   # (n_nodes, 2)

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("times and values must have the same length")
        dt = np.diff(self.times)
        # node values carry ~eps*|t| rounding, so diffs jitter at eps*T/dt
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
            raise ValueError("grid must be uniform")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def half_span(self) -> float:
        return float(self.times[-1])

    def kinetic_action(self) -> float:
        """Exact integral of |u'|^2/2 for the piecewise-linear path."""
        du = np.diff(self.values, axis=0)
        return float(0.5 * np.sum(du[:, 0]**2 + du[:, 1]**2) / self.dt)

    def radii(self) -> np.ndarray:
        return np.hypot(self.values[:, 0], self.values[:, 1])


def _cell_potential(V, u_a: np.ndarray, u_b: np.ndarray, dt: float,
                    tol: float, depth: int = 0) -> tuple[float, int]:
    """Midpoint quadrature of V(|u(t)|) over one linear segment, with dyadic
    refinement until the contribution settles (never samples the endpoints,
    so an exact-zero node is harmless)."""
    mid = 0.5 * (u_a + u_b)
    coarse = V(math.hypot(mid[0], mid[1])) * dt
    if depth >= MAX_DEPTH:
        return coarse, depth
    m = mid
    left, dl = _cell_midpoint(V, u_a, m, 0.5 * dt)
    right, dr = _cell_midpoint(V, m, u_b, 0.5 * dt)
    fine = left + right
    if abs(fine - coarse) < tol:
        return fine, depth + 1
    l_val, l_depth = _cell_potential(V, u_a, m, 0.5 * dt, tol, depth + 1)
    r_val, r_depth = _cell_potential(V, m, u_b, 0.5 * dt, tol, depth + 1)
    return l_val + r_val, max(l_depth, r_depth)


def _cell_midpoint(V, u_a, u_b, dt) -> tuple[float, int]:
    mid = 0.5 * (u_a + u_b)
    return V(math.hypot(mid[0], mid[1])) * dt, 0


def potential_action(path: DiscretePath, potential: PotentialSpec,
                     tol: float = REFINE_TOL) -> tuple[float, int]:
    """Integral of V(|u|) along the path; returns (value, max refinement depth)."""
    V = potential.value
    total = 0.0
    max_depth = 0
    vals = path.values
    dt = path.dt
    for i in range(len(vals) - 1):
        contrib, depth = _cell_potential(V, vals[i], vals[i + 1], dt, tol)
        total += contrib
        max_depth = max(max_depth, depth)
    return total, max_depth


def action(path: DiscretePath, potential: PotentialSpec,
           tol: float = REFINE_TOL) -> float:
    """A(u) = kinetic + potential action of the discrete path."""
    pot, _ = potential_action(path, potential, tol)
    return path.kinetic_action() + pot


def transmission_discrete_path(potential: PotentialSpec, energy: float,
                               n_cells: int = DEFAULT_CELLS,
                               rtol: float = 1e-12) -> DiscretePath:
    """Discretize the transmission path of the rest-to-rest drop on [-T0, T0].

    The drop starts at rest at the outer rest radius, collides at t = 0 (a
    grid node, with value exactly 0) and continues to the reflected rest
    point.  n_cells must be divisible by 4 so that t = 0 and T1 = T0/2 are
    grid nodes.
    """
    if n_cells % 4:
        raise ValueError("n_cells must be divisible by 4")
    case = DropFromRest(energy)
    anchor, _ = case_anchor(case, potential)
    bare = SmoothedPotential(potential, 0.0)
    pre = integrate(PhaseState((anchor, 0.0), (0.0, 0.0)), bare,
                    horizon=10.0 * collision_time(RadialProblem(bare, energy, 0.0), anchor),
                    rtol=rtol)
    path = transmission_extend(pre)
    T0 = path.collision_time

    times = np.linspace(-T0, T0, n_cells + 1)
    values = np.empty((n_cells + 1, 2))
    for i, t in enumerate(times):
        if i == n_cells // 2:
            values[i] = (0.0, 0.0)   # collision node, known exactly
        else:
            values[i] = path.state_at(T0 + t).position
    return DiscretePath(times, values)


def _collinear_axis(path: DiscretePath, tol: float = 1e-9) -> np.ndarray:
    """Unit vector of the line of motion; error if the path is not collinear."""
    vals = path.values
    norms = np.hypot(vals[:, 0], vals[:, 1])
    i_far = int(np.argmax(norms))
    axis = vals[i_far] / norms[i_far]
    cross = np.abs(vals[:, 0] * axis[1] - vals[:, 1] * axis[0])
    if np.max(cross) > tol * max(norms.max(), 1.0):
        raise ValueError("path is not collinear: orthogonal variation direction is ambiguous")
    return axis


def plateau_profile(times: np.ndarray, delta: float, T1: float, T: float) -> np.ndarray:
    """delta inside |t| < T1, tapering linearly to 0 at |t| = T."""
    a = np.abs(times)
    return np.where(a < T1, delta, delta * (T - a) / (T - T1))


def standard_variation(path: DiscretePath, delta: float, T1: float) -> DiscretePath:
    """Displace a collinear path orthogonally by the plateau profile.

    The displacement direction is the counterclockwise normal of the line of
    motion.  T1 is snapped to the nearest grid node so the kinetic cost of the
    taper is exactly delta^2/(T - T1).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    T = path.half_span
    if not (0.0 < T1 < T):
        raise ValueError("need 0 < T1 < T")
    T1 = path.times[int(np.argmin(np.abs(path.times - T1)))]
    axis = _collinear_axis(path)
    normal = np.array([-axis[1], axis[0]])
    offsets = plateau_profile(path.times, delta, T1, T)
    return DiscretePath(path.times, path.values + offsets[:, None] * normal)


@dataclass(frozen=True)
class ActionComparison:
    """A(u0) - A(u1) split into kinetic and potential parts.

    dA > 0 means the displaced path has smaller action than the transmission
    path.  dK_closed is the exact taper cost -delta^2/(T - T1);
    dV_lower_bound is the one-sided surrogate integral_0^T1
    (V(|u0|) - V(sqrt(u0^2 + delta^2))) dt, a deliberately loose bound kept
    for comparison with the exact dV.
    """

    delta: float
    T1: float
    dK_closed: float
    dK_discrete: float
    dV: float
    dA: float
    dV_lower_bound: float
    collision_cell_depth: int


def delta_action(path: DiscretePath, delta: float, T1: float,
                 potential: PotentialSpec, tol: float = REFINE_TOL) -> ActionComparison:
    """Compare the action of a transmission path and its plateau displacement."""
    varied = standard_variation(path, delta, T1)
    T1_snap = float(path.times[int(np.argmin(np.abs(path.times - T1)))])
    T = path.half_span

    dK_closed = -delta * delta / (T - T1_snap)
    dK_discrete = path.kinetic_action() - varied.kinetic_action()
    pot0, depth0 = potential_action(path, potential, tol)
    pot1, depth1 = potential_action(varied, potential, tol)
    dV = pot0 - pot1

    # one-sided surrogate on t in [0, T1]: the displaced radius there is
    # exactly sqrt(u0^2 + delta^2)
    V = potential.value
    half = len(path.times) // 2
    i_T1 = int(np.argmin(np.abs(path.times - T1_snap)))
    sur = 0.0
    depth_s = 0
    for i in range(half, i_T1):
        u_a, u_b = path.values[i], path.values[i + 1]
        g = lambda r: V(r) - V(math.hypot(r, delta))
        contrib, depth = _cell_potential(g, u_a, u_b, path.dt, tol)
        sur += contrib
        depth_s = max(depth_s, depth)

    return ActionComparison(
        delta=delta, T1=T1_snap,
        dK_closed=dK_closed, dK_discrete=dK_discrete,
        dV=dV, dA=dK_discrete + dV,
        dV_lower_bound=sur,
        collision_cell_depth=max(depth0, depth1, depth_s),
    )
