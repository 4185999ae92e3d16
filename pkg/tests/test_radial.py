import math

import numpy as np
import pytest

from onecentre.potentials import SmoothedPotential, homogeneous, logarithmic
from onecentre.radial import (DropFromRest, InwardCrossing, RadialProblem,
                              case_anchor, collision_time, first_zero,
                              time_of_flight, turning_points)

SQRT_HALF_PI = math.sqrt(math.pi / 2.0)


def log_problem(E, l, eps=0.0):
    return RadialProblem(SmoothedPotential(logarithmic(), eps), E, l)


def kepler_problem(E, l):
    return RadialProblem(SmoothedPotential(homogeneous(1.0), 0.0), E, l)


def test_f_vanishes_at_one_for_zero_energy_log():
    rp = log_problem(0.0, 0.0)
    assert rp.f(1.0) == pytest.approx(0.0, abs=1e-15)
    assert first_zero(rp) == pytest.approx(1.0, abs=1e-14)


def test_f_maximum_at_exp_minus_half():
    # f(r) = -2 r^2 log r peaks at r = e^(-1/2) with value e^(-1)
    rp = log_problem(0.0, 0.0)
    r_star = math.exp(-0.5)
    assert rp.f(r_star) == pytest.approx(math.exp(-1.0), rel=1e-14)


def test_f_tends_to_zero_at_origin_for_weak_type():
    rp = log_problem(0.3, 0.0)
    rs = np.geomspace(1e-10, 1e-2, 40)
    vals = np.abs([rp.f(r) for r in rs])
    assert vals[0] < 1e-17
    assert np.all(np.diff(vals) > 0)


def test_zero_angular_momentum_is_collision_orbit():
    tp = turning_points(log_problem(0.0, 0.0))
    assert tp.pericenter == 0.0
    assert tp.apocenter == pytest.approx(1.0, abs=1e-14)
    assert tp.first_zero == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("l", [1e-1, 1e-2, 1e-3])
def test_positive_angular_momentum_keeps_orbit_off_centre(l):
    tp = turning_points(log_problem(0.0, l))
    assert tp.pericenter > 0.0
    assert tp.pericenter < tp.apocenter


def test_turning_point_residuals_and_interior_positivity():
    rp = log_problem(0.2, 0.3)
    tp = turning_points(rp)
    l2 = rp.ang_momentum ** 2
    assert abs(rp.f(tp.pericenter) - l2) < 1e-10
    assert abs(rp.f(tp.apocenter) - l2) < 1e-10
    rs = np.linspace(tp.pericenter, tp.apocenter, 102)[1:-1]
    assert all(rp.f(r) - l2 > 0 for r in rs)


def test_circular_orbit_detected_as_degenerate():
    # max of f = -2 r^2 log r is e^(-1) at e^(-1/2): l^2 = e^(-1) is circular
    rp = log_problem(0.0, math.exp(-0.5))
    tp = turning_points(rp)
    assert tp.degenerate
    assert tp.pericenter == pytest.approx(math.exp(-0.5), rel=1e-9)
    assert tp.apocenter == tp.pericenter
    assert time_of_flight(rp, tp.pericenter, tp.apocenter, tp) == 0.0


def test_no_orbit_when_l_exceeds_peak():
    with pytest.raises(ValueError, match="no orbit"):
        turning_points(log_problem(0.0, 2.0 * math.exp(-0.5)))


def test_kepler_turning_points_closed_form():
    E, l = -0.4, 0.8
    rp = kepler_problem(E, l)
    tp = turning_points(rp)
    disc = math.sqrt(1.0 + 2.0 * E * l * l)
    assert tp.pericenter == pytest.approx((-1.0 + disc) / (2.0 * E), rel=1e-12)
    assert tp.apocenter == pytest.approx((-1.0 - disc) / (2.0 * E), rel=1e-12)


def test_unbounded_orbit_has_infinite_apocenter():
    # homogeneous alpha=0.5 with E >= 0: f grows without bound
    rp = RadialProblem(SmoothedPotential(homogeneous(0.5), 0.0), 0.5, 0.3)
    tp = turning_points(rp)
    assert tp.apocenter == math.inf
    assert tp.first_zero == math.inf
    assert tp.cutoff == math.inf
    assert turning_points(rp, safe_radius=2.0).cutoff == 2.0


def test_smoothed_zero_l_pericentre_depends_on_core_energy():
    # E + V_eps(0) > 0: the orbit passes through the centre (pericentre 0)
    tp = turning_points(log_problem(0.0, 0.0, eps=0.5))
    assert tp.pericenter == 0.0
    # the smoothed potential peaks at the centre, so an energy below the core
    # value admits no motion at all
    with pytest.raises(ValueError, match="no orbit"):
        turning_points(log_problem(-1.0, 0.0, eps=0.5))


def test_collision_time_log_drop_closed_form():
    # T0 = int_0^1 drho/sqrt(-2 log rho) = sqrt(pi/2), via rho = exp(-u^2/2)
    rp = log_problem(0.0, 0.0)
    assert collision_time(rp, 1.0) == pytest.approx(SQRT_HALF_PI, abs=1e-10)


def test_collision_time_dual_quadrature_oracle():
    # same integral by an independent plain quadrature on the substituted form
    from scipy.integrate import quad
    rp = log_problem(0.0, 0.0)
    oracle, _ = quad(lambda u: math.exp(-u * u / 2.0), 0.0, 12.0,
                     epsabs=1e-12, epsrel=1e-12, limit=200)
    assert collision_time(rp, 1.0) == pytest.approx(oracle, abs=1e-8)


def test_collision_time_homogeneous_closed_form():
    # int_0^1 rho^(1/4)/sqrt(2) drho = (4/5)/sqrt(2)
    rp = RadialProblem(SmoothedPotential(homogeneous(0.5), 0.0), 0.0, 0.0)
    assert collision_time(rp, 1.0) == pytest.approx(0.8 / math.sqrt(2.0), abs=1e-12)


def test_collision_time_decreases_with_energy():
    rp0 = log_problem(0.0, 0.0)
    rp1 = log_problem(0.5, 0.0)
    assert collision_time(rp1, 0.5) < collision_time(rp0, 0.5)


def test_collision_time_requires_zero_l():
    with pytest.raises(ValueError):
        collision_time(log_problem(0.0, 0.1), 0.5)


def test_time_of_flight_additivity():
    rp = log_problem(0.2, 0.3)
    tp = turning_points(rp)
    a, b = tp.pericenter, tp.apocenter
    m = 0.5 * (a + b)
    whole = time_of_flight(rp, a, b, tp)
    parts = time_of_flight(rp, a, m, tp) + time_of_flight(rp, m, b, tp)
    assert whole == pytest.approx(parts, abs=1e-9)


def test_time_of_flight_strictly_increasing_in_upper_limit():
    rp = log_problem(0.2, 0.3)
    tp = turning_points(rp)
    rs = np.linspace(tp.pericenter, tp.apocenter, 12)[1:-1]
    times = [time_of_flight(rp, tp.pericenter, r, tp) for r in rs]
    assert all(b > a for a, b in zip(times, times[1:]))


def test_time_of_flight_continuity_near_collision_datum():
    # small perturbations of (E, l, r0, eps) move the fall time only slightly
    base = collision_time(log_problem(0.0, 0.0), 0.9)
    d = 1e-6
    rp = RadialProblem(SmoothedPotential(logarithmic(), d), 0.0 + d, d)
    tp = turning_points(rp)
    perturbed = time_of_flight(rp, tp.pericenter, 0.9 + d, tp)
    assert abs(perturbed - base) < 1e-3


def test_case_anchor_drop():
    anchor, v1 = case_anchor(DropFromRest(0.0), logarithmic())
    assert anchor == pytest.approx(1.0, abs=1e-14)
    assert v1 == 0.0
    with pytest.raises(ValueError):
        case_anchor(DropFromRest(0.0, ball_radius=0.5), logarithmic())


def test_case_anchor_entry():
    # E = 1, ball 1: rest radius e > 1; boundary speed sqrt(2(1+0)) = sqrt 2
    anchor, v1 = case_anchor(InwardCrossing(1.0, 1.0), logarithmic())
    assert anchor == 1.0
    assert v1 == pytest.approx(-math.sqrt(2.0), rel=1e-14)
    with pytest.raises(ValueError):
        case_anchor(InwardCrossing(0.0, 2.0), logarithmic())
