import math

import numpy as np
import pytest

from onecentre.apsidal import (apsidal_angle, calibration_integral,
                               convergence_sweep, default_paths,
                               desingularized_factor, increment_ratio,
                               integrand_envelope, smoothed_ratio_limit)
from onecentre.potentials import SmoothedPotential, homogeneous, logarithmic
from onecentre.radial import (DropFromRest, InwardCrossing,
                              RadialProblem, turning_points)
from onecentre.tables import aitken_limit


def log_problem(E, l, eps):
    return RadialProblem(SmoothedPotential(logarithmic(), eps), E, l)


@pytest.mark.parametrize("xi", [1.0001, 1.5, 2.0, 10.0, 1e6])
def test_calibration_integral_is_pi(xi):
    assert calibration_integral(xi) == pytest.approx(math.pi, abs=1e-8)


def test_calibration_integral_rejects_degenerate():
    with pytest.raises(ValueError):
        calibration_integral(1.0)


def test_kepler_apsidal_angle_is_pi():
    # closed-orbit degeneracy of the inverse-distance potential: every
    # elliptic orbit advances exactly pi between apsides
    rng = np.random.default_rng(7)
    for _ in range(5):
        E = rng.uniform(-0.6, -0.25)
        l = rng.uniform(0.2, 0.95) / math.sqrt(-2.0 * E)  # l^2 < -1/(2E)
        rp = RadialProblem(SmoothedPotential(homogeneous(1.0), 0.0), E, l)
        res = apsidal_angle(rp)
        assert res.angle == pytest.approx(math.pi, abs=1e-6)


def test_apsidal_angle_matches_ode_checked_values():
    # values independently cross-checked against direct plane integration
    # (DOP853 at rtol 1e-12, pericentre event), which agreed to ~1e-10
    expected = {2: 1.6476084024, 4: 1.5934760976, 6: 1.5824390234}
    for k, ref in expected.items():
        s = 10.0 ** -k
        rp = log_problem(0.0, s, s)
        res = apsidal_angle(rp)
        assert res.angle == pytest.approx(ref, abs=2e-9)


def test_apsidal_split_parts_sum_and_outer_decay():
    for k in (2, 3, 4):
        s = 10.0 ** -k
        rp = log_problem(0.0, s, s)
        res = apsidal_angle(rp)
        assert res.inner_part + res.outer_part == pytest.approx(res.angle, abs=1e-12)
        # the outer part is capped by 2 (R-/beta)^(1/4)
        assert res.outer_part <= 2.0 * (res.pericenter / res.cutoff) ** 0.25 * (1 + 1e-9)


def test_apsidal_angle_below_pi_near_limit():
    for k in (3, 4, 5):
        s = 10.0 ** -k
        res = apsidal_angle(log_problem(0.0, s, s))
        assert res.angle <= math.pi + 1e-6


def test_apsidal_angle_rejects_circular_and_zero_l():
    with pytest.raises(ValueError):
        apsidal_angle(log_problem(0.0, 0.0, 0.0))
    rp = log_problem(0.0, math.exp(-0.5), 0.0)  # circular
    with pytest.raises(ValueError):
        apsidal_angle(rp)


def test_case2_cutoff_is_ball_radius():
    # E = 1, ball radius 1 < rest radius e: integral stops at the ball
    rp = log_problem(1.0, 1e-3, 1e-3)
    res = apsidal_angle(rp, safe_radius=1.0)
    assert res.cutoff == 1.0
    tp = turning_points(rp, 1.0)
    assert tp.apocenter > 1.0


def test_homogeneous_small_l_limit():
    # apsidal angle tends to pi/(2 - alpha) as l -> 0 at fixed negative energy
    for alpha, target in ((0.5, math.pi / 1.5), (2.0 / 3.0, math.pi / (2 - 2.0 / 3.0))):
        angles = []
        for k in range(6, 13):
            rp = RadialProblem(SmoothedPotential(homogeneous(alpha), 0.0), -0.5, 2.0 ** -k)
            angles.append(apsidal_angle(rp).angle)
        assert aitken_limit(angles) == pytest.approx(target, abs=1e-4)


def test_envelope_bound_on_seeded_samples():
    rng = np.random.default_rng(123)
    p = logarithmic()
    for eps in (1e-2, 1e-4):
        for _ in range(300):
            r_outer = rng.uniform(0.05, 1.0)
            y = rng.uniform(1e-3, 0.999 * r_outer)
            x = rng.uniform(y * (1 + 1e-7), r_outer * (1 - 1e-7))
            assert integrand_envelope(p, eps, y, x, r_outer) >= r_outer - 1e-9


def test_envelope_finite_as_x_approaches_y():
    # the bracket vanishes linearly in x/y - 1: no blow-up at x = y(1+1e-8)
    p = logarithmic()
    y, r_outer = 0.3, 0.9
    val = integrand_envelope(p, 1e-4, y, y * (1.0 + 1e-8), r_outer)
    assert math.isfinite(val)
    assert val >= r_outer - 1e-9


def test_envelope_unsmoothed_increment_inequality():
    # with eps = 0 the increments dominate the chord bound
    # (V(x)-V(r))/(V(y)-V(r)) >= ((r-x)/(r-y)) (y/x)
    rng = np.random.default_rng(5)
    p = logarithmic()
    sm = SmoothedPotential(p, 0.0)
    for _ in range(300):
        r_outer = rng.uniform(0.05, 1.0)
        y = rng.uniform(1e-3, 0.99 * r_outer)
        x = rng.uniform(y * 1.000001, r_outer * 0.999999)
        lhs = (sm.value(x) - sm.value(r_outer)) / (sm.value(y) - sm.value(r_outer))
        rhs = ((r_outer - x) / (r_outer - y)) * (y / x)
        assert lhs >= rhs - 1e-12


def test_envelope_domain_errors():
    p = logarithmic()
    with pytest.raises(ValueError):
        integrand_envelope(p, 0.0, 0.5, 0.4, 0.9)   # x < y
    with pytest.raises(ValueError):
        integrand_envelope(p, 0.0, 0.1, 0.95, 0.9)  # x > r_outer


def test_increment_ratio_monotone_in_smoothing():
    # Q(eps, x) >= Q(0, x) for small eps: smoothing only helps the bound
    rng = np.random.default_rng(11)
    p = logarithmic()
    for eps in (1e-1, 1e-2, 1e-4):
        for _ in range(200):
            r_outer = rng.uniform(0.05, 1.0)
            y = rng.uniform(1e-3, 0.99 * r_outer)
            x = rng.uniform(y * 1.000001, r_outer * 0.999999)
            assert increment_ratio(p, eps, y, x, r_outer) >= \
                increment_ratio(p, 0.0, y, x, r_outer) - 1e-12


def test_desingularized_factor_bounded_by_cutoff():
    rng = np.random.default_rng(202)
    for eps, l in ((1e-2, 1e-2), (1e-4, 1e-4)):
        rp = log_problem(0.0, l, eps)
        tp = turning_points(rp)
        beta = tp.apocenter
        for _ in range(500):
            rho = 1.0 + (beta / tp.pericenter - 1.0) * rng.uniform(1e-9, 1.0 - 1e-9)
            val = desingularized_factor(rp, beta, 0.0, rho)
            assert val <= beta + 1e-9


def test_desingularized_factor_endpoints():
    # at the outer endpoint with beta < apocenter the factor vanishes; at the
    # inner endpoint both numerator and denominator vanish and the limit is
    # finite and positive (still below beta)
    rp = log_problem(1.0, 1e-3, 1e-3)
    beta = 1.0
    tp = turning_points(rp, beta)
    v_sq = rp.radicand(beta)
    near_outer = desingularized_factor(rp, beta, v_sq, beta / tp.pericenter * (1 - 1e-9))
    assert abs(near_outer) < 1e-6
    rp2 = log_problem(0.0, 1e-2, 1e-2)
    tp2 = turning_points(rp2)
    near_inner = desingularized_factor(rp2, tp2.apocenter, 0.0, 1.0 + 1e-9)
    assert 0.0 < near_inner <= tp2.apocenter


def test_desingularized_factor_domain():
    rp = log_problem(0.0, 1e-2, 1e-2)
    tp = turning_points(rp)
    with pytest.raises(ValueError):
        desingularized_factor(rp, tp.apocenter, 0.0, 0.5)


def test_smoothed_ratio_limit_logarithmic():
    table = smoothed_ratio_limit(logarithmic(), 2.0)
    # closed form at delta = eps = 10^-k: log(5 d^2)/log(2 d^2), tending to 1
    # harmonically, so the extrapolant is only ~1e-2 accurate
    for (delta, eps, ratio) in table.rows:
        expected = math.log(5.0 * delta * delta) / math.log(2.0 * delta * delta)
        assert ratio == pytest.approx(expected, rel=1e-12)
    assert table.meta["converges_to_one"]
    assert abs(table.meta["limit_estimate"] - 1.0) < 2e-2


def test_smoothed_ratio_limit_homogeneous_misses_one():
    table = smoothed_ratio_limit(homogeneous(0.5), 2.0)
    ratios = table.column("ratio")
    # on the delta = eps diagonal the smoothed ratio settles at
    # ((rho^2+1)/2)^(-alpha/2), well away from 1
    assert ratios[-1] == pytest.approx(2.5 ** -0.25, rel=1e-6)
    assert abs(table.meta["limit_estimate"] - 1.0) > 0.1


def test_smoothed_ratio_limit_rho_one_trivial():
    table = smoothed_ratio_limit(logarithmic(), 1.0)
    assert all(row[2] == 1.0 for row in table.rows)


def test_convergence_sweep_logarithmic_drop():
    table = convergence_sweep(logarithmic(), DropFromRest(0.0),
                              default_paths(range(2, 6)))
    limits = table.meta["path_limits"]
    assert set(limits) == {"diagonal", "eps_first", "l_first"}
    # the diagonal estimate lands near pi/2
    assert abs(limits["diagonal"]["estimate"] - math.pi / 2) < 2e-2
    diag = [row for row in table.rows if row[0] == "diagonal"]
    angles = [row[6] for row in diag]
    assert all(b < a for a, b in zip(angles, angles[1:]))  # monotone toward pi/2


def test_convergence_sweep_case2_entry():
    table = convergence_sweep(logarithmic(), InwardCrossing(1.0, 1.0),
                              default_paths(range(2, 6)))
    # integrals clamp at the ball radius
    betas = [row[5] for row in table.rows if math.isfinite(row[5])]
    assert all(b == 1.0 for b in betas)
    est = table.meta["path_limits"]["diagonal"]["estimate"]
    assert abs(est - math.pi / 2) < 5e-2


def test_convergence_sweep_homogeneous_not_strongly_regularizable():
    # homogeneous potentials are not slowly varying: the angle limit depends
    # on the path.  With no smoothing the angle heads to pi/(2-alpha); the
    # joint sweep fails the uniformity check.
    from onecentre.apsidal import SweepPath
    bare = SweepPath("bare_l", tuple((0.0, 2.0 ** -k) for k in range(4, 11)))
    diag = SweepPath("diagonal", tuple((10.0 ** -k, 10.0 ** -k) for k in range(2, 6)))
    table = convergence_sweep(homogeneous(0.5), DropFromRest(-0.5), [bare, diag])
    est_bare = table.meta["path_limits"]["bare_l"]["estimate"]
    assert abs(est_bare - math.pi / 1.5) < 1e-2   # pi/(2-alpha) = 2pi/3
    assert table.meta["uniform"] is False or \
        abs(table.meta["path_limits"]["diagonal"]["estimate"] - est_bare) > 0.05


def test_convergence_sweep_records_cell_errors_and_continues():
    # drop case with the ball radius below the rest radius fails in every
    # cell; the sweep records the failures instead of raising
    table = convergence_sweep(logarithmic(), DropFromRest(0.0, ball_radius=0.5),
                              default_paths(range(2, 4)))
    assert len(table.meta["cell_errors"]) == len(table.rows)
    assert all(math.isnan(row[6]) for row in table.rows)
    assert table.meta["path_limits"] == {}
