import math

import numpy as np
import pytest

from onecentre.potentials import homogeneous, logarithmic
from onecentre.variational import (DiscretePath, action, delta_action,
                                   plateau_profile, potential_action,
                                   standard_variation,
                                   transmission_discrete_path)

T0_LOG = math.sqrt(math.pi / 2.0)


@pytest.fixture(scope="module")
def log_path():
    # moderate grid: keeps the module's tests fast, the acceptance suite uses
    # the full default resolution
    return transmission_discrete_path(logarithmic(), 0.0, n_cells=2 ** 12)


def straight_path(v, T=1.0, n=64, offset=(3.0, 0.0)):
    ts = np.linspace(-T, T, n + 1)
    vals = np.stack([offset[0] + v[0] * ts, offset[1] + v[1] * ts], axis=1)
    return DiscretePath(ts, vals)


def test_kinetic_action_of_uniform_motion():
    p = straight_path((0.4, 0.2), T=1.5)
    v2 = 0.4 ** 2 + 0.2 ** 2
    assert p.kinetic_action() == pytest.approx(0.5 * v2 * 3.0, rel=1e-12)


def test_action_against_fine_grid_oracle():
    # straight motion far from the centre in the alpha = 1/2 potential
    p = straight_path((0.4, 0.0), T=1.0, n=512, offset=(3.0, 1.0))
    pot = homogeneous(0.5)
    a = action(p, pot)

    ts = np.linspace(-1.0, 1.0, 2_000_001)
    xs = 3.0 + 0.4 * ts
    ys = np.full_like(ts, 1.0)
    oracle_pot = np.trapezoid(np.hypot(xs, ys) ** -0.5, ts)
    oracle = 0.5 * 0.16 * 2.0 + oracle_pot
    # the discrete path's potential differs from the continuum limit at
    # O(dt^2); 512 cells leave ~1e-8
    assert a == pytest.approx(oracle, abs=1e-7)


def test_action_time_reversal_invariance(log_path):
    rev = DiscretePath(log_path.times, log_path.values[::-1].copy())
    assert action(rev, logarithmic()) == pytest.approx(
        action(log_path, logarithmic()), abs=1e-11)


def test_action_refinement_second_order():
    # with the adaptive refinement disabled (infinite settling tolerance) the
    # potential quadrature is a plain midpoint rule: second order in dt
    pot = homogeneous(0.5)
    vals = [action(straight_path((0.4, 0.0), n=n), pot, tol=math.inf)
            for n in (128, 256, 512)]
    d1, d2 = vals[1] - vals[0], vals[2] - vals[1]
    assert d1 / d2 == pytest.approx(4.0, rel=0.1)
    # the adaptive rule instead settles to one value on every grid
    adaptive = [action(straight_path((0.4, 0.0), n=n), pot) for n in (128, 512)]
    assert abs(adaptive[1] - adaptive[0]) < 1e-8


def test_transmission_path_nodes(log_path):
    n = len(log_path.times) - 1
    assert log_path.times[0] == pytest.approx(-T0_LOG, abs=1e-9)
    assert log_path.times[-1] == pytest.approx(T0_LOG, abs=1e-9)
    # collision node is exact
    assert log_path.values[n // 2] == pytest.approx([0.0, 0.0], abs=0.0)
    # endpoints at the rest radius, reflected
    assert log_path.values[0] == pytest.approx([1.0, 0.0], abs=1e-9)
    assert log_path.values[-1] == pytest.approx([-1.0, 0.0], abs=1e-9)


def test_transmission_action_finite(log_path):
    val, depth = potential_action(log_path, logarithmic())
    assert math.isfinite(val)
    assert depth > 5   # the collision cell really was refined


def test_plateau_profile_shape():
    ts = np.linspace(-1.0, 1.0, 9)
    v = plateau_profile(ts, 0.1, 0.5, 1.0)
    assert v[4] == 0.1                     # centre
    assert v[0] == v[-1] == 0.0            # endpoints
    assert v[1] == pytest.approx(0.05)     # halfway down the taper


def test_standard_variation_geometry(log_path):
    delta, T1 = 1e-3, 0.5 * log_path.half_span
    varied = standard_variation(log_path, delta, T1)
    n = len(log_path.times) - 1
    # collision node displaced to distance delta: collision removed
    mid = varied.values[n // 2]
    assert np.hypot(mid[0], mid[1]) == pytest.approx(delta, abs=0.0)
    # endpoints fixed
    assert varied.values[0] == pytest.approx(log_path.values[0], abs=0.0)
    assert varied.values[-1] == pytest.approx(log_path.values[-1], abs=0.0)


def test_standard_variation_rejects_noncollinear():
    ts = np.linspace(-1.0, 1.0, 65)
    vals = np.stack([np.cos(ts), np.sin(ts)], axis=1)
    with pytest.raises(ValueError):
        standard_variation(DiscretePath(ts, vals), 1e-3, 0.5)


def test_kinetic_cost_closed_form(log_path):
    T = log_path.half_span
    for delta in (1e-2, 1e-3, 1e-4):
        cmp_ = delta_action(log_path, delta, 0.5 * T, logarithmic())
        assert cmp_.dK_closed == pytest.approx(-delta * delta / (T - cmp_.T1), rel=1e-12)
        assert abs(cmp_.dK_discrete - cmp_.dK_closed) < 1e-10


def test_action_gain_positive_and_ratio_increasing(log_path):
    T = log_path.half_span
    results = [delta_action(log_path, d, 0.5 * T, logarithmic())
               for d in (1e-2, 1e-3, 1e-4)]
    assert all(r.dA > 0 for r in results)
    ratios = [r.dV / r.delta ** 2 for r in results]
    assert ratios[0] < ratios[1] < ratios[2]


def test_varied_action_finite_for_all_deltas(log_path):
    for d in (1e-2, 1e-4):
        varied = standard_variation(log_path, d, 0.5 * log_path.half_span)
        assert math.isfinite(action(varied, logarithmic()))


def test_lower_bound_surrogate_below_exact(log_path):
    # the one-sided surrogate drops a factor 2 and end corrections: it stays
    # below the exact potential gain but remains positive
    cmp_ = delta_action(log_path, 1e-3, 0.5 * log_path.half_span, logarithmic())
    assert 0.0 < cmp_.dV_lower_bound < cmp_.dV


def test_nonuniform_grid_rejected():
    ts = np.array([0.0, 0.1, 0.3])
    with pytest.raises(ValueError):
        DiscretePath(ts, np.zeros((3, 2)))
