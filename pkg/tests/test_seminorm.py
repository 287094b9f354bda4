"""The three-functional machinery, checked against explicit double loops."""
import numpy as np
import pytest

from heatlab import (GridSpec, Seed, SeminormParams, calibrate_grr_constant,
                     check_grr_implication, grr_functionals,
                     grr_functionals_batch, grr_threshold, sample_noise,
                     solve_linear, window_sup)
from heatlab.errors import ConfigurationError, DomainError, UsageError
from heatlab.seminorm import (CALIBRATION_CAP, CALIBRATION_SHRINK, GrrState,
                              _quad_nodes)


@pytest.fixture(scope="module")
def cal_grid():
    return GridSpec.for_window(T=0.3125, dx=2.0 ** -4, window=(0.0, 1.0),
                               dt=2.0 ** -8)


@pytest.fixture(scope="module")
def cal_paths(cal_grid):
    return [solve_linear(cal_grid, sample_noise(cal_grid, Seed(55, 0, r)))
            for r in range(6)]


def test_params_validation():
    with pytest.raises(ConfigurationError, match="even"):
        SeminormParams(p0=15)
    with pytest.raises(ConfigurationError, match="gamma0"):
        SeminormParams(gamma0=3.9)
    with pytest.raises(ConfigurationError, match="theta"):
        SeminormParams(theta=0.5)
    with pytest.raises(ConfigurationError, match="gamma1"):
        SeminormParams(gamma1=0.3, gamma2=0.045)
    with pytest.raises(ConfigurationError, match="2\\*gamma1"):
        SeminormParams(gamma1=0.05, gamma2=0.045)
    p = SeminormParams()
    assert 2 * p.gamma1 + p.gamma2 == pytest.approx((p.gamma0 - 1) / (2 * p.p0))


def test_state_accumulates_and_validates():
    s = GrrState(y1=1.0, y2=2.0, y3=3.5)
    assert s.z == 6.5
    t = s.with_threshold(a=0.5, r_threshold=1e-3, c_cal=0.25)
    assert (t.a, t.r_threshold, t.c_cal) == (0.5, 1e-3, 0.25)
    with pytest.raises(ConfigurationError):
        GrrState(y1=-0.1, y2=0.0, y3=0.0)
    with pytest.raises(ConfigurationError):
        GrrState(y1=0.0, y2=0.0, y3=0.0, r_threshold=0.0)


def test_quadrature_weights_sum_to_span():
    idx, w = _quad_nodes(0, 100, 0.125, cap=33)
    assert idx[0] == 0 and idx[-1] == 100
    assert idx.size <= 33
    assert w.sum() == pytest.approx((idx[-1] - idx[0]) * 0.125, rel=1e-12)
    # below the cap: every node, uniform interior weights
    idx2, w2 = _quad_nodes(3, 10, 0.5, cap=33)
    assert np.array_equal(idx2, np.arange(3, 11))
    assert w2[1] == pytest.approx(0.5)
    assert w2[0] == pytest.approx(0.25)


def test_batch_functionals_match_explicit_loops():
    params = SeminormParams()
    two_p0 = 2 * params.p0
    t_idx = np.array([0, 1, 3])
    x_idx = np.array([0, 2, 5])
    dt, dx = 2.0 ** -6, 2.0 ** -3
    rng = np.random.default_rng(5)
    patch = 0.5 * rng.standard_normal((2, 3, 3))

    from heatlab.seminorm import _trapezoid_weights
    wt = _trapezoid_weights(t_idx * dt)
    wx = _trapezoid_weights(x_idx * dx)

    def k_t(i, j, expo):
        gap = abs(t_idx[i] - t_idx[j]) * dt
        return 0.0 if gap == 0 else gap ** (-expo)

    def k_x(k, l, expo):
        gap = abs(x_idx[k] - x_idx[l]) * dx
        return 0.0 if gap == 0 else gap ** (-expo)

    y1, y2, y3 = grr_functionals_batch(patch, t_idx, x_idx, dt, dx, params)
    for s in range(2):
        e1 = sum(wt[i] * wt[j] * (patch[s, i, 0] - patch[s, j, 0]) ** two_p0
                 * k_t(i, j, params.gamma0 / 2.0)
                 for i in range(3) for j in range(3))
        e2 = sum(wx[k] * wx[l] * (patch[s, 0, k] - patch[s, 0, l]) ** two_p0
                 * k_x(k, l, params.gamma0 - 2.0)
                 for k in range(3) for l in range(3))
        e3 = 0.0
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    for l in range(3):
                        inc = ((patch[s, i, k] - patch[s, j, k])
                               - (patch[s, i, l] - patch[s, j, l]))
                        e3 += (wt[i] * wt[j] * wx[k] * wx[l]
                               * inc ** two_p0
                               * k_t(i, j, 1.0 + two_p0 * params.gamma1)
                               * k_x(k, l, 1.0 + two_p0 * params.gamma2))
        assert y1[s] == pytest.approx(e1, rel=1e-12)
        assert y2[s] == pytest.approx(e2, rel=1e-12)
        assert y3[s] == pytest.approx(e3, rel=1e-12)


def test_batch_agrees_with_per_path_functionals(cal_grid, cal_paths):
    params = SeminormParams()
    anchor, r, z = (2.0 ** -4, 0.0), 0.3125, 0.5
    n0, n1 = cal_grid.time_index(anchor[0]), cal_grid.time_index(r)
    j0, j1 = cal_grid.space_index(anchor[1]), cal_grid.space_index(z)
    t_idx, _ = _quad_nodes(n0, n1, cal_grid.dt, 33)
    x_idx, _ = _quad_nodes(j0, j1, cal_grid.dx, 33)
    patch = np.stack([v.values[np.ix_(t_idx, x_idx)] for v in cal_paths])
    y1, y2, y3 = grr_functionals_batch(patch, t_idx, x_idx, cal_grid.dt,
                                       cal_grid.dx, params)
    for s, v in enumerate(cal_paths):
        state = grr_functionals(v, params, anchor, r, z)
        assert y1[s] == pytest.approx(state.y1, rel=1e-10)
        assert y2[s] == pytest.approx(state.y2, rel=1e-10)
        assert y3[s] == pytest.approx(state.y3, rel=1e-10)


def test_batch_shape_validation():
    params = SeminormParams()
    with pytest.raises(UsageError):
        grr_functionals_batch(np.zeros((2, 3)), np.arange(3), np.arange(3),
                              0.1, 0.1, params)


def test_functionals_window_validation(cal_paths):
    params = SeminormParams()
    v = cal_paths[0]
    with pytest.raises(DomainError):
        grr_functionals(v, params, (2.0 ** -4, 0.0), 2.0 ** -4, 0.5)
    with pytest.raises(ConfigurationError):
        grr_functionals(v, params, (2.0 ** -4, 0.0), 0.3125, 2.0 ** -4,
                        min_nodes=8)


def test_window_sup_is_monotone_in_the_window(cal_paths):
    v = cal_paths[0]
    anchor = (2.0 ** -4, 0.0)
    small = window_sup(v, anchor, 2.0 ** -4 + 2.0 ** -6, 0.25)
    large = window_sup(v, anchor, 0.3125, 0.5)
    assert 0.0 <= small <= large
    # hand recomputation
    g = v.grid
    n0, n1 = g.time_index(anchor[0]), g.time_index(0.3125)
    j0, j1 = g.space_index(0.0), g.space_index(0.5)
    block = v.values[n0:n1 + 1, j0:j1 + 1]
    assert large == np.abs(block - v.values[n0, j0]).max()


def test_threshold_formula_and_validation():
    params = SeminormParams()
    # 0.5 * a^(2 p0) * zeta^(4 - gamma0) with a=1, zeta=1/4, gamma0=5
    assert grr_threshold(1.0, 0.25, params, 0.5) == pytest.approx(2.0)
    assert grr_threshold(0.5, 0.25, params, 0.5) == pytest.approx(
        2.0 * 0.5 ** 32)
    with pytest.raises(DomainError):
        grr_threshold(0.0, 0.25, params, 0.5)
    with pytest.raises(DomainError):
        grr_threshold(1.0, 1.5, params, 0.5)


def test_implication_check_requires_threshold(cal_paths):
    state = GrrState(y1=0.1, y2=0.1, y3=0.1)
    with pytest.raises(UsageError):
        check_grr_implication(state, cal_paths[0], (2.0 ** -4, 0.0),
                              0.3125, 0.5)
    armed = state.with_threshold(a=1e-9, r_threshold=1e-6, c_cal=0.5)
    # z above the threshold: implication holds vacuously
    assert check_grr_implication(armed, cal_paths[0], (2.0 ** -4, 0.0),
                                 0.3125, 0.5)


def test_calibration_cap_shrink_and_monotonicity(cal_paths):
    params = SeminormParams()
    anchor, zeta = (2.0 ** -4, 0.0), 0.5
    # huge a: no path constrains, so the cap rules
    c_free = calibrate_grr_constant(cal_paths[:5], params, a=50.0, zeta=zeta,
                                    anchor=anchor, min_paths=5)
    assert c_free == CALIBRATION_SHRINK * CALIBRATION_CAP
    # tiny a: every path constrains
    c_tight = calibrate_grr_constant(cal_paths[:5], params, a=1e-4, zeta=zeta,
                                     anchor=anchor, min_paths=5)
    assert 0.0 < c_tight <= c_free
    # adding a path can only lower the constant
    c_more = calibrate_grr_constant(cal_paths, params, a=1e-4, zeta=zeta,
                                    anchor=anchor, min_paths=5)
    assert c_more <= c_tight


def test_calibration_guards(cal_paths):
    params = SeminormParams()
    with pytest.raises(UsageError):
        calibrate_grr_constant([], params, a=1.0, zeta=0.5,
                               anchor=(2.0 ** -4, 0.0))
    with pytest.raises(UsageError):
        calibrate_grr_constant(cal_paths, params, a=1.0, zeta=0.5,
                               anchor=(2.0 ** -4, 0.0), min_paths=100)
    with pytest.raises(DomainError):
        calibrate_grr_constant(cal_paths, params, a=-1.0, zeta=0.5,
                               anchor=(2.0 ** -4, 0.0), min_paths=5)
