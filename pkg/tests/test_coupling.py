import math

import numpy as np
import pytest

from heatlab import (Rectangle, Seed, SigmaSpec, coupling_residual_sup,
                     directional_residual, estimate_moment, fit_exponent,
                     moment_from_samples, residual_matrix, sample_noise,
                     solve_linear, solve_nonlinear)
from heatlab.errors import (ConfigurationError, CouplingError, DomainError,
                            UsageError)


def test_rectangle_validation_and_gauge():
    with pytest.raises(ConfigurationError):
        Rectangle(t0=0.1, x0=0.0, zeta1=0.0, zeta2=0.5)
    with pytest.raises(ConfigurationError):
        Rectangle(t0=0.1, x0=0.0, zeta1=0.5, zeta2=1.5)
    with pytest.raises(ConfigurationError):
        Rectangle(t0=-0.1, x0=0.0, zeta1=0.5, zeta2=0.5)
    r = Rectangle(t0=0.5, x0=0.25, zeta1=2.0 ** -4, zeta2=2.0 ** -2)
    assert r.eta == pytest.approx(0.5)  # max((1/16)^(1/4), (1/4)^(1/2))


def test_rectangle_node_slices(tiny_grid):
    r = Rectangle(t0=8 * tiny_grid.dt, x0=0.25, zeta1=8 * tiny_grid.dt,
                  zeta2=0.25)
    r0, r1, c0, c1 = r.node_slices(tiny_grid)
    assert (r0, r1) == (8, 16)
    assert c1 - c0 == 4  # 0.25 / dx


def test_residual_matrix_by_hand():
    u = np.array([[[1.0, 2.0], [3.0, 4.0]]])
    v = np.array([[[10.0, 20.0], [30.0, 40.0]]])
    sigma = SigmaSpec.constant(2.0)
    L = residual_matrix(u, v, sigma)
    # |L| = |(u - u[0,0]) - sigma(u[0,0]) * (v - v[0,0])|
    expected = np.abs((u - 1.0) - 2.0 * (v - 10.0))
    assert np.array_equal(L, expected)
    assert L[0, 0, 0] == 0.0


def test_unit_sigma_coupling_residual_is_exactly_zero(tiny_grid):
    noise = sample_noise(tiny_grid, Seed(12, 0, 0))
    sigma = SigmaSpec.constant(1.0)
    u = solve_nonlinear(tiny_grid, noise, sigma)
    v = solve_linear(tiny_grid, noise)
    rect = Rectangle(t0=8 * tiny_grid.dt, x0=0.25, zeta1=16 * tiny_grid.dt,
                     zeta2=0.5)
    assert coupling_residual_sup(u, v, sigma, rect) == 0.0


def test_coupling_rejects_mismatched_noise(tiny_grid, sigma_wavy):
    u = solve_nonlinear(tiny_grid, sample_noise(tiny_grid, Seed(1, 0, 0)),
                        sigma_wavy)
    v = solve_linear(tiny_grid, sample_noise(tiny_grid, Seed(1, 0, 1)))
    rect = Rectangle(t0=0.0, x0=0.25, zeta1=16 * tiny_grid.dt, zeta2=0.5)
    with pytest.raises(CouplingError):
        coupling_residual_sup(u, v, sigma_wavy, rect)


def test_coupling_residual_min_nodes(tiny_grid, sigma_wavy):
    noise = sample_noise(tiny_grid, Seed(1, 0, 0))
    u = solve_nonlinear(tiny_grid, noise, sigma_wavy)
    v = solve_linear(tiny_grid, noise)
    slim = Rectangle(t0=0.0, x0=0.25, zeta1=2 * tiny_grid.dt, zeta2=0.5)
    with pytest.raises(ConfigurationError):
        coupling_residual_sup(u, v, sigma_wavy, slim, min_nodes=8)


def test_directional_residual_matches_hand_formula(tiny_grid, sigma_wavy):
    noise = sample_noise(tiny_grid, Seed(8, 0, 3))
    u = solve_nonlinear(tiny_grid, noise, sigma_wavy)
    v = solve_linear(tiny_grid, noise)
    t0, x0 = 8 * tiny_grid.dt, 0.25
    t1 = 24 * tiny_grid.dt
    got = directional_residual(u, v, sigma_wavy, (t0, x0), (t1, x0),
                               "temporal")
    n0, j0 = 8, tiny_grid.space_index(x0)
    coeff = float(sigma_wavy(np.float64(u.values[n0, j0])))
    want = abs(u.values[24, j0] - u.values[n0, j0]
               - coeff * (v.values[24, j0] - v.values[n0, j0]))
    assert got == want


def test_directional_residual_usage_errors(tiny_grid, sigma_wavy):
    noise = sample_noise(tiny_grid, Seed(8, 0, 3))
    u = solve_nonlinear(tiny_grid, noise, sigma_wavy)
    v = solve_linear(tiny_grid, noise)
    t0, x0 = 8 * tiny_grid.dt, 0.25
    with pytest.raises(UsageError):
        directional_residual(u, v, sigma_wavy, (t0, x0), (t0 + tiny_grid.dt, 0.5),
                             "temporal")
    with pytest.raises(UsageError):
        directional_residual(u, v, sigma_wavy, (t0, x0), (t0 + tiny_grid.dt, x0),
                             "spatial")
    with pytest.raises(UsageError):
        directional_residual(u, v, sigma_wavy, (t0, x0), (0.0, x0), "temporal")
    with pytest.raises(UsageError):
        directional_residual(u, v, sigma_wavy, (t0, x0), (t0, x0), "sideways")


def test_moment_of_constant_samples_is_exact():
    est = moment_from_samples(np.full(50, 3.0), p=2)
    assert est.value == pytest.approx(3.0, rel=1e-14)
    assert est.ci_lo == est.ci_hi == est.value  # no spread, no interval


def test_moment_estimate_is_replication_order_invariant(rng):
    x = rng.exponential(size=400)
    a = moment_from_samples(x, p=1.5)
    b = moment_from_samples(x[::-1].copy(), p=1.5)
    c = moment_from_samples(rng.permutation(x), p=1.5)
    assert (a.value, a.ci_lo, a.ci_hi) == (b.value, b.ci_lo, b.ci_hi)
    assert (a.value, a.ci_lo, a.ci_hi) == (c.value, c.ci_lo, c.ci_hi)


def test_moment_recovers_exponential_mean(rng):
    x = rng.exponential(size=4000)
    est = moment_from_samples(x, p=1)
    assert est.value == pytest.approx(1.0, abs=0.08)
    assert est.ci_lo < 1.0 < est.ci_hi
    assert est.n_reps == 4000


def test_moment_validation():
    with pytest.raises(DomainError):
        moment_from_samples(np.ones(10), p=0.5)
    with pytest.raises(UsageError):
        moment_from_samples(np.array([1.0]), p=2)


def test_estimate_moment_guards():
    with pytest.raises(UsageError):
        estimate_moment(lambda n: np.ones(n), p=1, n_reps=10)
    with pytest.raises(UsageError):
        estimate_moment(lambda n: np.ones(n + 1), p=1, n_reps=40)
    est = estimate_moment(lambda n: np.full(n, 2.0), p=3, n_reps=40)
    assert est.value == pytest.approx(2.0, rel=1e-14)


def test_fit_exponent_recovers_exact_power_law():
    sizes = [2.0 ** -k for k in range(2, 8)]
    fit = fit_exponent([(s, 3.7 * s ** 1.8) for s in sizes])
    assert fit.slope == pytest.approx(1.8, rel=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.7), rel=1e-9)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    assert fit.n_scales == 6


def test_fit_exponent_flat_values_give_zero_slope():
    fit = fit_exponent([(0.1, 2.0), (0.2, 2.0), (0.4, 2.0)])
    assert fit.slope == 0.0
    assert fit.r2 == 1.0


def test_fit_exponent_validation():
    with pytest.raises(DomainError):
        fit_exponent([(0.1, 1.0), (0.2, 2.0)])
    with pytest.raises(DomainError):
        fit_exponent([(0.1, 1.0), (0.2, 2.0), (-0.3, 3.0)])
    with pytest.raises(DomainError):
        fit_exponent([(0.1, 1.0), (0.2, 0.0), (0.3, 3.0)])
