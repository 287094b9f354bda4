"""Gauge closed forms are checked against the definitions; the iterative
capacity solver is checked against a projected-gradient quadratic program
written independently here."""
import math

import numpy as np
import pytest

from heatlab import TargetSet, capacity, hausdorff_measure, parabolic_metric
from heatlab.errors import DomainError, UsageError
from heatlab.geometry import (CANTOR_DIM, DiscreteMeasure, GaugeResult,
                              riesz_energy, sample_points)

# frozen: Frank-Wolfe on the unit segment at beta=1/2 with 32 sample points
CAPACITY_SEG32 = 0.434799920813908


def test_parabolic_metric_values():
    assert parabolic_metric((0.0, 0.0), (1.0 / 16.0, 0.0)) == pytest.approx(0.5)
    assert parabolic_metric((0.0, 0.0), (0.0, 0.25)) == pytest.approx(0.5)
    # the slower-decaying coordinate wins
    assert parabolic_metric((0.3, 0.1), (0.3 + 1e-8, 0.1 + 0.04)) == pytest.approx(0.2)
    assert parabolic_metric((1.0, 2.0), (1.0, 2.0)) == 0.0


def test_discrete_measure_validation():
    with pytest.raises(DomainError):
        DiscreteMeasure(np.zeros((2, 1)), [0.5, 0.6])
    with pytest.raises(DomainError):
        DiscreteMeasure(np.zeros((2, 1)), [1.5, -0.5])
    with pytest.raises(DomainError):
        DiscreteMeasure(np.zeros((3, 1)), [0.5, 0.5])


def test_riesz_energy_constant_kernel_below_zero():
    mu = DiscreteMeasure(np.array([[0.0], [1.0]]), [0.3, 0.7])
    assert riesz_energy(mu, -0.5) == pytest.approx(1.0, rel=1e-12)


def test_riesz_energy_atoms_have_infinite_self_energy():
    mu = DiscreteMeasure(np.array([[0.0], [1.0]]), [0.3, 0.7])
    assert math.isinf(riesz_energy(mu, 0.5))
    assert math.isinf(riesz_energy(mu, 0.0))


def test_hausdorff_closed_forms_at_the_critical_index():
    seg = TargetSet.segment(np.zeros(1), 0.4)
    assert hausdorff_measure(seg, 1.0).value == pytest.approx(0.4)
    single = TargetSet.singleton(np.zeros(2))
    assert hausdorff_measure(single, 0.0).value == 1.0
    trio = TargetSet.points(np.array([[0.0, 0.0], [0.1, 0.2], [-0.3, 0.4]]))
    assert hausdorff_measure(trio, 0.0).value == 3.0
    ball = TargetSet.ball(np.zeros(2), 0.5, norm="box")
    assert hausdorff_measure(ball, 2.0).value == pytest.approx(1.0)
    round_ball = TargetSet.ball(np.zeros(2), 0.5)
    assert hausdorff_measure(round_ball, 2.0).value == pytest.approx(
        math.pi * 0.25)
    dust = TargetSet.dust(np.zeros(1), 1.0)
    got = hausdorff_measure(dust, CANTOR_DIM)
    assert got.value == pytest.approx(1.0)
    assert got.method == "closed-form"


def test_hausdorff_off_critical_indices():
    seg = TargetSet.segment(np.zeros(1), 0.4)
    assert math.isinf(hausdorff_measure(seg, 0.5).value)
    assert hausdorff_measure(seg, 1.5).value == 0.0
    assert math.isinf(hausdorff_measure(seg, -1.0).value)
    trio = TargetSet.points(np.array([[0.0], [0.1], [0.2]]))
    assert hausdorff_measure(trio, 1.0).value == 0.0


def test_hausdorff_covering_estimate_matches_segment_length():
    seg = TargetSet.segment(np.zeros(1), 1.0)
    got = hausdorff_measure(seg, 1.0, method="covering", epsilon=2.0 ** -4,
                            levels=3)
    assert got.method == "covering"
    assert got.value == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DomainError):
        hausdorff_measure(seg, 1.0, method="sieve")


def test_gauge_result_validation():
    with pytest.raises(DomainError):
        GaugeResult(beta=0.5, value=1.0, method="guess")
    with pytest.raises(DomainError):
        GaugeResult(beta=0.5, value=-1.0, method="covering")
    with pytest.raises(DomainError):
        GaugeResult(beta=0.5, value=1.0, method="covering", gap=-1e-3)


def _zoo():
    return [
        TargetSet.singleton(np.array([0.3, -0.2])),
        TargetSet.points(np.array([[0.0, 0.0], [0.5, 0.1], [-0.4, 0.3]])),
        TargetSet.segment(np.zeros(1), 1.0),
        TargetSet.ball(np.zeros(2), 0.5),
        TargetSet.dust(np.zeros(1), 1.0),
    ]


def test_capacity_below_zero_is_one_for_every_compact_set():
    for A in _zoo():
        res = capacity(A, -0.5)
        assert res.value == 1.0
        assert res.method == "closed-form"


def test_capacity_of_null_sets_vanishes():
    assert capacity(TargetSet.singleton(np.zeros(2)), 0.5).value == 0.0
    assert capacity(TargetSet.points(np.array([[0.0], [0.3]])), 0.0).value == 0.0
    assert capacity(TargetSet.segment(np.zeros(1), 0.0), 0.5).value == 0.0


def test_capacity_matches_frozen_value_and_qp_oracle():
    seg = TargetSet.segment(np.zeros(1), 1.0)
    res = capacity(seg, 0.5, n_points=32, max_iters=200_000, gap_tol=1e-8)
    assert res.converged
    assert res.gap <= 1e-8
    assert res.value == pytest.approx(CAPACITY_SEG32, rel=1e-7)

    # independent minimizer: projected gradient on w K w over the simplex
    pts = sample_points(seg, 32)[:, 0]
    r = np.abs(pts[:, None] - pts[None, :])
    r_min = (pts[1] - pts[0]) / 2.0
    K = np.maximum(r, r_min) ** -0.5
    w = np.full(32, 1.0 / 32)
    step = 1.0 / np.linalg.eigvalsh(2.0 * K).max()
    for _ in range(20_000):
        w = w - step * 2.0 * K @ w
        u = np.sort(w)[::-1]
        css = np.cumsum(u) - 1.0
        rho = np.nonzero(u - css / np.arange(1, 33) > 0)[0][-1]
        w = np.maximum(w - css[rho] / (rho + 1), 0.0)
    assert 1.0 / float(w @ K @ w) == pytest.approx(res.value, rel=1e-6)


def test_capacity_is_monotone_in_beta_and_in_the_set():
    seg = TargetSet.segment(np.zeros(1), 1.0)
    half = TargetSet.segment(np.zeros(1), 0.5)
    kw = dict(n_points=48, max_iters=100_000, gap_tol=1e-7)
    c_small = capacity(seg, 0.25, **kw).value
    c_mid = capacity(seg, 0.5, **kw).value
    c_big = capacity(seg, 0.75, **kw).value
    assert c_small > c_mid > c_big > 0.0
    assert capacity(half, 0.5, **kw).value < c_mid


def test_sample_points_on_a_segment_are_equispaced():
    seg = TargetSet.segment(np.array([-0.5, 0.2]), 1.0)
    pts = sample_points(seg, 11)
    assert pts.shape == (11, 2)
    assert np.allclose(np.diff(pts[:, 0]), 0.1)
    assert pts[0, 0] == -0.5 and pts[-1, 0] == 0.5
    assert np.all(pts[:, 1] == 0.2)
    with pytest.raises(UsageError):
        sample_points(seg, 1)


def test_sample_points_deterministic_for_random_kinds():
    ball = TargetSet.ball(np.zeros(2), 0.5)
    a = sample_points(ball, 64, seed=9)
    b = sample_points(ball, 64, seed=9)
    c = sample_points(ball, 64, seed=10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.all(np.linalg.norm(a, axis=1) <= 0.5 + 1e-12)
