"""Gauges on compact sets: Hausdorff-measure values, Riesz-kernel energies,
and capacity by convex energy minimization, plus the parabolic metric.

Closed-form Hausdorff values exist for every parametric target kind at its
own dimension (counting measure for finite sets, length for segments,
volume for balls, extent^(log 2/log 3) for the middle-thirds dust); above
the dimension the measure is 0, below it +inf, and negative indices are
+inf by the hitting-theory convention. Covering estimates are explicitly
labeled upper bounds.

Capacity of a sampled continuum is 1 / (minimal quadratic energy over
probability weights on the sample), minimized by Frank-Wolfe with exact
line search on a kernel smoothed at half the sample spacing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError, DomainError, UsageError
from .hitting import TargetSet, cover_set, cover_sum

CANTOR_DIM = math.log(2.0) / math.log(3.0)


def parabolic_metric(p1: tuple[float, float], p2: tuple[float, float]) -> float:
    """max(|t-s|^(1/4), |x-y|^(1/2)) between space-time points (t, x)."""
    dt = abs(p1[0] - p2[0])
    dx = abs(p1[1] - p2[1])
    return max(dt ** 0.25, math.sqrt(dx))


@dataclass(eq=False)
class DiscreteMeasure:
    """Probability weights on finitely many points of R^d."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.support = np.atleast_2d(np.asarray(self.support, dtype=np.float64))
        self.weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if self.support.shape[0] != self.weights.size:
            raise DomainError("one weight per support point")
        if self.weights.min() < 0:
            raise DomainError("weights must be nonnegative")
        if not math.isclose(self.weights.sum(), 1.0, rel_tol=1e-9, abs_tol=1e-9):
            raise DomainError("weights must sum to one")


@dataclass(frozen=True)
class GaugeResult:
    """Value of a set gauge with how it was obtained."""

    beta: float
    value: float
    method: str
    gap: float = 0.0
    converged: bool = True
    r_min: float | None = None

    def __post_init__(self):
        if self.method not in ("closed-form", "covering", "energy-minimization"):
            raise DomainError(f"unknown method {self.method!r}")
        if not (self.value >= 0 or math.isinf(self.value)):
            raise DomainError("gauge values are nonnegative")
        if self.gap < 0:
            raise DomainError("duality gap is nonnegative")


def _ball_volume(d: int, radius: float, norm: str) -> float:
    if norm == "box":
        return (2.0 * radius) ** d
    unit = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)
    return unit * radius ** d


def _closed_form(A: TargetSet, beta: float) -> float | None:
    """Exact measure when the kind has one at this index, else None."""
    if beta < 0:
        return math.inf
    if A.kind in ("singleton", "points") or (A.kind == "segment" and A.length == 0.0):
        dim, at_dim = 0.0, float(1 if A.kind != "points" else A.pts.shape[0])
    elif A.kind == "segment":
        dim, at_dim = 1.0, A.length
    elif A.kind == "ball":
        dim, at_dim = float(A.d), _ball_volume(A.d, A.radius, A.norm)
    elif A.kind == "dust":
        dim, at_dim = CANTOR_DIM, A.extent ** CANTOR_DIM
    else:
        return None
    if math.isclose(beta, dim, rel_tol=1e-12, abs_tol=1e-12):
        return at_dim
    return math.inf if beta < dim else 0.0


def hausdorff_measure(A: TargetSet, beta: float, method: str = "auto",
                      epsilon: float = 2.0 ** -4, levels: int = 3) -> GaugeResult:
    """Measure of A at index beta: closed form where one exists, otherwise a
    covering upper estimate refined over ``levels`` halvings of epsilon."""
    if method in ("auto", "closed-form"):
        value = _closed_form(A, beta)
        if value is not None:
            return GaugeResult(beta=beta, value=value, method="closed-form")
        if method == "closed-form":
            raise CapabilityError(f"no closed form for kind {A.kind!r}")
    if method not in ("auto", "covering"):
        raise DomainError(f"unknown method {method!r}")
    if beta < 0:
        return GaugeResult(beta=beta, value=math.inf, method="closed-form")
    eps = epsilon
    value = cover_sum(cover_set(A, eps), beta)
    for _ in range(levels - 1):
        eps /= 2.0
        value = cover_sum(cover_set(A, eps), beta)
    return GaugeResult(beta=beta, value=value, method="covering")


def _riesz_kernel(r: np.ndarray, beta: float) -> np.ndarray:
    """K(r): r^-beta above 0, log_+(e/r) at 0, constant 1 below 0."""
    if beta < 0:
        return np.ones_like(r)
    out = np.full(r.shape, np.inf)
    pos = r > 0
    if beta == 0:
        out[pos] = np.maximum(0.0, 1.0 - np.log(r[pos]))
    else:
        out[pos] = r[pos] ** (-beta)
    return out


def riesz_energy(mu: DiscreteMeasure, beta: float) -> float:
    """Double sum of w_i w_j K(|x_i - x_j|), diagonal included; atoms carry
    infinite self-energy whenever beta >= 0."""
    active = mu.weights > 0
    pts = mu.support[active]
    w = mu.weights[active]
    diff = pts[:, None, :] - pts[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    K = _riesz_kernel(r, beta)
    if np.isinf(K).any():
        return math.inf
    return float(w @ K @ w)


def sample_points(A: TargetSet, n_points: int,
                  seed: int = 0) -> np.ndarray:
    """Deterministic n-point sample of a continuum target: segments are
    equispaced (endpoints included), other kinds draw from a fixed stream."""
    if n_points < 2:
        raise UsageError("need at least two sample points")
    if A.kind == "segment" and A.length > 0:
        out = np.tile(A.anchor, (n_points, 1))
        out[:, 0] += np.linspace(0.0, A.length, n_points)
        return out
    return A.sample(n_points, np.random.default_rng(seed))


def _min_spacing(pts: np.ndarray) -> float:
    diff = pts[:, None, :] - pts[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    positive = r[r > 0]
    if positive.size == 0:
        raise DomainError("sample collapsed to one point")
    return float(positive.min())


def capacity(A: TargetSet, beta: float, n_points: int = 128,
             max_iters: int = 200_000, gap_tol: float = 1e-6,
             seed: int = 0, r_min: float | None = None) -> GaugeResult:
    """Capacity estimate 1 / min-energy over probability weights on a sample.

    Exact special cases: any set at beta < 0 has capacity 1 (the kernel is
    constant); finite sets at beta >= 0 have capacity 0 (atomic self-energy
    diverges as the smoothing radius vanishes). Continuum kinds run
    Frank-Wolfe with exact line search on the smoothed-kernel energy and
    report the final duality gap.
    """
    if beta < 0:
        return GaugeResult(beta=beta, value=1.0, method="closed-form")
    if A.kind in ("singleton", "points") or (A.kind == "segment" and A.length == 0.0):
        return GaugeResult(beta=beta, value=0.0, method="closed-form")
    if n_points < 2:
        raise UsageError("need at least two sample points")
    pts = sample_points(A, n_points, seed=seed)
    if r_min is None:
        r_min = _min_spacing(pts) / 2.0
    diff = pts[:, None, :] - pts[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    K = _riesz_kernel(np.maximum(r, r_min), beta)

    n = pts.shape[0]
    w = np.full(n, 1.0 / n)
    Kw = K @ w
    energy = float(w @ Kw)
    gap = math.inf
    converged = False
    for _ in range(max_iters):
        grad = 2.0 * Kw
        i = int(np.argmin(grad))
        gap = float(w @ grad - grad[i])
        if gap < gap_tol:
            converged = True
            break
        denom = energy - 2.0 * Kw[i] + K[i, i]
        if denom <= 0:
            gamma = 1.0
        else:
            gamma = min(1.0, max(0.0, (energy - Kw[i]) / denom))
        if gamma == 0.0:
            break
        w *= 1.0 - gamma
        w[i] += gamma
        Kw = (1.0 - gamma) * Kw + gamma * K[:, i]
        energy = float(w @ Kw)
    return GaugeResult(beta=beta, value=1.0 / energy, method="energy-minimization",
                       gap=gap, converged=converged, r_min=r_min)
