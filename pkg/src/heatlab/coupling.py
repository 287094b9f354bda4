"""Residual between the nonlinear field and its frozen-coefficient
linearization around a space-time anchor, with moment and exponent tooling.

For an anchor (t0, x0) the residual at (t, x) is

    L(t, x) = u(t,x) - u(t0,x0) - sigma(u(t0,x0)) * (v(t,x) - v(t0,x0))

where u and v were driven by the same noise realization. Its sup over small
anisotropic rectangles [t0, t0+zeta1] x [x0, x0+zeta2] decays faster than the
increments of either field, which is what the exponent fits quantify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import (ConfigurationError, CouplingError, DomainError,
                     UsageError)
from .noise import GridSpec
from .solver import FieldSolution, SigmaSpec


@dataclass(frozen=True)
class Rectangle:
    """Anchored rectangle [t0, t0+zeta1] x [x0, x0+zeta2], extents in (0, 1]."""

    t0: float
    x0: float
    zeta1: float
    zeta2: float

    def __post_init__(self):
        if not 0.0 < self.zeta1 <= 1.0 or not 0.0 < self.zeta2 <= 1.0:
            raise ConfigurationError("rectangle extents must lie in (0, 1]")
        if self.t0 < 0:
            raise ConfigurationError("anchor time must be nonnegative")

    @property
    def eta(self) -> float:
        """Anisotropy gauge max(zeta1^(1/4), zeta2^(1/2))."""
        return max(self.zeta1 ** 0.25, math.sqrt(self.zeta2))

    def node_slices(self, grid: GridSpec) -> tuple[int, int, int, int]:
        """Inclusive (row_lo, row_hi, col_lo, col_hi); corners must be nodes."""
        return (grid.time_index(self.t0), grid.time_index(self.t0 + self.zeta1),
                grid.space_index(self.x0), grid.space_index(self.x0 + self.zeta2))


@dataclass(frozen=True)
class MomentEstimate:
    """Plug-in estimate of (E[|X|^p])^(1/p) with a bootstrap 95% interval."""

    p: float
    value: float
    ci_lo: float
    ci_hi: float
    n_reps: int

    def __post_init__(self):
        if not self.ci_lo <= self.value <= self.ci_hi:
            raise ConfigurationError("interval must bracket the estimate")
        if self.n_reps < 2:
            raise ConfigurationError("need at least two replications")


@dataclass(frozen=True)
class FitResult:
    """Least-squares power-law fit of value against size on log-log axes."""

    slope: float
    intercept: float
    stderr: float
    r2: float
    n_scales: int

    def __post_init__(self):
        if not 0.0 <= self.r2 <= 1.0 + 1e-12:
            raise ConfigurationError("r2 outside [0, 1]")
        if self.n_scales < 3:
            raise ConfigurationError("fit needs at least 3 scales")


def residual_matrix(u_vals: np.ndarray, v_vals: np.ndarray,
                    sigma: SigmaSpec) -> np.ndarray:
    """|L| on rectangle nodes. Inputs are (..., n_rows, n_cols) node values
    whose [..., 0, 0] entry is the anchor."""
    u_anchor = u_vals[..., 0:1, 0:1]
    v_anchor = v_vals[..., 0:1, 0:1]
    coeff = sigma(u_anchor)
    return np.abs(u_vals - u_anchor - coeff * (v_vals - v_anchor))


def _check_shared_noise(u: FieldSolution, v: FieldSolution) -> None:
    if u.grid != v.grid:
        raise CouplingError("fields live on different grids")
    if u.seed != v.seed:
        raise CouplingError("fields were driven by different noise realizations")


def coupling_residual_sup(u: FieldSolution, v: FieldSolution, sigma: SigmaSpec,
                          rect: Rectangle, min_nodes: int = 8) -> float:
    """Max of |L| over the rectangle's grid nodes.

    The grid must resolve the rectangle with at least ``min_nodes`` nodes per
    side; sup over a coarser mesh would understate the residual.
    """
    _check_shared_noise(u, v)
    r_lo, r_hi, c_lo, c_hi = rect.node_slices(u.grid)
    if r_hi - r_lo + 1 < min_nodes or c_hi - c_lo + 1 < min_nodes:
        raise ConfigurationError(
            f"rectangle resolved with fewer than {min_nodes} nodes per side")
    u_vals = u.values[r_lo:r_hi + 1, c_lo:c_hi + 1]
    v_vals = v.values[r_lo:r_hi + 1, c_lo:c_hi + 1]
    return float(residual_matrix(u_vals, v_vals, sigma).max())


def directional_residual(u: FieldSolution, v: FieldSolution, sigma: SigmaSpec,
                         anchor: tuple[float, float], target: tuple[float, float],
                         direction: str) -> float:
    """|L| at a single target sharing the anchor's time (spatial) or position
    (temporal)."""
    _check_shared_noise(u, v)
    t0, x0 = anchor
    t, x = target
    if direction == "temporal":
        if x != x0:
            raise UsageError("temporal target must keep the anchor position")
    elif direction == "spatial":
        if t != t0:
            raise UsageError("spatial target must keep the anchor time")
    else:
        raise UsageError(f"unknown direction {direction!r}")
    if t < t0:
        raise UsageError("target time precedes the anchor")
    grid = u.grid
    n0, j0 = grid.time_index(t0), grid.space_index(x0)
    n1, j1 = grid.time_index(t), grid.space_index(x)
    u_anchor = u.values[n0, j0]
    coeff = float(sigma(np.float64(u_anchor)))
    return abs(u.values[n1, j1] - u_anchor
               - coeff * (v.values[n1, j1] - v.values[n0, j0]))


_BOOT_SEED = 0x5EED_B007


def moment_from_samples(samples: np.ndarray, p: float,
                        bootstrap: int = 1000) -> MomentEstimate:
    """Moment estimate from realized draws; replication order never matters
    (samples are sorted before any sum)."""
    x = np.sort(np.abs(np.asarray(samples, dtype=np.float64)).ravel())
    if x.size < 2:
        raise UsageError("need at least two replications")
    if p < 1:
        raise DomainError("moment order must be >= 1")
    xp = x ** p
    value = float(xp.mean() ** (1.0 / p))
    if bootstrap > 0 and x[0] != x[-1]:
        rng = np.random.default_rng(_BOOT_SEED)
        idx = rng.integers(0, x.size, size=(bootstrap, x.size))
        stats_ = np.mean(xp[idx], axis=1) ** (1.0 / p)
        ci_lo = float(np.quantile(stats_, 0.025))
        ci_hi = float(np.quantile(stats_, 0.975))
        ci_lo, ci_hi = min(ci_lo, value), max(ci_hi, value)
    else:
        ci_lo = ci_hi = value
    return MomentEstimate(p=float(p), value=value, ci_lo=ci_lo, ci_hi=ci_hi,
                          n_reps=int(x.size))


def estimate_moment(sampler, p: float, n_reps: int,
                    bootstrap: int = 1000) -> MomentEstimate:
    """Moment estimate from a replication procedure: ``sampler(n_reps)`` must
    return that many independent draws."""
    if n_reps < 30:
        raise UsageError("need n_reps >= 30 for a defensible interval")
    samples = np.asarray(sampler(n_reps), dtype=np.float64)
    if samples.size != n_reps:
        raise UsageError("sampler returned the wrong number of draws")
    return moment_from_samples(samples, p, bootstrap)


def fit_exponent(scales) -> FitResult:
    """OLS of log(value) on log(size); the slope is the scaling exponent."""
    pairs = [(float(s), float(v)) for s, v in scales]
    if len(pairs) < 3:
        raise DomainError("need at least 3 scales")
    sizes = np.array([s for s, _ in pairs])
    values = np.array([v for _, v in pairs])
    if np.any(sizes <= 0) or np.any(values <= 0):
        raise DomainError("sizes and values must be positive")
    ly = np.log(values)
    if np.all(ly == ly[0]):
        return FitResult(slope=0.0, intercept=float(ly[0]), stderr=0.0,
                         r2=1.0, n_scales=len(pairs))
    res = stats.linregress(np.log(sizes), ly)
    return FitResult(slope=float(res.slope), intercept=float(res.intercept),
                     stderr=float(res.stderr), r2=float(res.rvalue ** 2),
                     n_scales=len(pairs))
