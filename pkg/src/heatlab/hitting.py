"""Dyadic-cell machinery and Monte Carlo hitting estimators.

Cells shrink anisotropically (time extent 2^-4n, space extent 2^-2n at level
n, the parabolic scaling of the field). Small-ball estimates measure how
often the field comes within 2^-n of a level inside one cell; hitting
estimates measure how often a d-component field enters a tolerance
neighborhood of a compact target set somewhere in a space-time window. All
multi-threshold and multi-target variants in one experiment run on common
random numbers, so pathwise event nesting is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import engine
from .coupling import Rectangle
from .errors import (CapabilityError, ConfigurationError, DomainError,
                     ResourceError)
from .noise import GridSpec, derive_seed
from .solver import SigmaSpec

HOLDER_TIME = 0.25
HOLDER_SPACE = 0.5


@dataclass(frozen=True)
class DyadicCell:
    """Level-n cell (m, l): extents 2^-4n in time and 2^-2n in space."""

    n: int
    m: int
    l: int
    h1: float = HOLDER_TIME
    h2: float = HOLDER_SPACE

    def __post_init__(self):
        if self.n < 0 or self.m < 0 or self.l < 0:
            raise ConfigurationError("cell indices must be nonnegative")
        if (self.h1, self.h2) != (HOLDER_TIME, HOLDER_SPACE):
            raise ConfigurationError("cell exponents are fixed at (1/4, 1/2)")

    @property
    def zeta1(self) -> float:
        return 2.0 ** (-self.n / self.h1)

    @property
    def zeta2(self) -> float:
        return 2.0 ** (-self.n / self.h2)

    def rectangle(self, origin: tuple[float, float] = (0.0, 0.0)) -> Rectangle:
        return Rectangle(t0=origin[0] + self.m * self.zeta1,
                         x0=origin[1] + self.l * self.zeta2,
                         zeta1=self.zeta1, zeta2=self.zeta2)


def dyadic_cell(n: int, m: int, l: int, origin: tuple[float, float] = (0.0, 0.0),
                I: tuple[float, float] | None = None,
                J: tuple[float, float] | None = None) -> Rectangle:
    """Rectangle of the level-n cell; errors if it misses the I x J window."""
    rect = DyadicCell(n=n, m=m, l=l).rectangle(origin)
    if I is not None and (rect.t0 > I[1] or rect.t0 + rect.zeta1 < I[0]):
        raise DomainError("cell lies outside the time window")
    if J is not None and (rect.x0 > J[1] or rect.x0 + rect.zeta2 < J[0]):
        raise DomainError("cell lies outside the space window")
    return rect


def cells_intersecting(n: int, I: tuple[float, float], J: tuple[float, float],
                       origin: tuple[float, float] = (0.0, 0.0)) -> list[DyadicCell]:
    """All level-n cells meeting I x J (count grows like 2^(6n))."""
    z1, z2 = 2.0 ** (-4 * n), 2.0 ** (-2 * n)
    m_lo = max(0, math.floor((I[0] - origin[0]) / z1))
    m_hi = math.floor((I[1] - origin[0]) / z1)
    l_lo = max(0, math.floor((J[0] - origin[1]) / z2))
    l_hi = math.floor((J[1] - origin[1]) / z2)
    return [DyadicCell(n=n, m=m, l=l)
            for m in range(m_lo, m_hi + 1) for l in range(l_lo, l_hi + 1)]


def wilson_interval(hits: int, n_reps: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score 95% interval; stays sane for estimates at 0 or 1."""
    if not 0 <= hits <= n_reps or n_reps <= 0:
        raise DomainError("need 0 <= hits <= n_reps, n_reps > 0")
    p = hits / n_reps
    denom = 1.0 + z * z / n_reps
    center = (p + z * z / (2 * n_reps)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / n_reps
                                   + z * z / (4 * n_reps * n_reps))
    # roundoff at p in {0, 1} can land the endpoint a few ulp past p
    return min(max(0.0, center - half), p), max(min(1.0, center + half), p)


@dataclass(frozen=True)
class HittingEstimate:
    """Binomial frequency with its Wilson interval."""

    p_hat: float
    ci_lo: float
    ci_hi: float
    n_reps: int
    n: int | None = None
    tol_hit: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.ci_lo <= self.p_hat <= self.ci_hi <= 1.0:
            raise ConfigurationError("interval must bracket the estimate in [0,1]")


def _cantor_unit_distance(y: np.ndarray, depth: int = 45) -> np.ndarray:
    """Exact (to 3^-depth) distance from each entry to the middle-thirds set
    on [0, 1]."""
    pos = np.asarray(y, dtype=np.float64).copy()
    out = np.zeros_like(pos)
    below = pos < 0.0
    out[below] = -pos[below]
    above = pos > 1.0
    out[above] = pos[above] - 1.0
    active = ~(below | above)
    pos = np.where(active, pos, 0.0)
    scale = np.ones_like(pos)
    for _ in range(depth):
        if not active.any():
            break
        in_gap = active & (pos > 1.0 / 3.0) & (pos < 2.0 / 3.0)
        out[in_gap] = scale[in_gap] * np.minimum(pos[in_gap] - 1.0 / 3.0,
                                                 2.0 / 3.0 - pos[in_gap])
        active &= ~in_gap
        right = active & (pos >= 2.0 / 3.0)
        pos = np.where(right, 3.0 * pos - 2.0, 3.0 * pos)
        pos = np.where(active, pos, 0.0)
        scale = np.where(active, scale / 3.0, scale)
    return out


class TargetSet:
    """Compact subset of [-M, M]^d with exact point-to-set distance.

    Kinds: ``singleton``, ``points``, ``segment`` (axis-aligned along the
    first coordinate), ``ball`` (euclidean or box norm), ``dust`` (a
    middle-thirds set stretched along the first coordinate). Distances
    evaluate on (g, d, w) stacks of field vectors.
    """

    def __init__(self, kind: str, d: int, M: float, *, point=None, pts=None,
                 anchor=None, length: float = 0.0, center=None,
                 radius: float = 0.0, norm: str = "euclidean",
                 extent: float = 0.0):
        self.kind = kind
        self.d = int(d)
        self.M = float(M)
        self.point = None if point is None else np.asarray(point, dtype=np.float64)
        self.pts = None if pts is None else np.atleast_2d(np.asarray(pts, dtype=np.float64))
        self.anchor = None if anchor is None else np.asarray(anchor, dtype=np.float64)
        self.length = float(length)
        self.center = None if center is None else np.asarray(center, dtype=np.float64)
        self.radius = float(radius)
        self.norm = norm
        self.extent = float(extent)
        self._validate()

    def _validate(self):
        if self.d < 1:
            raise ConfigurationError("need d >= 1")
        if self.M <= 0:
            raise ConfigurationError("bounding half-width must be positive")

        def inside(points):
            if np.abs(points).max() > self.M + 1e-12:
                raise ConfigurationError("target leaves the [-M, M]^d box")

        if self.kind == "singleton":
            if self.point is None or self.point.shape != (self.d,):
                raise ConfigurationError("singleton needs one d-point")
            inside(self.point)
        elif self.kind == "points":
            if self.pts is None or self.pts.ndim != 2 or self.pts.shape[1] != self.d:
                raise ConfigurationError("points need shape (k, d)")
            inside(self.pts)
        elif self.kind == "segment":
            if self.anchor is None or self.anchor.shape != (self.d,) or self.length < 0:
                raise ConfigurationError("segment needs an anchor and length >= 0")
            far = self.anchor.copy()
            far[0] += self.length
            inside(np.stack([self.anchor, far]))
        elif self.kind == "ball":
            if self.center is None or self.center.shape != (self.d,) or self.radius <= 0:
                raise ConfigurationError("ball needs a center and radius > 0")
            if self.norm not in ("euclidean", "box"):
                raise ConfigurationError("ball norm must be euclidean or box")
            if np.abs(self.center).max() + self.radius > self.M + 1e-12:
                raise ConfigurationError("target leaves the [-M, M]^d box")
        elif self.kind == "dust":
            if self.anchor is None or self.anchor.shape != (self.d,) or self.extent <= 0:
                raise ConfigurationError("dust needs an anchor and extent > 0")
            far = self.anchor.copy()
            far[0] += self.extent
            inside(np.stack([self.anchor, far]))
        else:
            raise ConfigurationError(f"unknown target kind {self.kind!r}")

    @classmethod
    def singleton(cls, point, M: float = 1.0) -> "TargetSet":
        point = np.asarray(point, dtype=np.float64)
        return cls("singleton", point.size, M, point=point)

    @classmethod
    def points(cls, pts, M: float = 1.0) -> "TargetSet":
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        return cls("points", pts.shape[1], M, pts=pts)

    @classmethod
    def segment(cls, anchor, length: float, M: float = 1.0) -> "TargetSet":
        anchor = np.asarray(anchor, dtype=np.float64)
        return cls("segment", anchor.size, M, anchor=anchor, length=length)

    @classmethod
    def ball(cls, center, radius: float, M: float = 1.0,
             norm: str = "euclidean") -> "TargetSet":
        center = np.asarray(center, dtype=np.float64)
        return cls("ball", center.size, M, center=center, radius=radius, norm=norm)

    @classmethod
    def dust(cls, anchor, extent: float, M: float = 1.0) -> "TargetSet":
        anchor = np.asarray(anchor, dtype=np.float64)
        return cls("dust", anchor.size, M, anchor=anchor, extent=extent)

    def distance(self, vec: np.ndarray) -> np.ndarray:
        """Euclidean distance from each (g, :, w) column vector to the set."""
        if vec.ndim != 3 or vec.shape[1] != self.d:
            raise ConfigurationError("expected a (g, d, w) stack")
        if self.kind == "singleton":
            diff = vec - self.point[None, :, None]
            return np.sqrt(np.einsum("gdw,gdw->gw", diff, diff))
        if self.kind == "points":
            best = None
            for pt in self.pts:
                diff = vec - pt[None, :, None]
                dist = np.sqrt(np.einsum("gdw,gdw->gw", diff, diff))
                best = dist if best is None else np.minimum(best, dist)
            return best
        if self.kind == "segment":
            first = vec[:, 0, :]
            lo, hi = self.anchor[0], self.anchor[0] + self.length
            excess = np.clip(lo - first, 0.0, None) + np.clip(first - hi, 0.0, None)
            cross = vec[:, 1:, :] - self.anchor[1:, None]
            cross_sq = np.einsum("gkw,gkw->gw", cross, cross)
            return np.sqrt(excess * excess + cross_sq)
        if self.kind == "ball":
            diff = vec - self.center[None, :, None]
            if self.norm == "euclidean":
                r = np.sqrt(np.einsum("gdw,gdw->gw", diff, diff))
            else:
                r = np.abs(diff).max(axis=1)
            return np.clip(r - self.radius, 0.0, None)
        first = (vec[:, 0, :] - self.anchor[0]) / self.extent
        d0 = self.extent * _cantor_unit_distance(first)
        cross = vec[:, 1:, :] - self.anchor[1:, None]
        cross_sq = np.einsum("gkw,gkw->gw", cross, cross)
        return np.sqrt(d0 * d0 + cross_sq)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Random points of the set, shape (count, d)."""
        if self.kind == "singleton":
            return np.tile(self.point, (count, 1))
        if self.kind == "points":
            return self.pts[rng.integers(0, self.pts.shape[0], count)]
        if self.kind == "segment":
            out = np.tile(self.anchor, (count, 1))
            out[:, 0] += rng.uniform(0.0, self.length, count)
            return out
        if self.kind == "ball":
            if self.norm == "box":
                offs = rng.uniform(-self.radius, self.radius, (count, self.d))
            else:
                raw = rng.standard_normal((count, self.d))
                raw /= np.linalg.norm(raw, axis=1, keepdims=True)
                offs = raw * (self.radius * rng.uniform(0, 1, (count, 1))
                              ** (1.0 / self.d))
            return self.center + offs
        digits = rng.integers(0, 2, (count, 45)).astype(np.float64)
        powers = (2.0 / 3.0 ** np.arange(1, 46))
        out = np.tile(self.anchor, (count, 1))
        out[:, 0] += self.extent * (digits @ powers)
        return out


def _cell_grid(cell: Rectangle, min_nodes: int = 8,
               pad: float = 6.0) -> GridSpec:
    """Grid resolving the cell with >= min_nodes nodes per side, horizon at
    the cell's top."""
    dx = cell.zeta2 / min_nodes
    dt = min(dx * dx / 2.0, cell.zeta1 / min_nodes)
    return GridSpec.for_window(T=cell.t0 + cell.zeta1, dx=dx,
                               window=(cell.x0, cell.x0 + cell.zeta2),
                               dt=dt, pad=pad)


def _cell_slices(cell: Rectangle, grid: GridSpec,
                 min_nodes: int = 1) -> tuple[int, int, int, int]:
    """Inclusive index box of the grid nodes lying inside the cell.

    Cells need not be grid-aligned. A cell whose interior contains no node
    row or no node column is unresolved on this grid.
    """
    eps = 1e-9
    r_lo = max(0, math.ceil(cell.t0 / grid.dt - eps))
    r_hi = min(grid.n_steps, math.floor((cell.t0 + cell.zeta1) / grid.dt + eps))
    c_lo = max(0, math.ceil((cell.x0 - grid.x_lo) / grid.dx - eps))
    c_hi = min(grid.n_x - 1,
               math.floor((cell.x0 + cell.zeta2 - grid.x_lo) / grid.dx + eps))
    if r_hi - r_lo + 1 < min_nodes or c_hi - c_lo + 1 < min_nodes:
        raise ConfigurationError(
            f"grid does not resolve the cell: fewer than {min_nodes} node(s) "
            "per side lie inside it")
    return r_lo, r_hi, c_lo, c_hi


def small_ball_prob(z: float, cell: Rectangle, n: int, n_reps: int, *,
                    sigma: SigmaSpec, master_seed: int = 0,
                    threshold: float | None = None,
                    grid: GridSpec | None = None, component: int = 0,
                    max_bytes: int = 2**28, workers: int = 1) -> HittingEstimate:
    """Frequency of {min over cell nodes of |u - z| <= threshold}, threshold
    defaulting to 2^-n."""
    if grid is None:
        grid = _cell_grid(cell)
    slices = _cell_slices(cell, grid)
    thr = 2.0 ** (-n) if threshold is None else float(threshold)
    seeds = [derive_seed(master_seed, component, rep) for rep in range(n_reps)]
    rec = engine.run_streams(grid, seeds, sigma,
                             engine.CellMins([slices], level=z),
                             max_bytes=max_bytes, workers=workers)
    hits = int(np.count_nonzero(rec.min_absdev[:, 0] <= thr))
    lo, hi = wilson_interval(hits, n_reps)
    return HittingEstimate(p_hat=hits / n_reps, ci_lo=lo, ci_hi=hi,
                           n_reps=n_reps, n=n)


def vector_small_ball_prob(z0, cell: Rectangle, n: int, n_reps: int, *,
                           sigma: SigmaSpec, master_seed: int = 0,
                           norm: str = "euclidean",
                           threshold: float | None = None,
                           grid: GridSpec | None = None,
                           max_bytes: int = 2**28,
                           workers: int = 1) -> HittingEstimate:
    """Frequency of {min over cell nodes of |U - z0| <= threshold} for a
    field with d independent components (d = len(z0), at most 8)."""
    z0 = np.asarray(z0, dtype=np.float64).ravel()
    d = z0.size
    if d > 8:
        raise CapabilityError("component count above 8 is not supported")
    if norm not in ("euclidean", "box"):
        raise ConfigurationError("norm must be euclidean or box")
    if grid is None:
        grid = _cell_grid(cell)
    slices = _cell_slices(cell, grid)
    thr = 2.0 ** (-n) if threshold is None else float(threshold)
    seeds = [derive_seed(master_seed, comp, rep)
             for rep in range(n_reps) for comp in range(d)]
    rec = engine.run_streams(grid, seeds, sigma,
                             engine.CellPointMins(d, z0[None, :], [slices]),
                             stream_group=d, max_bytes=max_bytes,
                             workers=workers)
    mins = rec.min_eu if norm == "euclidean" else rec.min_box
    hits = int(np.count_nonzero(mins[:, 0, 0] <= thr))
    lo, hi = wilson_interval(hits, n_reps)
    return HittingEstimate(p_hat=hits / n_reps, ci_lo=lo, ci_hi=hi,
                           n_reps=n_reps, n=n)


def cover_set(A: TargetSet, epsilon: float) -> list[tuple[np.ndarray, float]]:
    """Finite cover of A by balls of radius < epsilon, near-optimal for the
    parametric kinds."""
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    if A.kind == "singleton":
        return [(A.point.copy(), epsilon / 2.0)]
    if A.kind == "points":
        return [(pt.copy(), epsilon / 2.0) for pt in A.pts]
    if A.kind == "segment":
        count = max(1, math.ceil(A.length / epsilon))
        centers = []
        for i in range(count):
            c = A.anchor.copy()
            c[0] += (i + 0.5) * epsilon
            centers.append((c, epsilon / 2.0))
        return centers
    if A.kind == "dust":
        level = max(0, math.ceil(math.log(A.extent / epsilon) / math.log(3.0)))
        if 2 ** level > 1_000_000:
            raise ResourceError("cover would need over a million balls")
        lefts = np.zeros(1)
        for j in range(1, level + 1):
            lefts = np.concatenate([lefts, lefts + 2.0 / 3.0 ** j])
        radius = A.extent * 3.0 ** (-level) / 2.0
        out = []
        for left in np.sort(lefts):
            c = A.anchor.copy()
            c[0] += A.extent * left + radius
            out.append((c, radius))
        return out
    raise CapabilityError(f"no parametric cover for kind {A.kind!r}")


def cover_sum(cover: list[tuple[np.ndarray, float]], beta: float) -> float:
    """Sum of (2 * radius)^beta over the cover's balls."""
    return float(sum((2.0 * r) ** beta for _, r in cover))


DEFAULT_UPDATE_BUDGET = int(4e10)


def hitting_window_grid(I: tuple[float, float], J: tuple[float, float],
                        dx: float, dt: float | None = None,
                        pad: float = 6.0) -> GridSpec:
    return GridSpec.for_window(T=I[1], dx=dx, window=J, dt=dt, pad=pad)


def hitting_prob_multi(targets: list[TargetSet], I: tuple[float, float],
                       J: tuple[float, float], n_reps: int, *,
                       sigma: SigmaSpec, master_seed: int = 0,
                       dx: float = 2.0 ** -6, dt: float | None = None,
                       tol_hit: float | None = None,
                       max_updates: int = DEFAULT_UPDATE_BUDGET,
                       max_bytes: int = 2**28,
                       workers: int = 1) -> list[HittingEstimate]:
    """Hitting estimates for several targets on common random numbers.

    Event per target: some grid node (t, x) in I x J has the d-component
    field within tol_hit (default 2*sqrt(dx)) of the target.
    """
    if not targets:
        raise ConfigurationError("need at least one target")
    d = targets[0].d
    if any(t.d != d for t in targets):
        raise ConfigurationError("targets must share the ambient dimension")
    if d > 8:
        raise CapabilityError("component count above 8 is not supported")
    grid = hitting_window_grid(I, J, dx, dt)
    tol = 2.0 * math.sqrt(grid.dx) if tol_hit is None else float(tol_hit)
    row_lo, row_hi = grid.time_index(I[0]), grid.time_index(I[1])
    col_lo, col_hi = grid.space_index(J[0]), grid.space_index(J[1])
    updates = n_reps * d * grid.n_steps * grid.n_x
    if updates > max_updates:
        raise ResourceError(
            f"run needs {updates:.2e} cell updates, budget {max_updates:.2e}")
    seeds = [derive_seed(master_seed, comp, rep)
             for rep in range(n_reps) for comp in range(d)]
    rec = engine.run_streams(
        grid, seeds, sigma,
        engine.TargetMinDistance(d, targets, row_lo, row_hi, col_lo, col_hi),
        stream_group=d, max_bytes=max_bytes, workers=workers)
    out = []
    for i in range(len(targets)):
        hits = int(np.count_nonzero(rec.min_dist[:, i] <= tol))
        lo, hi = wilson_interval(hits, n_reps)
        out.append(HittingEstimate(p_hat=hits / n_reps, ci_lo=lo, ci_hi=hi,
                                   n_reps=n_reps, tol_hit=tol))
    return out


def hitting_prob_estimate(A: TargetSet, I: tuple[float, float],
                          J: tuple[float, float], n_reps: int, *,
                          sigma: SigmaSpec, **kwargs) -> HittingEstimate:
    """Single-target wrapper around hitting_prob_multi."""
    return hitting_prob_multi([A], I, J, n_reps, sigma=sigma, **kwargs)[0]
