"""Joint sampling of (field value, linear-increment sup) and checks of a
Gaussian-type density bound and the matching tail bounds.

Per replication on one noise realization: f1 is the nonlinear field at the
anchor node; f2 is the max over a small rectangle's nodes of v - v(anchor)
for the linear twin. The joint kernel-density estimate of (f1, f2) is
compared, on z2 >= sqrt(zeta), against (c/sqrt(zeta)) * exp(-(z1^2 +
z2^2/zeta)/c); the f2 tail is compared against the Borell-style plug-in
bound 2*exp(-(z2-mean)^2/(2*sigma2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .coupling import Rectangle
from .errors import ConfigurationError, DomainError, UsageError
from .noise import GridSpec, derive_seed
from .solver import SigmaSpec


@dataclass(frozen=True)
class FSample:
    """Joint draws of the pair functional with rectangle provenance."""

    f1: np.ndarray = field(repr=False)
    f2: np.ndarray = field(repr=False)
    zeta: float
    sigma2_sup: float
    n_reps: int

    def __post_init__(self):
        if self.f1.shape != self.f2.shape or self.f1.ndim != 1:
            raise ConfigurationError("f1 and f2 must be matching vectors")
        if not 0 < self.zeta <= 1:
            raise ConfigurationError("zeta must lie in (0, 1]")
        if self.sigma2_sup < 0:
            raise ConfigurationError("variance envelope must be nonnegative")

    @property
    def pairs(self) -> np.ndarray:
        return np.column_stack([self.f1, self.f2])


def rect_zeta(rect: Rectangle) -> float:
    """Scale convention: the square of max(zeta1^(1/4), zeta2^(1/2))."""
    return max(math.sqrt(rect.zeta1), rect.zeta2)


def sample_F(anchor: tuple[float, float], rect: Rectangle | None,
             n_reps: int, *, sigma: SigmaSpec, master_seed: int = 0,
             grid: GridSpec | None = None, min_nodes: int = 8,
             component: int = 0, max_bytes: int = 2**28,
             workers: int = 1) -> FSample:
    """Draw (f1, f2) on n_reps independent noise realizations.

    ``rect=None`` degenerates the rectangle to the anchor point, where f2 is
    identically zero. The anchor must be the rectangle's corner.
    """
    t0, x0 = anchor
    if rect is not None and (rect.t0 != t0 or rect.x0 != x0):
        raise ConfigurationError("anchor must sit at the rectangle corner")
    if grid is None:
        if rect is None:
            raise ConfigurationError("need a grid when the rectangle degenerates")
        dx = rect.zeta2 / min_nodes
        dt = min(dx * dx / 2.0, rect.zeta1 / min_nodes)
        grid = GridSpec.for_window(T=rect.t0 + rect.zeta1, dx=dx,
                                   window=(rect.x0, rect.x0 + rect.zeta2), dt=dt)
    a_row, a_col = grid.time_index(t0), grid.space_index(x0)
    if rect is None:
        slices = (a_row, a_row, a_col, a_col)
        zeta = grid.dx  # degenerate window: report the grid's own scale
    else:
        r_lo, r_hi, c_lo, c_hi = rect.node_slices(grid)
        if r_hi - r_lo + 1 < min_nodes or c_hi - c_lo + 1 < min_nodes:
            raise ConfigurationError(
                f"grid resolves the rectangle with fewer than {min_nodes} nodes per side")
        slices = (r_lo, r_hi, c_lo, c_hi)
        zeta = rect_zeta(rect)
    seeds = [derive_seed(master_seed, component, rep) for rep in range(n_reps)]
    rec = engine.run_streams(
        grid, seeds, sigma,
        engine.PairFunctionals(a_row, a_col, *slices),
        twin=True, max_bytes=max_bytes, workers=workers)
    return FSample(f1=rec.f1, f2=rec.f2, zeta=zeta,
                   sigma2_sup=rec.variance_sup(), n_reps=n_reps)


@dataclass(frozen=True)
class DensityGrid:
    """Product-Gaussian KDE of the joint law on a rectangular grid."""

    z1_axis: np.ndarray = field(repr=False)
    z2_axis: np.ndarray = field(repr=False)
    p_hat: np.ndarray = field(repr=False)
    bandwidths: tuple[float, float]
    n_samples: int
    zeta: float
    se: np.ndarray | None = field(default=None, repr=False)
    flagged: bool = False

    def __post_init__(self):
        if self.p_hat.shape != (self.z1_axis.size, self.z2_axis.size):
            raise ConfigurationError("density matrix does not match axes")
        if self.p_hat.min() < 0:
            raise ConfigurationError("density estimates are nonnegative")
        if not self.flagged:
            mass = np.trapezoid(np.trapezoid(self.p_hat, self.z2_axis, axis=1),
                                self.z1_axis)
            if mass > 1.0 + 0.02:
                raise ConfigurationError("density integrates above one")


_KDE_CHUNK = 2**14
_BOOT_SEED = 0xB0075E
_BOOT_REPS = 32


def kde2(samples, bandwidths: tuple[float, float] | None = None,
         zeta: float = 1.0, grid_size: int = 128,
         with_se: bool = False) -> DensityGrid:
    """Two-dimensional product-Gaussian KDE with per-axis Silverman widths.

    The evaluation grid spans each axis's sample range widened by one
    bandwidth. ``with_se`` adds a Poisson-multiplier bootstrap standard
    error per grid node. Zero-variance samples yield a flagged, all-zero
    estimate.
    """
    if isinstance(samples, FSample):
        zeta = samples.zeta
        samples = samples.pairs
    pts = np.asarray(samples, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ConfigurationError("samples must be an (n, 2) array")
    n = pts.shape[0]
    if n < 1000:
        raise UsageError("need at least 1000 samples")
    sds = pts.std(axis=0, ddof=1)
    if bandwidths is None:
        if sds.min() == 0.0:
            axis = np.linspace(-1.0, 1.0, grid_size)
            zero = np.zeros((grid_size, grid_size))
            return DensityGrid(z1_axis=axis, z2_axis=axis, p_hat=zero,
                               bandwidths=(0.0, 0.0), n_samples=n, zeta=zeta,
                               flagged=True)
        bandwidths = tuple(sds * n ** (-1.0 / 6.0))
    h1, h2 = float(bandwidths[0]), float(bandwidths[1])
    if h1 <= 0 or h2 <= 0:
        raise ConfigurationError("bandwidths must be positive")
    z1 = np.linspace(pts[:, 0].min() - h1, pts[:, 0].max() + h1, grid_size)
    z2 = np.linspace(pts[:, 1].min() - h2, pts[:, 1].max() + h2, grid_size)

    norm = 1.0 / (n * 2.0 * math.pi * h1 * h2)
    p = np.zeros((grid_size, grid_size))
    boot = np.zeros((_BOOT_REPS, grid_size, grid_size)) if with_se else None
    rng = np.random.default_rng(_BOOT_SEED) if with_se else None
    weight_sums = np.zeros(_BOOT_REPS) if with_se else None
    for lo in range(0, n, _KDE_CHUNK):
        chunk = pts[lo:lo + _KDE_CHUNK]
        a = np.exp(-((z1[:, None] - chunk[None, :, 0]) / h1) ** 2 / 2.0)
        b = np.exp(-((z2[:, None] - chunk[None, :, 1]) / h2) ** 2 / 2.0)
        p += a @ b.T
        if with_se:
            w = rng.poisson(1.0, (_BOOT_REPS, chunk.shape[0])).astype(np.float64)
            weight_sums += w.sum(axis=1)
            for kk in range(_BOOT_REPS):
                boot[kk] += (a * w[kk]) @ b.T
    p *= norm
    se = None
    if with_se:
        scale = 1.0 / (np.maximum(weight_sums, 1.0) * 2.0 * math.pi * h1 * h2)
        boot *= scale[:, None, None]
        se = boot.std(axis=0, ddof=1)
    return DensityGrid(z1_axis=z1, z2_axis=z2, p_hat=p, bandwidths=(h1, h2),
                       n_samples=n, zeta=zeta, se=se)


@dataclass(frozen=True)
class BoundReport:
    """Outcome of comparing a density estimate against the Gaussian-type
    bound on its valid domain z2 >= sqrt(zeta)."""

    c: float
    max_ratio: float
    c_min: float
    n_checked: int
    zeta: float
    used_se: bool


def _gauss_bound(z1: np.ndarray, z2: np.ndarray, zeta: float,
                 c: float) -> np.ndarray:
    expo = (z1 ** 2 + z2 ** 2 / zeta) / c
    return (c / math.sqrt(zeta)) * np.exp(-expo)


def check_gaussian_bound(grid: DensityGrid, c: float) -> BoundReport:
    """Max of estimate/bound over the valid domain, plus the minimal c that
    would push every ratio to at most one.

    The compared estimate is the KDE minus one bootstrap standard error when
    the grid carries one (noise in the estimator should not count against
    the bound), floored at zero.
    """
    if c <= 0:
        raise DomainError("constant must be positive")
    if grid.flagged:
        raise UsageError("flagged density estimate cannot be checked")
    zeta = grid.zeta
    keep = grid.z2_axis >= math.sqrt(zeta)
    if not keep.any():
        raise DomainError("no grid nodes with z2 >= sqrt(zeta)")
    q = grid.p_hat if grid.se is None else np.maximum(grid.p_hat - grid.se, 0.0)
    q = q[:, keep]
    z1 = grid.z1_axis[:, None]
    z2 = grid.z2_axis[None, keep]
    bound = _gauss_bound(z1, z2, zeta, c)
    max_ratio = float((q / bound).max())

    pos = q > 0
    if not pos.any():
        c_min = 0.0
    else:
        expo = np.broadcast_to(z1 ** 2 + z2 ** 2 / zeta, q.shape)[pos]
        target = np.log(q[pos] * math.sqrt(zeta))
        lo = np.full(expo.shape, 1e-12)
        hi = np.full(expo.shape, 1e12)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            above = np.log(mid) - expo / mid >= target
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        c_min = float(hi.max())
    return BoundReport(c=float(c), max_ratio=max_ratio, c_min=c_min,
                       n_checked=int(q.size), zeta=zeta,
                       used_se=grid.se is not None)


@dataclass(frozen=True)
class TailFit:
    """Tail comparison of f2 against the plug-in Borell-style bound."""

    mean_f2: float
    sigma2_sup: float
    c_fit: float
    zeta: float
    thresholds: tuple[float, ...]
    exceedance: tuple[float, ...]
    bound: tuple[float, ...]
    n_samples: int

    def __post_init__(self):
        if self.mean_f2 < 0 or self.sigma2_sup < 0:
            raise ConfigurationError("mean and variance envelope are nonnegative")


def borell_tail_check(f2, zeta: float, sigma2_sup: float,
                      min_samples: int = 10_000) -> TailFit:
    """Exceedance frequencies of f2 at {1, 2, 3} * sqrt(zeta) against
    2 * exp(-(z2 - mean)^2 / (2 * sigma2_sup)); the bound applies only at
    z2 >= mean, elsewhere it is reported as nan.

    c_fit is the smallest constant with mean_f2 <= c*sqrt(zeta) and
    sigma2_sup <= c*zeta.
    """
    x = np.asarray(f2, dtype=np.float64).ravel()
    if x.size < min_samples:
        raise UsageError(f"need at least {min_samples} samples")
    if not 0 < zeta <= 1:
        raise DomainError("zeta must lie in (0, 1]")
    if sigma2_sup <= 0:
        raise DomainError("variance envelope must be positive")
    mean = float(x.mean())
    root = math.sqrt(zeta)
    thresholds = (root, 2.0 * root, 3.0 * root)
    exceed = tuple(float(np.count_nonzero(x > z) / x.size) for z in thresholds)
    bound = tuple(
        2.0 * math.exp(-(z - mean) ** 2 / (2.0 * sigma2_sup)) if z >= mean
        else math.nan
        for z in thresholds)
    c_fit = max(mean / root, sigma2_sup / zeta)
    return TailFit(mean_f2=mean, sigma2_sup=sigma2_sup, c_fit=c_fit, zeta=zeta,
                   thresholds=thresholds, exceedance=exceed, bound=bound,
                   n_samples=int(x.size))
