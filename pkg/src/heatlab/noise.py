"""Seeded space-time white noise on a finite-difference grid.

The noise field xi[n, j] holds one standard normal per grid cell
[t_n, t_n+1] x [x_j, x_j+1]; the implied cell integral xi * sqrt(dt*dx) has
variance equal to the cell area. Streams are counter-based (Philox): the
stream key is an injective mix of (master, component, replication) and rows
are generated in fixed blocks of ``BLOCK_ROWS`` rows, each block owning an
independent counter start. Any sub-rectangle of a field can therefore be
regenerated from its covering blocks without storing the field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox

from .errors import ConfigurationError, DomainError, GridAlignmentError

# Rows of noise per counter block. Draw (n, j) is element ((n % BLOCK_ROWS),
# j) of block n // BLOCK_ROWS; each block is the ziggurat stream started at
# Philox counter (0, block, 0, 0). Fixed: changing it changes every field.
BLOCK_ROWS = 128

_ALIGN_RTOL = 1e-9


def _aligned_index(value: float, step: float, what: str) -> int:
    """Nearest grid index of ``value``; error if not on the lattice."""
    idx = int(round(value / step))
    if not math.isclose(idx * step, value, rel_tol=0.0, abs_tol=_ALIGN_RTOL * step):
        raise GridAlignmentError(f"{what}={value!r} is not a multiple of {step!r}")
    return idx


@dataclass(frozen=True)
class GridSpec:
    """Space-time lattice: t_n = n*dt for n=0..n_steps, x_j = x_lo + j*dx.

    dt <= dx**2 is enforced (explicit-scheme stability for the half-Laplacian
    drift); x_hi must sit on the lattice spanned by (x_lo, dx); the total node
    count must fit ``max_cells``.
    """

    T: float
    dt: float
    dx: float
    x_lo: float
    x_hi: float
    pad: float = 6.0
    max_cells: int = 2**31

    def __post_init__(self):
        if self.dt <= 0 or self.dx <= 0:
            raise ConfigurationError("dt and dx must be positive")
        if self.T <= 0:
            raise ConfigurationError("horizon T must be positive")
        if self.x_hi <= self.x_lo:
            raise ConfigurationError("empty spatial extent")
        if self.dt > self.dx**2 * (1 + 1e-12):
            raise ConfigurationError(
                f"stability violated: dt={self.dt} > dx^2={self.dx ** 2}"
            )
        n_steps = int(round(self.T / self.dt))
        if not math.isclose(n_steps * self.dt, self.T, rel_tol=1e-9):
            raise ConfigurationError("T must be an integer number of dt steps")
        if n_steps < 1:
            raise ConfigurationError("grid must contain at least one time step")
        n_x = int(round((self.x_hi - self.x_lo) / self.dx)) + 1
        if not math.isclose(self.x_lo + (n_x - 1) * self.dx, self.x_hi, rel_tol=1e-9):
            raise ConfigurationError("x_hi must lie on the lattice of (x_lo, dx)")
        if n_x < 3:
            raise ConfigurationError("need at least one interior space node")
        if n_steps * n_x > self.max_cells:
            raise ConfigurationError(
                f"{n_steps} steps x {n_x} nodes exceeds max_cells={self.max_cells}"
            )

    @property
    def stability_ratio(self) -> float:
        return self.dt / self.dx**2

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def n_x(self) -> int:
        return int(round((self.x_hi - self.x_lo) / self.dx)) + 1

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def xs(self) -> np.ndarray:
        return self.x_lo + np.arange(self.n_x) * self.dx

    def time_index(self, t: float) -> int:
        n = _aligned_index(t, self.dt, "t")
        if not 0 <= n <= self.n_steps:
            raise GridAlignmentError(f"t={t} outside [0, {self.T}]")
        return n

    def space_index(self, x: float) -> int:
        j = _aligned_index(x - self.x_lo, self.dx, "x-x_lo")
        if not 0 <= j < self.n_x:
            raise GridAlignmentError(f"x={x} outside [{self.x_lo}, {self.x_hi}]")
        return j

    def covers_window(self, j_lo: float, j_hi: float) -> bool:
        """True when [j_lo, j_hi] keeps pad*sqrt(T) clearance from boundaries."""
        margin = self.pad * math.sqrt(self.T)
        return self.x_lo <= j_lo - margin and self.x_hi >= j_hi + margin

    @classmethod
    def for_window(
        cls,
        T: float,
        dx: float,
        window: tuple[float, float],
        dt: float | None = None,
        pad: float = 6.0,
        max_cells: int = 2**31,
    ) -> "GridSpec":
        """Grid whose truncated domain pads ``window`` by pad*sqrt(T) each side.

        Domain endpoints snap outward to the lattice through window[0], so
        window endpoints that are multiples of dx are grid nodes.
        """
        if dt is None:
            dt = dx * dx / 2.0
        j_lo, j_hi = window
        if j_hi < j_lo:
            raise ConfigurationError("window must be ordered")
        margin = pad * math.sqrt(T)
        x_lo = j_lo - math.ceil(margin / dx) * dx
        x_hi = j_lo + math.ceil((j_hi + margin - j_lo) / dx) * dx
        return cls(T=T, dt=dt, dx=dx, x_lo=x_lo, x_hi=x_hi, pad=pad, max_cells=max_cells)


@dataclass(frozen=True)
class Seed:
    """Stream identity. The Philox key is (master, component << 32 | replication),
    an injective map on the validated ranges."""

    master: int
    component: int
    replication: int

    def __post_init__(self):
        if not 0 <= self.master < 2**64:
            raise DomainError("master must fit in 64 bits")
        if not 0 <= self.component < 2**32:
            raise DomainError("component must fit in 32 bits")
        if not 0 <= self.replication < 2**32:
            raise DomainError("replication must fit in 32 bits")

    def key(self) -> np.ndarray:
        return np.array(
            [self.master, (self.component << 32) | self.replication], dtype=np.uint64
        )


def derive_seed(master: int, component: int, replication: int) -> Seed:
    """Injective, deterministic (master, component, replication) -> stream state."""
    return Seed(master=int(master), component=int(component), replication=int(replication))


@dataclass(frozen=True)
class NoiseField:
    """Realized noise matrix with its provenance."""

    xi: np.ndarray = field(repr=False)
    grid: GridSpec
    seed: Seed

    def __post_init__(self):
        if self.xi.shape != (self.grid.n_steps, self.grid.n_x):
            raise ConfigurationError("xi shape does not match grid")


def _block_generator(seed: Seed, block: int) -> Generator:
    counter = np.array([0, block, 0, 0], dtype=np.uint64)
    return Generator(Philox(key=seed.key(), counter=counter))


def noise_rows(grid: GridSpec, seed: Seed, row_lo: int, row_hi: int) -> np.ndarray:
    """Rows [row_lo, row_hi) of the noise field, regenerated from blocks."""
    if not 0 <= row_lo < row_hi <= grid.n_steps:
        raise DomainError(f"row range [{row_lo}, {row_hi}) outside field")
    n_x = grid.n_x
    out = np.empty((row_hi - row_lo, n_x), dtype=np.float64)
    b_lo, b_hi = row_lo // BLOCK_ROWS, (row_hi - 1) // BLOCK_ROWS
    for b in range(b_lo, b_hi + 1):
        blk_start = b * BLOCK_ROWS
        blk_rows = min(BLOCK_ROWS, grid.n_steps - blk_start)
        blk = _block_generator(seed, b).standard_normal((blk_rows, n_x))
        lo = max(row_lo, blk_start)
        hi = min(row_hi, blk_start + blk_rows)
        out[lo - row_lo : hi - row_lo] = blk[lo - blk_start : hi - blk_start]
    return out


def noise_rect(
    grid: GridSpec, seed: Seed, row_lo: int, row_hi: int, col_lo: int, col_hi: int
) -> np.ndarray:
    """Sub-rectangle xi[row_lo:row_hi, col_lo:col_hi] without storing the field."""
    if not 0 <= col_lo < col_hi <= grid.n_x:
        raise DomainError("column range outside field")
    return noise_rows(grid, seed, row_lo, row_hi)[:, col_lo:col_hi]


def sample_noise(grid: GridSpec, seed: Seed) -> NoiseField:
    """Full noise field; pure function of (grid, seed)."""
    xi = noise_rows(grid, seed, 0, grid.n_steps)
    xi.setflags(write=False)
    return NoiseField(xi=xi, grid=grid, seed=seed)
