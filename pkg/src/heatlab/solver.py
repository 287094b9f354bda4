"""Explicit finite-difference solutions of the heat dynamics.

Two fields are produced from one noise realization: the driftless linear
field (diffusion coefficient one) and the nonlinear field whose noise term is
modulated by a state-dependent coefficient. Both use the same update kernel,
so constant coefficients reproduce exact scalings of the linear field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .engine import advance_row
from .errors import ConfigurationError, DomainError
from .noise import GridSpec, NoiseField, Seed


@dataclass(frozen=True)
class SigmaSpec:
    """Noise coefficient z -> sigma(z), bounded away from zero.

    Kinds: ``constant`` (value c0), ``sinusoidal`` (a + b*sin(omega*z)),
    ``tabulated`` (piecewise-linear through sample points, clamped outside).
    ``sigma_max`` bounds both the coefficient and, for the sinusoidal family,
    its first three derivatives; ``lipschitz`` bounds the first derivative.
    """

    kind: str
    c0: float = 0.0
    a: float = 0.0
    b: float = 0.0
    omega: float = 0.0
    z_nodes: tuple[float, ...] = ()
    z_values: tuple[float, ...] = ()
    sigma_min: float = 0.0
    sigma_max: float = 0.0
    lipschitz: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoidal", "tabulated"):
            raise ConfigurationError(f"unknown sigma kind {self.kind!r}")
        if self.sigma_min <= 0:
            raise ConfigurationError("sigma must be bounded below by a positive constant")
        if self.sigma_max < self.sigma_min:
            raise ConfigurationError("sigma_max below sigma_min")
        if self.lipschitz < 0:
            raise ConfigurationError("negative Lipschitz bound")

    @classmethod
    def constant(cls, c0: float) -> "SigmaSpec":
        if c0 <= 0:
            raise ConfigurationError("constant sigma must be positive")
        return cls(kind="constant", c0=float(c0), sigma_min=float(c0),
                   sigma_max=float(c0), lipschitz=0.0)

    @classmethod
    def sinusoidal(cls, a: float, b: float, omega: float = 1.0) -> "SigmaSpec":
        lo = a - abs(b)
        if lo <= 0:
            raise ConfigurationError("a - |b| must be positive")
        w = abs(omega)
        deriv = abs(b) * max(w, w * w, w * w * w)
        return cls(kind="sinusoidal", a=float(a), b=float(b), omega=float(omega),
                   sigma_min=float(lo), sigma_max=float(max(a + abs(b), deriv)),
                   lipschitz=float(abs(b) * w))

    @classmethod
    def tabulated(cls, z_nodes, z_values) -> "SigmaSpec":
        z = np.asarray(z_nodes, dtype=np.float64)
        vals = np.asarray(z_values, dtype=np.float64)
        if z.ndim != 1 or z.shape != vals.shape or z.size < 2:
            raise ConfigurationError("need matching 1-d tables with >= 2 points")
        if not np.all(np.diff(z) > 0):
            raise ConfigurationError("table abscissae must be strictly increasing")
        if vals.min() <= 0:
            raise ConfigurationError("tabulated sigma must stay positive")
        slopes = np.abs(np.diff(vals) / np.diff(z))
        return cls(kind="tabulated", z_nodes=tuple(z.tolist()),
                   z_values=tuple(vals.tolist()), sigma_min=float(vals.min()),
                   sigma_max=float(vals.max()), lipschitz=float(slopes.max()))

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "constant":
            return np.full(z.shape, self.c0)
        if self.kind == "sinusoidal":
            return self.a + self.b * np.sin(self.omega * z)
        return np.interp(z, self.z_nodes, self.z_values)


def heat_kernel(t: float, x) -> np.ndarray | float:
    """Gaussian transition density with variance t: exp(-x^2/(2t))/sqrt(2*pi*t)."""
    if t <= 0:
        raise DomainError(f"heat kernel needs t > 0, got {t}")
    x = np.asarray(x, dtype=np.float64)
    out = np.exp(-(x * x) / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FieldSolution:
    """Realized field on the full grid: values[n, j] at (t_n, x_j)."""

    values: np.ndarray = field(repr=False)
    grid: GridSpec
    kind: str
    sigma: SigmaSpec | None
    seed: Seed

    def __post_init__(self):
        if self.kind not in ("linear", "nonlinear"):
            raise ConfigurationError(f"unknown solution kind {self.kind!r}")
        if self.values.shape != (self.grid.n_steps + 1, self.grid.n_x):
            raise ConfigurationError("values shape does not match grid")
        if np.any(self.values[0] != 0.0):
            raise ConfigurationError("initial row must vanish")
        if np.any(self.values[:, 0] != 0.0) or np.any(self.values[:, -1] != 0.0):
            raise ConfigurationError("boundary columns must vanish")
        if not np.all(np.isfinite(self.values)):
            raise ConfigurationError("non-finite solution entry")


def _march(grid: GridSpec, noise: NoiseField, sigma: SigmaSpec | None) -> np.ndarray:
    if noise.grid != grid:
        raise ConfigurationError("noise was sampled on a different grid")
    r2 = grid.dt / (2.0 * grid.dx * grid.dx)
    amp = math.sqrt(grid.dt / grid.dx)
    values = np.empty((grid.n_steps + 1, grid.n_x))
    state = np.zeros(grid.n_x)
    values[0] = state
    for n in range(grid.n_steps):
        state = advance_row(state, noise.xi[n], r2, amp, sigma)
        values[n + 1] = state
    values.setflags(write=False)
    return values


def solve_linear(grid: GridSpec, noise: NoiseField) -> FieldSolution:
    """Field driven by raw noise (coefficient one), zero data and boundaries."""
    return FieldSolution(values=_march(grid, noise, None), grid=grid,
                         kind="linear", sigma=None, seed=noise.seed)


def solve_nonlinear(grid: GridSpec, noise: NoiseField, sigma: SigmaSpec) -> FieldSolution:
    """Field whose noise term is scaled by sigma(state) at each node."""
    if not isinstance(sigma, SigmaSpec):
        raise ConfigurationError("sigma must be a SigmaSpec")
    return FieldSolution(values=_march(grid, noise, sigma), grid=grid,
                         kind="nonlinear", sigma=sigma, seed=noise.seed)


def field_value(sol: FieldSolution, t: float, x: float) -> float:
    """Stored value at a grid node; off-node queries are an error, never
    interpolated."""
    return float(sol.values[sol.grid.time_index(t), sol.grid.space_index(x)])


def dump_solution(sol: FieldSolution, path_base: str) -> None:
    """Debug dump: binary matrix at <base>.npy, provenance at <base>.json."""
    np.save(path_base + ".npy", sol.values)
    meta = {
        "kind": sol.kind,
        "grid": {"T": sol.grid.T, "dt": sol.grid.dt, "dx": sol.grid.dx,
                 "x_lo": sol.grid.x_lo, "x_hi": sol.grid.x_hi, "pad": sol.grid.pad},
        "seed": {"master": sol.seed.master, "component": sol.seed.component,
                 "replication": sol.seed.replication},
    }
    with open(path_base + ".json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
