"""Garsia-type seminorms of the linear field and the threshold test they
support.

Three nonnegative functionals of a path v anchored at (t0, x0):

* y1: double integral over [t0, r]^2 of temporal increments at x0 raised to
  the power 2*p0, against the kernel |t-s|^(-gamma0/2);
* y2: double integral over [x0, z]^2 of spatial increments at time t0,
  against |x-y|^(-(gamma0-2));
* y3: quadruple integral of rectangular increments against
  |t-s|^(-(1+2*p0*gamma1)) * |x-y|^(-(1+2*p0*gamma2)).

Their sum z compares against a threshold r = c * a^(2 p0) * zeta^(4-gamma0):
whenever z stays below the threshold, the sup of |v - v(anchor)| over
[t0, t0+zeta^2] x [x0, x0+zeta] must stay below a. The constant c is not
known in closed form; it is calibrated on training paths and then shrunk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, UsageError
from .solver import FieldSolution

QUAD_NODE_CAP = 33


@dataclass(frozen=True)
class SeminormParams:
    """Exponent pack for the three functionals.

    Constraints: p0 even and p0 > gamma0 > 4; theta in (0, 1/2);
    1/(2 p0) < gamma1 < theta1/2 - 1/(2 p0) with theta1 = 1/2 - theta, and
    the same for gamma2 with theta2 = 2*theta; 2*gamma1 + gamma2 must equal
    (gamma0 - 1)/(2 p0).
    """

    p0: int = 16
    gamma0: float = 5.0
    theta: float = 0.25
    gamma1: float = 0.04
    gamma2: float = 0.045

    def __post_init__(self):
        if self.p0 % 2 or self.p0 <= 0:
            raise ConfigurationError("p0 must be a positive even integer")
        if not self.p0 > self.gamma0 > 4:
            raise ConfigurationError("need p0 > gamma0 > 4")
        if not 0 < self.theta < 0.5:
            raise ConfigurationError("theta must lie in (0, 1/2)")
        half = 1.0 / (2 * self.p0)
        if not half < self.gamma1 < self.theta1 / 2 - half:
            raise ConfigurationError("gamma1 outside its admissible window")
        if not half < self.gamma2 < self.theta2 / 2 - half:
            raise ConfigurationError("gamma2 outside its admissible window")
        target = (self.gamma0 - 1.0) / (2 * self.p0)
        if not math.isclose(2 * self.gamma1 + self.gamma2, target, rel_tol=1e-9):
            raise ConfigurationError(
                "2*gamma1 + gamma2 must equal (gamma0 - 1)/(2 p0)")

    @property
    def theta1(self) -> float:
        return 0.5 - self.theta

    @property
    def theta2(self) -> float:
        return 2.0 * self.theta


@dataclass(frozen=True)
class GrrState:
    """Computed functional values, optionally joined with a threshold."""

    y1: float
    y2: float
    y3: float
    a: float | None = None
    r_threshold: float | None = None
    c_cal: float | None = None

    def __post_init__(self):
        if min(self.y1, self.y2, self.y3) < 0:
            raise ConfigurationError("functionals are nonnegative by construction")
        if self.r_threshold is not None and self.r_threshold <= 0:
            raise ConfigurationError("threshold must be positive")

    @property
    def z(self) -> float:
        return self.y1 + self.y2 + self.y3

    def with_threshold(self, a: float, r_threshold: float,
                       c_cal: float) -> "GrrState":
        return GrrState(y1=self.y1, y2=self.y2, y3=self.y3, a=a,
                        r_threshold=r_threshold, c_cal=c_cal)


def _even_power(x: np.ndarray, e: int) -> np.ndarray:
    """x**e for even e >= 2 by repeated squaring (5 multiplies at e=32)."""
    result = None
    base = x * x
    e //= 2
    while e:
        if e & 1:
            result = base if result is None else result * base
        e >>= 1
        if e:
            base = base * base
    return result


def _trapezoid_weights(pos: np.ndarray) -> np.ndarray:
    w = np.empty(pos.size)
    w[0] = (pos[1] - pos[0]) / 2.0
    w[-1] = (pos[-1] - pos[-2]) / 2.0
    if pos.size > 2:
        w[1:-1] = (pos[2:] - pos[:-2]) / 2.0
    return w


def _quad_nodes(n_lo: int, n_hi: int, step: float,
                cap: int) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint-preserving quadrature sub-lattice on grid rows [n_lo, n_hi].

    Returns absolute grid indices and trapezoid weights for the (possibly
    non-uniform) node positions; at most ``cap`` nodes.
    """
    count = n_hi - n_lo + 1
    if count <= cap:
        idx = np.arange(n_lo, n_hi + 1)
    else:
        idx = np.unique(np.round(np.linspace(n_lo, n_hi, cap)).astype(np.int64))
    return idx, _trapezoid_weights(idx * step)


def _window_indices(v: FieldSolution, anchor: tuple[float, float], r: float,
                    z: float, min_nodes: int) -> tuple[int, int, int, int]:
    t0, x0 = anchor
    if r <= t0 or z <= x0:
        raise DomainError("degenerate window: need r > t0 and z > x0")
    grid = v.grid
    n0, n1 = grid.time_index(t0), grid.time_index(r)
    j0, j1 = grid.space_index(x0), grid.space_index(z)
    if n1 - n0 + 1 < min_nodes or j1 - j0 + 1 < min_nodes:
        raise ConfigurationError(
            f"window resolved with fewer than {min_nodes} nodes per side")
    return n0, n1, j0, j1


def grr_functionals(v: FieldSolution, params: SeminormParams,
                    anchor: tuple[float, float], r: float, z: float,
                    min_nodes: int = 8, node_cap: int = QUAD_NODE_CAP) -> GrrState:
    """Trapezoidal estimates of the three functionals on [t0,r] x [x0,z].

    Quadrature runs on an endpoint-preserving sub-lattice of at most
    ``node_cap`` nodes per axis; same-node kernel terms (the singular
    diagonal) are dropped.
    """
    n0, n1, j0, j1 = _window_indices(v, anchor, r, z, min_nodes)
    grid = v.grid
    t_idx, wt = _quad_nodes(n0, n1, grid.dt, node_cap)
    x_idx, wx = _quad_nodes(j0, j1, grid.dx, node_cap)
    two_p0 = 2 * params.p0

    t_pos = t_idx * grid.dt
    dt_gap = np.abs(t_pos[:, None] - t_pos[None, :])
    x_pos = x_idx * grid.dx
    dx_gap = np.abs(x_pos[:, None] - x_pos[None, :])
    off_t = dt_gap > 0
    off_x = dx_gap > 0

    vt = v.values[t_idx, j0]
    inc_t = _even_power(vt[:, None] - vt[None, :], two_p0)
    ker_t = np.zeros_like(dt_gap)
    ker_t[off_t] = dt_gap[off_t] ** (-params.gamma0 / 2.0)
    y1 = float(wt @ (inc_t * ker_t) @ wt)

    vx = v.values[n0, x_idx]
    inc_x = _even_power(vx[:, None] - vx[None, :], two_p0)
    ker_x = np.zeros_like(dx_gap)
    ker_x[off_x] = dx_gap[off_x] ** (-(params.gamma0 - 2.0))
    y2 = float(wx @ (inc_x * ker_x) @ wx)

    patch = v.values[np.ix_(t_idx, x_idx)]
    d_time = patch[:, None, :] - patch[None, :, :]
    rect = _even_power(d_time[:, :, :, None] - d_time[:, :, None, :], two_p0)
    k3t = np.zeros_like(dt_gap)
    k3t[off_t] = dt_gap[off_t] ** (-(1.0 + two_p0 * params.gamma1))
    k3x = np.zeros_like(dx_gap)
    k3x[off_x] = dx_gap[off_x] ** (-(1.0 + two_p0 * params.gamma2))
    inner = np.einsum("ijkl,k,l->ij", rect * k3x[None, None, :, :], wx, wx)
    y3 = float(wt @ (inner * k3t) @ wt)

    return GrrState(y1=y1, y2=y2, y3=y3)


def grr_functionals_batch(patch: np.ndarray, t_idx: np.ndarray,
                          x_idx: np.ndarray, dt: float, dx: float,
                          params: SeminormParams,
                          chunk: int = 16) -> tuple[np.ndarray, np.ndarray,
                                                    np.ndarray]:
    """Functionals for many paths sampled on the same quadrature lattice.

    ``patch`` holds values of shape (n_paths, len(t_idx), len(x_idx)) at the
    absolute grid indices ``t_idx`` x ``x_idx``; the anchor is the lattice
    corner (t_idx[0], x_idx[0]). Agrees with per-path ``grr_functionals``.
    Returns (y1, y2, y3) arrays of length n_paths.
    """
    if patch.ndim != 3 or patch.shape[1:] != (t_idx.size, x_idx.size):
        raise UsageError("patch must be (n_paths, len(t_idx), len(x_idx))")
    two_p0 = 2 * params.p0
    wt = _trapezoid_weights(t_idx * dt)
    wx = _trapezoid_weights(x_idx * dx)

    t_pos = t_idx * dt
    dt_gap = np.abs(t_pos[:, None] - t_pos[None, :])
    x_pos = x_idx * dx
    dx_gap = np.abs(x_pos[:, None] - x_pos[None, :])
    off_t = dt_gap > 0
    off_x = dx_gap > 0
    ker_t = np.zeros_like(dt_gap)
    ker_t[off_t] = dt_gap[off_t] ** (-params.gamma0 / 2.0)
    ker_x = np.zeros_like(dx_gap)
    ker_x[off_x] = dx_gap[off_x] ** (-(params.gamma0 - 2.0))
    k3t = np.zeros_like(dt_gap)
    k3t[off_t] = dt_gap[off_t] ** (-(1.0 + two_p0 * params.gamma1))
    k3x = np.zeros_like(dx_gap)
    k3x[off_x] = dx_gap[off_x] ** (-(1.0 + two_p0 * params.gamma2))

    vt = patch[:, :, 0]
    inc_t = _even_power(vt[:, :, None] - vt[:, None, :], two_p0)
    y1 = np.einsum("sij,ij,i,j->s", inc_t, ker_t, wt, wt)

    vx = patch[:, 0, :]
    inc_x = _even_power(vx[:, :, None] - vx[:, None, :], two_p0)
    y2 = np.einsum("sij,ij,i,j->s", inc_x, ker_x, wx, wx)

    # rectangular increments blow up memory as n_paths*nt^2*nx^2; chunk paths
    y3 = np.empty(patch.shape[0])
    for lo in range(0, patch.shape[0], chunk):
        block = patch[lo:lo + chunk]
        d_time = block[:, :, None, :] - block[:, None, :, :]
        rect = _even_power(d_time[:, :, :, :, None] - d_time[:, :, :, None, :],
                           two_p0)
        inner = np.einsum("sijkl,kl,k,l->sij", rect, k3x, wx, wx)
        y3[lo:lo + chunk] = np.einsum("sij,ij,i,j->s", inner, k3t, wt, wt)
    return y1, y2, y3


def grr_threshold(a: float, zeta: float, params: SeminormParams,
                  c_cal: float) -> float:
    """Threshold c_cal * a^(2 p0) * zeta^(4 - gamma0)."""
    if a <= 0:
        raise DomainError("level a must be positive")
    if not 0 < zeta <= 1:
        raise DomainError("zeta must lie in (0, 1]")
    if c_cal <= 0:
        raise DomainError("calibrated constant must be positive")
    return c_cal * a ** (2 * params.p0) * zeta ** (4.0 - params.gamma0)


def window_sup(v: FieldSolution, anchor: tuple[float, float], r: float,
               z: float) -> float:
    """Max over grid nodes in [t0,r] x [x0,z] of |v - v(anchor)|."""
    grid = v.grid
    n0, n1 = grid.time_index(anchor[0]), grid.time_index(r)
    j0, j1 = grid.space_index(anchor[1]), grid.space_index(z)
    block = v.values[n0:n1 + 1, j0:j1 + 1]
    return float(np.abs(block - v.values[n0, j0]).max())


def check_grr_implication(state: GrrState, v: FieldSolution,
                          anchor: tuple[float, float], r: float,
                          z: float) -> bool:
    """True iff the path satisfies: z <= threshold implies window sup <= a."""
    if state.a is None or state.r_threshold is None:
        raise UsageError("state carries no threshold; calibrate first")
    if state.z > state.r_threshold:
        return True
    return window_sup(v, anchor, r, z) <= state.a


CALIBRATION_CAP = 1.0
CALIBRATION_SHRINK = 0.5


def calibrate_grr_constant(training_paths, params: SeminormParams, a: float,
                           zeta: float, anchor: tuple[float, float],
                           min_paths: int = 100,
                           node_cap: int = QUAD_NODE_CAP) -> float:
    """Largest constant making the implication hold on every training path,
    capped at ``CALIBRATION_CAP`` and shrunk by ``CALIBRATION_SHRINK``.

    A path constrains the constant only when its window sup exceeds a; the
    threshold must then sit below that path's z value. Paths that never
    exceed a leave the constant at the cap, so the result is monotone
    non-increasing in the training set.
    """
    paths = list(training_paths)
    if not paths:
        raise UsageError("empty training set")
    if len(paths) < min_paths:
        raise UsageError(f"need at least {min_paths} training paths")
    if a <= 0 or not 0 < zeta <= 1:
        raise DomainError("need a > 0 and zeta in (0, 1]")
    r = anchor[0] + zeta * zeta
    z_hi = anchor[1] + zeta
    base = a ** (2 * params.p0) * zeta ** (4.0 - params.gamma0)
    bound = CALIBRATION_CAP
    for v in paths:
        if window_sup(v, anchor, r, z_hi) > a:
            state = grr_functionals(v, params, anchor, r, z_hi,
                                    node_cap=node_cap)
            bound = min(bound, state.z / base)
    return CALIBRATION_SHRINK * bound
