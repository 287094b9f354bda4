"""Batched explicit propagation of the stochastic heat dynamics.

One code path advances every field in the package. A batch of independent
streams evolves as a (m, n_x) state matrix; the update per interior node is

    next = state + (dt/(2 dx^2)) * laplacian + [sigma(state)] * sqrt(dt/dx) * xi

with zero Dirichlet boundaries. The noise factor is computed first and the
sigma factor applied to it, so a constant sigma == 1 reproduces the driftless
linear field bit for bit and sigma == 2 doubles it exactly.

Observers (``Recorder`` subclasses) consume each time row as it is produced;
full fields are never stored unless a recorder asks for them. Streams are
processed in memory-bounded chunks whose boundaries depend only on the memory
budget, never on the worker count, and chunk results merge in stream order,
so results are bit-identical for any ``workers`` setting.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, UsageError
from .noise import BLOCK_ROWS, GridSpec, Seed, noise_rows


def advance_row(
    state: np.ndarray,
    xi_row: np.ndarray,
    r2: float,
    amp: float,
    sigma: Callable[[np.ndarray], np.ndarray] | None,
) -> np.ndarray:
    """One explicit time step on (..., n_x) states; boundaries stay zero."""
    lap = state[..., 2:] - 2.0 * state[..., 1:-1] + state[..., :-2]
    term = amp * xi_row[..., 1:-1]
    if sigma is not None:
        term = sigma(state[..., 1:-1]) * term
    nxt = np.zeros_like(state)
    nxt[..., 1:-1] = state[..., 1:-1] + r2 * lap + term
    return nxt


class Recorder:
    """Per-chunk observer of the propagation.

    ``fresh(n_streams)`` returns an empty clone sized for a chunk;
    ``observe(n, u, v)`` sees the time-n row of every stream in the chunk
    (v is None unless a linear twin runs); ``merge(other)`` appends a later
    chunk's results in stream order.
    """

    def fresh(self, n_streams: int) -> "Recorder":
        raise NotImplementedError

    def observe(self, n: int, u: np.ndarray, v: np.ndarray | None) -> None:
        raise NotImplementedError

    def merge(self, other: "Recorder") -> None:
        raise NotImplementedError


class RectValues(Recorder):
    """All node values on rows [row_lo, row_hi] x cols [col_lo, col_hi].

    ``u_vals`` has shape (n_streams, n_rows, n_cols); ``v_vals`` mirrors it
    when the run has a linear twin and ``want_twin`` is set.
    """

    def __init__(self, row_lo: int, row_hi: int, col_lo: int, col_hi: int,
                 want_twin: bool = False):
        if row_hi < row_lo or col_hi < col_lo:
            raise ConfigurationError("empty recording rectangle")
        self.row_lo, self.row_hi = row_lo, row_hi
        self.col_lo, self.col_hi = col_lo, col_hi
        self.want_twin = want_twin
        self.u_vals: np.ndarray | None = None
        self.v_vals: np.ndarray | None = None

    def fresh(self, n_streams: int) -> "RectValues":
        rec = RectValues(self.row_lo, self.row_hi, self.col_lo, self.col_hi,
                         self.want_twin)
        shape = (n_streams, self.row_hi - self.row_lo + 1,
                 self.col_hi - self.col_lo + 1)
        rec.u_vals = np.empty(shape)
        if self.want_twin:
            rec.v_vals = np.empty(shape)
        return rec

    def observe(self, n, u, v):
        if self.row_lo <= n <= self.row_hi:
            sl = slice(self.col_lo, self.col_hi + 1)
            self.u_vals[:, n - self.row_lo] = u[:, sl]
            if self.want_twin:
                self.v_vals[:, n - self.row_lo] = v[:, sl]

    def merge(self, other):
        self.u_vals = np.concatenate([self.u_vals, other.u_vals])
        if self.want_twin:
            self.v_vals = np.concatenate([self.v_vals, other.v_vals])


class Snapshots(Recorder):
    """Selected time rows restricted to a column window.

    ``u_vals``/``v_vals``: (n_streams, len(rows), n_cols).
    """

    def __init__(self, rows: Sequence[int], col_lo: int, col_hi: int,
                 want_twin: bool = False):
        self.rows = sorted(int(r) for r in rows)
        self.row_pos = {r: i for i, r in enumerate(self.rows)}
        self.col_lo, self.col_hi = col_lo, col_hi
        self.want_twin = want_twin
        self.u_vals: np.ndarray | None = None
        self.v_vals: np.ndarray | None = None

    def fresh(self, n_streams):
        rec = Snapshots(self.rows, self.col_lo, self.col_hi, self.want_twin)
        shape = (n_streams, len(self.rows), self.col_hi - self.col_lo + 1)
        rec.u_vals = np.empty(shape)
        if self.want_twin:
            rec.v_vals = np.empty(shape)
        return rec

    def observe(self, n, u, v):
        i = self.row_pos.get(n)
        if i is not None:
            sl = slice(self.col_lo, self.col_hi + 1)
            self.u_vals[:, i] = u[:, sl]
            if self.want_twin:
                self.v_vals[:, i] = v[:, sl]

    def merge(self, other):
        self.u_vals = np.concatenate([self.u_vals, other.u_vals])
        if self.want_twin:
            self.v_vals = np.concatenate([self.v_vals, other.v_vals])


class CellMins(Recorder):
    """Per cell and per stream: running min of u and of |u - level| over the
    cell's grid nodes. Cells are (row_lo, row_hi, col_lo, col_hi), inclusive.
    """

    def __init__(self, cells: Sequence[tuple[int, int, int, int]], level: float = 0.0):
        self.cells = [tuple(int(c) for c in cell) for cell in cells]
        self.level = float(level)
        self.min_u: np.ndarray | None = None      # (n_streams, n_cells)
        self.min_absdev: np.ndarray | None = None

    def fresh(self, n_streams):
        rec = CellMins(self.cells, self.level)
        rec.min_u = np.full((n_streams, len(self.cells)), np.inf)
        rec.min_absdev = np.full((n_streams, len(self.cells)), np.inf)
        return rec

    def observe(self, n, u, v):
        for k, (r_lo, r_hi, c_lo, c_hi) in enumerate(self.cells):
            if r_lo <= n <= r_hi:
                patch = u[:, c_lo:c_hi + 1]
                np.minimum(self.min_u[:, k], patch.min(axis=1),
                           out=self.min_u[:, k])
                np.minimum(self.min_absdev[:, k],
                           np.abs(patch - self.level).min(axis=1),
                           out=self.min_absdev[:, k])

    def merge(self, other):
        self.min_u = np.concatenate([self.min_u, other.min_u])
        self.min_absdev = np.concatenate([self.min_absdev, other.min_absdev])


class TargetMinDistance(Recorder):
    """Running min over window nodes of the distance from the d-component
    field to each target object (anything with ``distance(vec) -> (g, w)``
    for vec of shape (g, d, w)).

    Streams come in groups of ``d`` consecutive components per replication;
    pass stream_group=d to run_streams so groups never straddle chunks.
    ``min_dist`` has shape (n_reps, n_targets).
    """

    def __init__(self, d: int, targets: Sequence, row_lo: int, row_hi: int,
                 col_lo: int, col_hi: int):
        self.d = int(d)
        self.targets = list(targets)
        self.row_lo, self.row_hi = row_lo, row_hi
        self.col_lo, self.col_hi = col_lo, col_hi
        self.min_dist: np.ndarray | None = None

    def fresh(self, n_streams):
        if n_streams % self.d:
            raise UsageError("chunk does not align to component groups")
        rec = TargetMinDistance(self.d, self.targets, self.row_lo, self.row_hi,
                                self.col_lo, self.col_hi)
        rec.min_dist = np.full((n_streams // self.d, len(self.targets)), np.inf)
        return rec

    def observe(self, n, u, v):
        if not self.row_lo <= n <= self.row_hi:
            return
        block = u[:, self.col_lo:self.col_hi + 1]
        vec = block.reshape(block.shape[0] // self.d, self.d, block.shape[1])
        for i, target in enumerate(self.targets):
            dist = target.distance(vec)
            np.minimum(self.min_dist[:, i], dist.min(axis=1),
                       out=self.min_dist[:, i])

    def merge(self, other):
        self.min_dist = np.concatenate([self.min_dist, other.min_dist])


class CellPointMins(Recorder):
    """Per replication, per cell, per reference point: running min over the
    cell's nodes of the Euclidean and per-coordinate-max distances from the
    d-component field to the point.

    Cells are inclusive (row_lo, row_hi, col_lo, col_hi) index boxes; points
    is a (k, d) array. Arrays have shape (n_reps, n_cells, k). At d=1 both
    norms reduce to |u - z| and are computed identically.
    """

    def __init__(self, d: int, points, cells: Sequence[tuple[int, int, int, int]]):
        self.d = int(d)
        self.points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self.points.shape[1] != self.d:
            raise ConfigurationError("points must have d coordinates")
        self.cells = [tuple(int(c) for c in cell) for cell in cells]
        self.min_eu: np.ndarray | None = None
        self.min_box: np.ndarray | None = None

    def fresh(self, n_streams):
        if n_streams % self.d:
            raise UsageError("chunk does not align to component groups")
        rec = CellPointMins(self.d, self.points, self.cells)
        shape = (n_streams // self.d, len(self.cells), self.points.shape[0])
        rec.min_eu = np.full(shape, np.inf)
        rec.min_box = np.full(shape, np.inf)
        return rec

    def observe(self, n, u, v):
        for c, (r_lo, r_hi, c_lo, c_hi) in enumerate(self.cells):
            if not r_lo <= n <= r_hi:
                continue
            block = u[:, c_lo:c_hi + 1]
            vec = block.reshape(block.shape[0] // self.d, self.d,
                                block.shape[1])
            diff = np.abs(vec[:, None, :, :] - self.points[None, :, :, None])
            if self.d == 1:
                eu = box = diff[:, :, 0, :]
            else:
                eu = np.sqrt(np.einsum("gkdw,gkdw->gkw", diff, diff))
                box = diff.max(axis=2)
            np.minimum(self.min_eu[:, c], eu.min(axis=2),
                       out=self.min_eu[:, c])
            np.minimum(self.min_box[:, c], box.min(axis=2),
                       out=self.min_box[:, c])

    def merge(self, other):
        self.min_eu = np.concatenate([self.min_eu, other.min_eu])
        self.min_box = np.concatenate([self.min_box, other.min_box])


class MultiRecorder(Recorder):
    """Fans one run out to several recorders sharing the same paths."""

    def __init__(self, parts: Sequence[Recorder]):
        self.parts = list(parts)

    def fresh(self, n_streams):
        return MultiRecorder([p.fresh(n_streams) for p in self.parts])

    def observe(self, n, u, v):
        for p in self.parts:
            p.observe(n, u, v)

    def merge(self, other):
        for mine, theirs in zip(self.parts, other.parts):
            mine.merge(theirs)


class PairFunctionals(Recorder):
    """Density-experiment statistics from one run with a linear twin.

    Per stream: f1 = u at the anchor node, f2 = max over rectangle nodes of
    (v - v(anchor)). Across streams: per-node sums and squared sums of
    (v - v(anchor)) on the rectangle, for a plug-in variance envelope.
    """

    def __init__(self, anchor_row: int, anchor_col: int,
                 row_lo: int, row_hi: int, col_lo: int, col_hi: int):
        if anchor_row > row_lo:
            raise ConfigurationError("anchor row must not follow the rectangle")
        self.anchor_row, self.anchor_col = anchor_row, anchor_col
        self.row_lo, self.row_hi = row_lo, row_hi
        self.col_lo, self.col_hi = col_lo, col_hi
        self.f1: np.ndarray | None = None
        self.f2: np.ndarray | None = None
        self._v_anchor: np.ndarray | None = None
        self.node_sum: np.ndarray | None = None
        self.node_sumsq: np.ndarray | None = None
        self.n_streams = 0

    def fresh(self, n_streams):
        rec = PairFunctionals(self.anchor_row, self.anchor_col,
                              self.row_lo, self.row_hi,
                              self.col_lo, self.col_hi)
        rec.f1 = np.empty(n_streams)
        rec.f2 = np.full(n_streams, -np.inf)
        rec._v_anchor = np.empty(n_streams)
        shape = (self.row_hi - self.row_lo + 1, self.col_hi - self.col_lo + 1)
        rec.node_sum = np.zeros(shape)
        rec.node_sumsq = np.zeros(shape)
        rec.n_streams = n_streams
        return rec

    def observe(self, n, u, v):
        if v is None:
            raise UsageError("PairFunctionals needs a linear twin")
        if n == self.anchor_row:
            self.f1[:] = u[:, self.anchor_col]
            self._v_anchor[:] = v[:, self.anchor_col]
        if self.row_lo <= n <= self.row_hi:
            diff = v[:, self.col_lo:self.col_hi + 1] - self._v_anchor[:, None]
            np.maximum(self.f2, diff.max(axis=1), out=self.f2)
            self.node_sum[n - self.row_lo] += diff.sum(axis=0)
            self.node_sumsq[n - self.row_lo] += (diff * diff).sum(axis=0)

    def merge(self, other):
        self.f1 = np.concatenate([self.f1, other.f1])
        self.f2 = np.concatenate([self.f2, other.f2])
        self._v_anchor = np.concatenate([self._v_anchor, other._v_anchor])
        self.node_sum += other.node_sum
        self.node_sumsq += other.node_sumsq
        self.n_streams += other.n_streams

    def variance_sup(self) -> float:
        """Max over rectangle nodes of the sample variance of v - v(anchor)."""
        n = self.n_streams
        if n < 2:
            raise UsageError("need at least two streams for a variance")
        var = (self.node_sumsq - self.node_sum**2 / n) / (n - 1)
        return float(var.max())


def _chunk_sizes(n_streams: int, n_x: int, twin: bool, max_bytes: int,
                 group: int) -> list[int]:
    per_stream = (BLOCK_ROWS + (4 if twin else 2)) * n_x * 8
    m = max(1, min(n_streams, max_bytes // max(per_stream, 1)))
    m = max(group, (m // group) * group)
    sizes = []
    left = n_streams
    while left > 0:
        take = min(m, left)
        sizes.append(take)
        left -= take
    return sizes


def _run_chunk(grid: GridSpec, seeds: Sequence[Seed],
               sigma: Callable[[np.ndarray], np.ndarray] | None,
               twin: bool, proto: Recorder) -> Recorder:
    m = len(seeds)
    n_x = grid.n_x
    r2 = grid.dt / (2.0 * grid.dx * grid.dx)
    amp = math.sqrt(grid.dt / grid.dx)
    u = np.zeros((m, n_x))
    v = np.zeros((m, n_x)) if twin else None
    rec = proto.fresh(m)
    rec.observe(0, u, v)
    n_steps = grid.n_steps
    for blk_lo in range(0, n_steps, BLOCK_ROWS):
        blk_hi = min(n_steps, blk_lo + BLOCK_ROWS)
        xi = np.empty((m, blk_hi - blk_lo, n_x))
        for s, seed in enumerate(seeds):
            xi[s] = noise_rows(grid, seed, blk_lo, blk_hi)
        for n in range(blk_lo, blk_hi):
            row = xi[:, n - blk_lo, :]
            u = advance_row(u, row, r2, amp, sigma)
            if twin:
                v = advance_row(v, row, r2, amp, None)
            rec.observe(n + 1, u, v)
    return rec


def _pool_job(args):
    return _run_chunk(*args)


def run_streams(
    grid: GridSpec,
    seeds: Sequence[Seed],
    sigma: Callable[[np.ndarray], np.ndarray] | None,
    recorder: Recorder,
    twin: bool = False,
    max_bytes: int = 2**28,
    workers: int = 1,
    stream_group: int = 1,
) -> Recorder:
    """Propagate every seed's field and return the merged recorder.

    ``stream_group`` forces chunk sizes to multiples of that count (component
    groups must not straddle chunks). Results do not depend on ``workers`` or
    ``max_bytes``; those only trade memory and wall clock.
    """
    if not seeds:
        raise UsageError("no streams to run")
    if len(seeds) % stream_group:
        raise UsageError("stream count does not fill whole component groups")
    sizes = _chunk_sizes(len(seeds), grid.n_x, twin, max_bytes, stream_group)
    jobs = []
    at = 0
    for size in sizes:
        jobs.append((grid, list(seeds[at:at + size]), sigma, twin, recorder))
        at += size
    if workers > 1 and len(jobs) > 1:
        import multiprocessing as mp

        with mp.get_context("spawn").Pool(min(workers, len(jobs))) as pool:
            parts = pool.map(_pool_job, jobs)
    else:
        parts = [_run_chunk(*job) for job in jobs]
    merged = parts[0]
    for part in parts[1:]:
        merged.merge(part)
    return merged
