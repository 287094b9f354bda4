"""Regularity of the linear field: increment scaling plus the variance law.

Part one fits temporal and spatial exponents from root-mean-square
increments of v at a battery of anchors. Part two checks the stationary
variance Var[v(T, x)] -> sqrt(T/pi) at a coarse grid with many streams.
"""

from __future__ import annotations

import math

import numpy as np

from .. import engine
from ..coupling import fit_exponent, moment_from_samples
from ..noise import GridSpec
from ._common import (MAX_BYTES, bootstrap_ci_mean, check, main_grid,
                      options_for, rep_seeds, row)

DEFAULT_CONFIG = {
    "experiment": "holder",
    "grid": {"dx": 2.0**-9, "dt": 2.0**-19},
    "sigma": {"kind": "sinusoidal", "a": 1.0, "b": 0.4},
    "windows": {
        "I": [2.0**-5, 2.0**-5 + 2.0**-10],
        "J": [0.0, 2.3125],
        "M": 1.0,
        "T": 2.0**-5 + 2.0**-10,
    },
    "budgets": {"replications": 200, "bootstrap": 1000},
    "seed": 2026,
    "output": None,
    "options": {
        "lags": [2.0**-13, 2.0**-12, 2.0**-11, 2.0**-10],
        "offsets": [2.0**-7, 2.0**-6, 2.0**-5, 2.0**-4],
        "anchor_lo": 0.25,
        "anchor_step": 2.0**-4,
        "n_anchors": 33,
        "temporal_band": [0.40, 0.60],
        "spatial_band": [0.84, 1.16],
        "variance_reps": None,
        "variance_T": 0.5,
        "variance_dx": 2.0**-5,
        "variance_dt": 2.0**-11,
        "variance_x": 0.5,
        "variance_rtol": 0.05,
    },
}


def _variance_ci(values: np.ndarray, n_boot: int) -> tuple[float, float]:
    x = np.sort(values)
    if n_boot < 1 or x[0] == x[-1]:
        v = float(np.var(x, ddof=1))
        return v, v
    rng = np.random.default_rng(90022)
    idx = rng.integers(0, x.size, size=(n_boot, x.size))
    vs = np.var(x[idx], axis=1, ddof=1)
    return float(np.percentile(vs, 2.5)), float(np.percentile(vs, 97.5))


def run(cfg, workers: int = 1):
    opts = options_for(cfg, DEFAULT_CONFIG["options"])
    grid = main_grid(cfg)
    n_reps = cfg.budgets["replications"]
    boot = cfg.budgets["bootstrap"]
    t0 = float(cfg.windows["I"][0])
    lags = [float(v) for v in opts["lags"]]
    offsets = [float(v) for v in opts["offsets"]]
    anchors = [opts["anchor_lo"] + k * opts["anchor_step"]
               for k in range(opts["n_anchors"])]

    n0 = grid.time_index(t0)
    lag_rows = [n0 + grid.time_index(lag) for lag in lags]
    col_lo = grid.space_index(anchors[0])
    col_hi = grid.space_index(anchors[-1] + max(offsets))
    rec = engine.run_streams(
        grid, rep_seeds(cfg.seed, 0, n_reps), None,
        engine.Snapshots([n0] + lag_rows, col_lo, col_hi),
        max_bytes=MAX_BYTES, workers=workers)
    a_rel = np.array([grid.space_index(a) - col_lo for a in anchors])
    base = rec.u_vals[:, 0, :]

    # the gated exponent is the slope of the SECOND moment (per-increment
    # exponent doubled), so square the RMS estimates before fitting
    rows = []
    t_pairs, x_pairs = [], []
    for i, lag in enumerate(lags):
        diff = rec.u_vals[:, 1 + i, a_rel] - base[:, a_rel]
        est = moment_from_samples(diff.ravel(), 2, bootstrap=boot)
        t_pairs.append((lag, est.value ** 2))
        rows.append(row(lag, est.value ** 2, "temporal_sq_increment",
                        est.ci_lo ** 2, est.ci_hi ** 2))
    for off in offsets:
        shift = grid.space_index(anchors[0] + off) - grid.space_index(anchors[0])
        diff = base[:, a_rel + shift] - base[:, a_rel]
        est = moment_from_samples(diff.ravel(), 2, bootstrap=boot)
        x_pairs.append((off, est.value ** 2))
        rows.append(row(off, est.value ** 2, "spatial_sq_increment",
                        est.ci_lo ** 2, est.ci_hi ** 2))
    fit_t = fit_exponent(t_pairs)
    fit_x = fit_exponent(x_pairs)

    var_reps = opts["variance_reps"]
    if var_reps is None:
        var_reps = 50 * n_reps
    var_T = float(opts["variance_T"])
    vgrid = GridSpec.for_window(T=var_T, dx=float(opts["variance_dx"]),
                                window=(0.0, 2 * float(opts["variance_x"])),
                                dt=float(opts["variance_dt"]))
    vcol = vgrid.space_index(float(opts["variance_x"]))
    vrec = engine.run_streams(
        vgrid, rep_seeds(cfg.seed, 1, int(var_reps)), None,
        engine.Snapshots([vgrid.n_steps], vcol, vcol),
        max_bytes=MAX_BYTES, workers=workers)
    terminal = vrec.u_vals[:, 0, 0]
    var_hat = float(np.var(terminal, ddof=1))
    var_lo, var_hi = _variance_ci(terminal, boot)
    var_target = math.sqrt(var_T / math.pi)
    var_relerr = abs(var_hat / var_target - 1.0)
    rows.append(row(var_T, var_hat, "terminal_variance", var_lo, var_hi))
    rows.append(row(var_T, var_target, "terminal_variance_target"))

    t_band = [float(v) for v in opts["temporal_band"]]
    x_band = [float(v) for v in opts["spatial_band"]]
    rtol = float(opts["variance_rtol"])
    checks = [
        check("temporal_exponent",
              t_band[0] <= fit_t.slope <= t_band[1],
              f"slope {fit_t.slope:.4f} vs [{t_band[0]}, {t_band[1]}], "
              f"r2 {fit_t.r2:.4f}"),
        check("spatial_exponent",
              x_band[0] <= fit_x.slope <= x_band[1],
              f"slope {fit_x.slope:.4f} vs [{x_band[0]}, {x_band[1]}], "
              f"r2 {fit_x.r2:.4f}"),
        check("variance_law",
              var_relerr <= rtol,
              f"Var[v({var_T}, {opts['variance_x']})] = {var_hat:.5f} vs "
              f"sqrt(T/pi) = {var_target:.5f} (rel err {var_relerr:.4f}, "
              f"tol {rtol})"),
    ]
    summary = {
        "checks": checks,
        "metrics": {
            "temporal_exponent": fit_t.slope,
            "temporal_stderr": fit_t.stderr,
            "spatial_exponent": fit_x.slope,
            "spatial_stderr": fit_x.stderr,
            "variance": var_hat,
            "variance_target": var_target,
            "variance_relerr": var_relerr,
            "n_reps": n_reps,
            "variance_reps": int(var_reps),
        },
    }
    return rows, summary
