"""Coupling of the nonlinear field to its linear twin on shared noise.

Three parts: (a) with a constant-one coefficient the two fields must agree
bitwise, so the residual sup is exactly zero path by path; (b) the residual
sup over parabolic rectangles is fitted against the rectangle scale on a
self-similar ladder; (c) one-directional residuals give separate spatial
and temporal rates.
"""

from __future__ import annotations

import numpy as np

from .. import engine
from ..coupling import (Rectangle, coupling_residual_sup, fit_exponent,
                        moment_from_samples, residual_matrix)
from ..noise import GridSpec, derive_seed, sample_noise
from ..solver import SigmaSpec, solve_linear, solve_nonlinear
from ._common import (MAX_BYTES, check, main_grid, options_for, rep_seeds,
                      row, sigma_of)

DEFAULT_CONFIG = {
    "experiment": "coupling",
    "grid": {"dx": 2.0**-8, "dt": 2.0**-17},
    "sigma": {"kind": "sinusoidal", "a": 1.0, "b": 0.4},
    "windows": {
        "I": [2.0**-4, 2.0**-4 + 2.0**-9],
        "J": [0.0, 4.0],
        "M": 1.0,
        "T": 2.0**-4 + 2.0**-9,
    },
    "budgets": {"replications": 200, "bootstrap": 1000},
    "seed": 2026,
    "output": None,
    "options": {
        "identity_seeds": 100,
        "identity_dx": 2.0**-5,
        "identity_dt": 2.0**-11,
        "identity_T": 2.0**-4,
        "identity_window": [0.0, 0.5],
        "identity_rect": [2.0**-6, 0.25, 2.0**-6, 0.25],
        "levels": [2, 3, 4, 5],
        "level_t0_factor": 16.0,
        "slope_band": [1.35, 1.65],
        "anchors_x": [0.25 + 0.5 * k for k in range(8)],
        "taus": [2.0**-12, 2.0**-11, 2.0**-10, 2.0**-9],
        "offsets": [2.0**-5, 2.0**-4, 2.0**-3, 2.0**-2],
        "spatial_band": [0.65, 0.85],
        "temporal_floor": 0.35,
    },
}


def _identity_part(cfg, opts) -> tuple[list[float], int]:
    grid = GridSpec.for_window(T=float(opts["identity_T"]),
                               dx=float(opts["identity_dx"]),
                               window=tuple(map(float, opts["identity_window"])),
                               dt=float(opts["identity_dt"]))
    rect = Rectangle(*map(float, opts["identity_rect"]))
    one = SigmaSpec.constant(1.0)
    residuals = []
    for rep in range(int(opts["identity_seeds"])):
        noise = sample_noise(grid, derive_seed(cfg.seed, 0, rep))
        u = solve_nonlinear(grid, noise, one)
        v = solve_linear(grid, noise)
        residuals.append(coupling_residual_sup(u, v, one, rect))
    exact = sum(1 for r in residuals if r == 0.0)
    return residuals, exact


def _ladder_part(cfg, opts, sigma, workers):
    n_reps = cfg.budgets["replications"]
    boot = cfg.budgets["bootstrap"]
    pairs, rows = [], []
    for lv in opts["levels"]:
        size = 2.0 ** (-lv)
        zeta2 = size * size
        zeta1 = zeta2 * zeta2
        t0 = float(opts["level_t0_factor"]) * zeta1
        dx = zeta2 / 8.0
        grid = GridSpec.for_window(T=t0 + zeta1, dx=dx, window=(0.0, zeta2),
                                   dt=dx * dx / 2.0)
        r_lo, r_hi, c_lo, c_hi = Rectangle(t0, 0.0, zeta1, zeta2).node_slices(grid)
        rec = engine.run_streams(
            grid, rep_seeds(cfg.seed, 1, n_reps), sigma,
            engine.RectValues(r_lo, r_hi, c_lo, c_hi, want_twin=True),
            twin=True, max_bytes=MAX_BYTES, workers=workers)
        sup = residual_matrix(rec.u_vals, rec.v_vals, sigma).max(axis=(1, 2))
        est = moment_from_samples(sup, 1, bootstrap=boot)
        pairs.append((size, est.value))
        rows.append(row(lv, est.value, "residual_sup_mean", est.ci_lo,
                        est.ci_hi))
    return fit_exponent(pairs), rows


def _directional_part(cfg, opts, sigma, workers):
    grid = main_grid(cfg)
    n_reps = cfg.budgets["replications"]
    boot = cfg.budgets["bootstrap"]
    t0 = float(cfg.windows["I"][0])
    anchors = [float(a) for a in opts["anchors_x"]]
    taus = [float(v) for v in opts["taus"]]
    offsets = [float(v) for v in opts["offsets"]]

    n0 = grid.time_index(t0)
    tau_rows = [n0 + grid.time_index(tau) for tau in taus]
    col_lo = grid.space_index(anchors[0])
    col_hi = grid.space_index(anchors[-1] + max(offsets))
    rec = engine.run_streams(
        grid, rep_seeds(cfg.seed, 2, n_reps), sigma,
        engine.Snapshots([n0] + tau_rows, col_lo, col_hi, want_twin=True),
        twin=True, max_bytes=MAX_BYTES, workers=workers)
    a_rel = np.array([grid.space_index(a) - col_lo for a in anchors])
    u0 = rec.u_vals[:, 0, a_rel]
    v0 = rec.v_vals[:, 0, a_rel]
    coeff = sigma(u0)

    rows, t_pairs, x_pairs = [], [], []
    for i, tau in enumerate(taus):
        L = (rec.u_vals[:, 1 + i, a_rel] - u0
             - coeff * (rec.v_vals[:, 1 + i, a_rel] - v0))
        est = moment_from_samples(L.ravel(), 2, bootstrap=boot)
        t_pairs.append((tau, est.value))
        rows.append(row(tau, est.value, "temporal_residual_rms", est.ci_lo,
                        est.ci_hi))
    for off in offsets:
        shift = grid.space_index(anchors[0] + off) - grid.space_index(anchors[0])
        L = (rec.u_vals[:, 0, a_rel + shift] - u0
             - coeff * (rec.v_vals[:, 0, a_rel + shift] - v0))
        est = moment_from_samples(L.ravel(), 2, bootstrap=boot)
        x_pairs.append((off, est.value))
        rows.append(row(off, est.value, "spatial_residual_rms", est.ci_lo,
                        est.ci_hi))
    return fit_exponent(t_pairs), fit_exponent(x_pairs), rows


def run(cfg, workers: int = 1):
    opts = options_for(cfg, DEFAULT_CONFIG["options"])
    sigma = sigma_of(cfg)

    residuals, exact = _identity_part(cfg, opts)
    n_id = int(opts["identity_seeds"])
    rows = [row(float(n_id), float(max(residuals)), "identity_residual_max")]

    fit_ladder, ladder_rows = _ladder_part(cfg, opts, sigma, workers)
    rows += ladder_rows
    fit_t, fit_x, dir_rows = _directional_part(cfg, opts, sigma, workers)
    rows += dir_rows

    band = [float(v) for v in opts["slope_band"]]
    x_band = [float(v) for v in opts["spatial_band"]]
    t_floor = float(opts["temporal_floor"])
    checks = [
        check("identity_zero", exact == n_id,
              f"{exact}/{n_id} seeds with residual exactly 0.0"),
        check("coupling_exponent",
              band[0] <= fit_ladder.slope <= band[1],
              f"slope {fit_ladder.slope:.4f} vs [{band[0]}, {band[1]}], "
              f"r2 {fit_ladder.r2:.4f}"),
        check("spatial_rate",
              x_band[0] <= fit_x.slope <= x_band[1],
              f"slope {fit_x.slope:.4f} vs [{x_band[0]}, {x_band[1]}]"),
        check("temporal_rate", fit_t.slope >= t_floor,
              f"slope {fit_t.slope:.4f} vs floor {t_floor}"),
    ]
    summary = {
        "checks": checks,
        "metrics": {
            "identity_exact": exact,
            "coupling_slope": fit_ladder.slope,
            "coupling_stderr": fit_ladder.stderr,
            "spatial_slope": fit_x.slope,
            "temporal_slope": fit_t.slope,
            "n_reps": cfg.budgets["replications"],
        },
    }
    return rows, summary
