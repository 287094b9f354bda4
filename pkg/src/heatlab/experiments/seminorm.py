"""Integrated-increment functionals of the linear field and the pathwise
threshold test they support.

Part one fits the scaling of E[Y1] and E[Y2] on a battery of anchors, each
against its own window extent: the time span zeta^2 for Y1, the space width
zeta for Y2. Part two calibrates the threshold constant on training
paths, then counts violations of the implication (z below threshold forces
the window sup below the level) on held-out paths; the window sup uses
every grid node in the window.
"""

from __future__ import annotations

import numpy as np

from .. import engine
from ..coupling import fit_exponent, moment_from_samples
from ..noise import GridSpec
from ..seminorm import (CALIBRATION_CAP, CALIBRATION_SHRINK, QUAD_NODE_CAP,
                        SeminormParams, _quad_nodes, grr_functionals_batch,
                        grr_threshold)
from ._common import (MAX_BYTES, check, main_grid, options_for, rep_seeds,
                      row)

DEFAULT_CONFIG = {
    "experiment": "seminorm",
    "grid": {"dx": 2.0**-8, "dt": 2.0**-17},
    "sigma": {"kind": "sinusoidal", "a": 1.0, "b": 0.4},
    "windows": {
        "I": [0.25, 0.3125],
        "J": [0.0, 2.0],
        "M": 1.0,
        "T": 0.3125,
    },
    "budgets": {"replications": 200, "bootstrap": 1000},
    "seed": 2026,
    "output": None,
    "options": {
        "params": {},
        "zetas": [2.0**-5, 2.0**-4, 2.0**-3, 2.0**-2],
        "anchors_x": [0.25 * k for k in range(8)],
        "y1_target": 7.5,
        "y2_target": 15.0,
        "slope_rtol": 0.2,
        "impl_dx": 2.0**-7,
        "impl_dt": 2.0**-15,
        "impl_window": [0.0, 0.25],
        "impl_zeta": 2.0**-2,
        "impl_a": 1.0,
        "impl_train": 100,
        "impl_test": 500,
    },
}


def _moment_part(cfg, opts, params, workers):
    grid = main_grid(cfg)
    n_reps = cfg.budgets["replications"]
    boot = cfg.budgets["bootstrap"]
    t0 = float(cfg.windows["I"][0])
    zetas = [float(z) for z in opts["zetas"]]
    anchors = [float(a) for a in opts["anchors_x"]]

    n0 = grid.time_index(t0)
    quads = {}
    all_rows: set[int] = set()
    for zeta in zetas:
        t_idx, _ = _quad_nodes(n0, grid.time_index(t0 + zeta * zeta),
                               grid.dt, QUAD_NODE_CAP)
        quads[zeta] = t_idx
        all_rows.update(int(r) for r in t_idx)
    col_lo = grid.space_index(min(anchors))
    col_hi = grid.space_index(max(anchors) + max(zetas))
    rec = engine.run_streams(
        grid, rep_seeds(cfg.seed, 0, n_reps), None,
        engine.Snapshots(sorted(all_rows), col_lo, col_hi),
        max_bytes=MAX_BYTES, workers=workers)
    row_pos = {r: i for i, r in enumerate(sorted(all_rows))}

    rows, p1, p2 = [], [], []
    y3_means = []
    for zeta in zetas:
        t_idx = quads[zeta]
        t_sub = np.array([row_pos[int(r)] for r in t_idx])
        pool1, pool2, pool3 = [], [], []
        for x0 in anchors:
            j0 = grid.space_index(x0)
            j1 = grid.space_index(x0 + zeta)
            x_idx, _ = _quad_nodes(j0, j1, grid.dx, QUAD_NODE_CAP)
            patch = rec.u_vals[:, t_sub, :][:, :, x_idx - col_lo]
            y1, y2, y3 = grr_functionals_batch(patch, t_idx, x_idx,
                                               grid.dt, grid.dx, params)
            pool1.append(y1)
            pool2.append(y2)
            pool3.append(y3)
        e1 = moment_from_samples(np.concatenate(pool1), 1, bootstrap=boot)
        e2 = moment_from_samples(np.concatenate(pool2), 1, bootstrap=boot)
        y3m = float(np.concatenate(pool3).mean())
        p1.append((zeta * zeta, e1.value))
        p2.append((zeta, e2.value))
        y3_means.append((zeta, y3m))
        rows.append(row(zeta * zeta, e1.value, "y1_mean", e1.ci_lo, e1.ci_hi))
        rows.append(row(zeta, e2.value, "y2_mean", e2.ci_lo, e2.ci_hi))
        rows.append(row(zeta, y3m, "y3_mean"))
    return fit_exponent(p1), fit_exponent(p2), rows


def _implication_part(cfg, opts, params, workers):
    t0 = float(cfg.windows["I"][0])
    zeta = float(opts["impl_zeta"])
    a = float(opts["impl_a"])
    grid = GridSpec.for_window(T=t0 + zeta * zeta, dx=float(opts["impl_dx"]),
                               window=tuple(map(float, opts["impl_window"])),
                               dt=float(opts["impl_dt"]))
    x0 = float(opts["impl_window"][0])
    n0, n1 = grid.time_index(t0), grid.time_index(t0 + zeta * zeta)
    j0, j1 = grid.space_index(x0), grid.space_index(x0 + zeta)
    t_idx, _ = _quad_nodes(n0, n1, grid.dt, QUAD_NODE_CAP)
    x_idx, _ = _quad_nodes(j0, j1, grid.dx, QUAD_NODE_CAP)

    def functionals(component, n_paths):
        rec = engine.run_streams(
            grid, rep_seeds(cfg.seed, component, n_paths), None,
            engine.RectValues(n0, n1, j0, j1),
            max_bytes=MAX_BYTES, workers=workers)
        vals = rec.u_vals
        sup = np.abs(vals - vals[:, 0:1, 0:1]).max(axis=(1, 2))
        patch = vals[:, t_idx - n0, :][:, :, x_idx - j0]
        y1, y2, y3 = grr_functionals_batch(patch, t_idx, x_idx,
                                           grid.dt, grid.dx, params)
        return y1 + y2 + y3, sup

    z_train, sup_train = functionals(0, int(opts["impl_train"]))
    base = a ** (2 * params.p0) * zeta ** (4.0 - params.gamma0)
    constrained = sup_train > a
    bound = CALIBRATION_CAP
    if constrained.any():
        bound = min(bound, float((z_train[constrained] / base).min()))
    c_cal = CALIBRATION_SHRINK * bound
    thr = grr_threshold(a, zeta, params, c_cal)

    z_test, sup_test = functionals(1, int(opts["impl_test"]))
    violations = int(np.sum((z_test <= thr) & (sup_test > a)))
    stats = {
        "c_cal": c_cal,
        "threshold": thr,
        "n_constrained": int(constrained.sum()),
        "violations": violations,
        "test_below_threshold": int(np.sum(z_test <= thr)),
        "zeta": zeta,
        "a": a,
    }
    rows = [
        row(zeta, c_cal, "calibrated_constant"),
        row(zeta, float(violations), "holdout_violations"),
        row(zeta, float(constrained.mean()), "train_constrained_frac"),
    ]
    return stats, rows


def run(cfg, workers: int = 1):
    opts = options_for(cfg, DEFAULT_CONFIG["options"])
    params = SeminormParams(**opts["params"])

    fit1, fit2, rows = _moment_part(cfg, opts, params, workers)
    impl, impl_rows = _implication_part(cfg, opts, params, workers)
    rows += impl_rows

    rtol = float(opts["slope_rtol"])
    t1, t2 = float(opts["y1_target"]), float(opts["y2_target"])
    checks = [
        check("y1_slope", abs(fit1.slope - t1) <= rtol * t1,
              f"slope {fit1.slope:.4f} vs {t1} +- {rtol * t1:.1f}, "
              f"r2 {fit1.r2:.4f}"),
        check("y2_slope", abs(fit2.slope - t2) <= rtol * t2,
              f"slope {fit2.slope:.4f} vs {t2} +- {rtol * t2:.1f}, "
              f"r2 {fit2.r2:.4f}"),
        check("implication_holdout", impl["violations"] == 0,
              f"{impl['violations']} violations on {opts['impl_test']} "
              f"held-out paths (c_cal {impl['c_cal']:.4f}, "
              f"{impl['n_constrained']} constraining paths)"),
    ]
    summary = {
        "checks": checks,
        "metrics": {
            "y1_slope": fit1.slope,
            "y2_slope": fit2.slope,
            **impl,
            "n_reps": cfg.budgets["replications"],
        },
    }
    return rows, summary
