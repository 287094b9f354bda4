"""Hitting probabilities of a 7-component field against nested segments.

One common-random-numbers pass estimates the probability that the vector
field, over a space-time window, comes within the hitting tolerance of
axis-aligned segments of increasing length. The estimates must be strictly
ordered and, once divided by segment length, stay within a bounded spread;
the run declares a reduced update budget and aborts with a resource error
if the workload would exceed it.
"""

from __future__ import annotations

import numpy as np

from ..hitting import DEFAULT_UPDATE_BUDGET, TargetSet, hitting_prob_multi
from ._common import MAX_BYTES, check, options_for, row, sigma_of

DEFAULT_CONFIG = {
    "experiment": "hitting",
    "grid": {"dx": 2.0**-7, "dt": 2.0**-15},
    "sigma": {"kind": "sinusoidal", "a": 1.0, "b": 0.4},
    "windows": {
        "I": [2.0**-4, 2.0**-4 + 2.0**-6],
        "J": [0.0, 0.25],
        "M": 1.0,
        "T": 2.0**-4 + 2.0**-6,
    },
    "budgets": {"replications": 2000, "bootstrap": 1000},
    "seed": 2026,
    "output": None,
    "options": {
        "d": 7,
        "lengths": [0.1, 0.2, 0.4],
        "update_budget": 3.0e10,
        "spread_factor": 3.0,
        "tol_hit": None,
    },
}


def run(cfg, workers: int = 1):
    opts = options_for(cfg, DEFAULT_CONFIG["options"])
    sigma = sigma_of(cfg)
    d = int(opts["d"])
    M = float(cfg.windows["M"])
    lengths = [float(v) for v in opts["lengths"]]
    budget = int(float(opts["update_budget"]))

    targets = []
    for length in lengths:
        anchor = np.zeros(d)
        anchor[0] = -length / 2.0
        targets.append(TargetSet.segment(anchor, length, M=M))

    tol = opts["tol_hit"]
    ests = hitting_prob_multi(
        targets, tuple(map(float, cfg.windows["I"])),
        tuple(map(float, cfg.windows["J"])),
        cfg.budgets["replications"], sigma=sigma, master_seed=cfg.seed,
        dx=float(cfg.grid["dx"]), dt=cfg.grid.get("dt"),
        tol_hit=None if tol is None else float(tol),
        max_updates=budget, max_bytes=MAX_BYTES, workers=workers)

    rows = []
    per_len = []
    for length, est in zip(lengths, ests):
        rows.append(row(length, est.p_hat, "hitting_prob", est.ci_lo,
                        est.ci_hi))
        per_len.append(est.p_hat / length)
        rows.append(row(length, est.p_hat / length, "prob_per_length"))

    ordered = all(a.p_hat < b.p_hat for a, b in zip(ests, ests[1:]))
    spread = (max(per_len) / min(per_len)) if min(per_len) > 0 else np.inf
    factor = float(opts["spread_factor"])
    checks = [
        check("strictly_ordered", ordered,
              "p_hat " + " < ".join(f"{e.p_hat:.4f}" for e in ests)
              if ordered else
              "not ordered: " + ", ".join(f"{e.p_hat:.4f}" for e in ests)),
        check("length_proportionality", spread < factor,
              f"p_hat/length spread {spread:.3f}x vs < {factor}x"),
    ]
    summary = {
        "checks": checks,
        "metrics": {
            "p_hat": [e.p_hat for e in ests],
            "tol_hit": ests[0].tol_hit,
            "spread": float(spread),
            "reduced_budget": budget < DEFAULT_UPDATE_BUDGET,
            "update_budget": budget,
            "n_reps": cfg.budgets["replications"],
        },
    }
    return rows, summary
