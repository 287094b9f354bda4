"""Capacity kernel exactness and the energy-minimization cross-check.

Negative-order kernels are constant, so every set has capacity exactly one;
this is asserted across all target kinds. The unit-segment problem at
beta = 1/2 is then solved two independent ways: the production Frank-Wolfe
path (which must converge below the gap tolerance) and a dense projected-
gradient quadratic program built from scratch on its own equispaced
discretization. The two capacities must agree within five percent.
"""

from __future__ import annotations

import math

import numpy as np

from ..geometry import capacity, sample_points
from ..hitting import TargetSet
from ._common import check, options_for, row

DEFAULT_CONFIG = {
    "experiment": "gauge",
    "grid": {"dx": 0.25},
    "sigma": {"kind": "constant", "c0": 1.0},
    "windows": {"I": [1.0, 1.0], "J": [0.0, 1.0], "M": 1.0, "T": 1.0},
    "budgets": {"replications": 1, "bootstrap": 1},
    "seed": 2026,
    "output": None,
    "options": {
        "beta_negative": -0.5,
        "beta_segment": 0.5,
        "point_counts": [64, 128],
        "max_iters": 500000,
        "gap_tol": 1.0e-6,
        "qp_rel_tol": 0.05,
        "qp_iters": 200000,
    },
}


def _target_zoo(M: float) -> dict[str, TargetSet]:
    return {
        "singleton": TargetSet.singleton(np.array([0.3, -0.2]), M=M),
        "points": TargetSet(kind="points", d=2, M=M,
                            pts=np.array([[0.1, 0.0], [-0.4, 0.5],
                                          [0.2, -0.3]])),
        "segment": TargetSet.segment(np.zeros(1), 1.0, M=M),
        "ball": TargetSet.ball(np.zeros(2), 0.5, M=M),
        "dust": TargetSet.dust(np.zeros(1), 1.0, M=M),
    }


def _project_simplex(w: np.ndarray) -> np.ndarray:
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u > css / np.arange(1, w.size + 1))[0][-1]
    return np.maximum(w - css[rho] / (rho + 1.0), 0.0)


def _qp_min_energy(K: np.ndarray, iters: int, tol: float = 1e-14) -> float:
    """Projected gradient for min w'Kw over the probability simplex."""
    n = K.shape[0]
    step = 1.0 / float(np.linalg.eigvalsh(2.0 * K).max())
    w = np.full(n, 1.0 / n)
    for _ in range(iters):
        nxt = _project_simplex(w - step * 2.0 * (K @ w))
        if np.abs(nxt - w).max() < tol:
            w = nxt
            break
        w = nxt
    return float(w @ K @ w)


def run(cfg, workers: int = 1):
    opts = options_for(cfg, DEFAULT_CONFIG["options"])
    M = float(cfg.windows["M"])
    beta_neg = float(opts["beta_negative"])
    beta_seg = float(opts["beta_segment"])
    counts = [int(c) for c in opts["point_counts"]]

    rows, checks = [], []
    exact = {}
    for name, target in _target_zoo(M).items():
        res = capacity(target, beta_neg)
        exact[name] = (res.value, res.method)
        rows.append(row(beta_neg, res.value, f"capacity_{name}"))
    all_one = all(v == 1.0 and m == "closed-form" for v, m in exact.values())
    checks.append(check(
        "negative_beta_exact", all_one,
        "capacity over kinds: "
        + ", ".join(f"{k}={v}" for k, (v, _) in exact.items())))

    seg = TargetSet.segment(np.zeros(1), 1.0, M=M)
    results = {}
    for n_points in counts:
        res = capacity(seg, beta_seg, n_points=n_points,
                       max_iters=int(opts["max_iters"]),
                       gap_tol=float(opts["gap_tol"]))
        results[n_points] = res
        rows.append(row(n_points, res.value, "segment_capacity"))
        rows.append(row(n_points, res.gap, "frank_wolfe_gap"))
    head = results[counts[-1]]
    gap_tol = float(opts["gap_tol"])
    checks.append(check(
        "frank_wolfe_gap", head.converged and head.gap < gap_tol,
        f"gap {head.gap:.3e} vs < {gap_tol:.0e} at {counts[-1]} points "
        f"(converged={head.converged})"))

    # independent route: own discretization, own kernel, own QP solver
    n = counts[-1]
    pts = sample_points(seg, n)[:, 0]
    r = np.abs(pts[:, None] - pts[None, :])
    r_min = (pts[1] - pts[0]) / 2.0
    K = np.maximum(r, r_min) ** (-beta_seg)
    cap_qp = 1.0 / _qp_min_energy(K, int(opts["qp_iters"]))
    rel = abs(head.value / cap_qp - 1.0)
    rel_tol = float(opts["qp_rel_tol"])
    rows.append(row(n, cap_qp, "segment_capacity_qp"))
    checks.append(check(
        "qp_agreement", rel <= rel_tol,
        f"frank-wolfe {head.value:.6f} vs dense QP {cap_qp:.6f} "
        f"(rel diff {rel:.2e} vs <= {rel_tol})"))

    summary = {
        "checks": checks,
        "metrics": {
            "negative_beta": {k: v for k, (v, _) in exact.items()},
            "segment_capacity": {str(k): v.value for k, v in results.items()},
            "gap": head.gap,
            "qp_capacity": cap_qp,
            "qp_rel_diff": rel,
        },
    }
    return rows, summary
