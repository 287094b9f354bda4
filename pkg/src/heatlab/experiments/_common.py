"""Small helpers shared by the experiment families."""

from __future__ import annotations

import numpy as np

from ..errors import UsageError
from ..noise import GridSpec, Seed, derive_seed
from ..solver import SigmaSpec
from ..harness import ExperimentConfig, sigma_from_config

# chunk cap keeping per-chunk noise blocks ~64 MB; results never depend on it
MAX_BYTES = 2**26


def row(x: float, y: float, series: str, ci_lo: float | None = None,
        ci_hi: float | None = None) -> dict:
    return {"x": float(x), "y": float(y), "series": series,
            "ci_lo": None if ci_lo is None else float(ci_lo),
            "ci_hi": None if ci_hi is None else float(ci_hi)}


def check(name: str, passed, detail: str) -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def options_for(cfg: ExperimentConfig, defaults: dict) -> dict:
    """Defaults overlaid with cfg.options; unknown keys get a field path."""
    merged = dict(defaults)
    for key, val in cfg.options.items():
        if key not in defaults:
            raise UsageError(f"options.{key}: unknown option for "
                             f"{cfg.experiment!r}")
        merged[key] = val
    return merged


def main_grid(cfg: ExperimentConfig) -> GridSpec:
    """Grid over windows.J up to windows.T with the configured steps."""
    j_lo, j_hi = cfg.windows["J"]
    kw = {}
    if cfg.grid.get("dt") is not None:
        kw["dt"] = float(cfg.grid["dt"])
    if cfg.grid.get("pad") is not None:
        kw["pad"] = float(cfg.grid["pad"])
    return GridSpec.for_window(T=float(cfg.windows["T"]),
                               dx=float(cfg.grid["dx"]),
                               window=(float(j_lo), float(j_hi)), **kw)


def sigma_of(cfg: ExperimentConfig) -> SigmaSpec:
    return sigma_from_config(cfg)


def rep_seeds(master: int, component: int, n_reps: int) -> list[Seed]:
    """One stream per replication index; workers never enter the mapping."""
    return [derive_seed(master, component, rep) for rep in range(n_reps)]


def group_seeds(master: int, components: int, n_reps: int) -> list[Seed]:
    """Replication-major seed block for d-component fields; component c of
    replication r reuses the (c, r) stream across different d."""
    return [derive_seed(master, comp, rep)
            for rep in range(n_reps) for comp in range(components)]


def bootstrap_ci_mean(samples: np.ndarray, n_boot: int,
                      seed: int = 90021) -> tuple[float, float]:
    """Percentile bootstrap for a sample mean with a fixed resampling seed
    (results must not depend on replication order, so samples are sorted)."""
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    if x.size < 2 or x[0] == x[-1] or n_boot < 1:
        m = float(x.mean()) if x.size else 0.0
        return m, m
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, x.size, size=(n_boot, x.size))
    means = x[idx].mean(axis=1)
    return (float(np.percentile(means, 2.5)),
            float(np.percentile(means, 97.5)))
