"""Experiment orchestration: configs, result records, plot data, dispatch.

A config is a nested key-value document (YAML on disk). Validation reports
the offending field path. Runs are pure functions of the config: rerunning
one yields byte-identical row data regardless of worker count; wall clock
lives only in the JSON summary, never in the rows.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigurationError, UsageError
from .solver import SigmaSpec

EXPERIMENT_NAMES = ("holder", "coupling", "seminorm", "smallball", "hitting",
                    "density", "gauge")

_CSV_HEADER = ("x", "y", "series", "ci_lo", "ci_hi")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment family plus everything its run depends on.

    ``grid`` holds discretization steps (dx required; dt defaults to dx^2/2;
    optional pad). ``windows`` holds the observation geometry: I (time
    interval of interest), J (space interval), M (height half-width), T
    (terminal time). ``budgets`` holds replications and bootstrap resamples.
    ``options`` carries family-specific knobs; unknown keys are rejected by
    the family at run time.
    """

    experiment: str
    grid: dict = field(default_factory=dict)
    sigma: dict = field(default_factory=dict)
    windows: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    seed: int = 0
    output: str | None = None
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return copy.deepcopy(dataclasses.asdict(self))


@dataclass(frozen=True)
class ResultRecord:
    """Finished run: identity, per-row metrics, checks, and wall clock."""

    experiment: str
    config_hash: str
    version: str
    rows: list[dict]
    summary: dict
    wall_clock_s: float

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.summary.get("checks", []))


def _fail(path: str, msg: str):
    raise UsageError(f"{path}: {msg}")


def _need_interval(win: dict, key: str) -> tuple[float, float]:
    v = win.get(key)
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or not all(isinstance(e, (int, float)) for e in v)):
        _fail(f"windows.{key}", "must be a [lo, hi] pair of numbers")
    return float(v[0]), float(v[1])


def sigma_from_config(cfg: ExperimentConfig) -> SigmaSpec:
    spec = dict(cfg.sigma)
    kind = spec.pop("kind", None)
    try:
        if kind == "constant":
            return SigmaSpec.constant(**spec)
        if kind == "sinusoidal":
            return SigmaSpec.sinusoidal(**spec)
        if kind == "tabulated":
            return SigmaSpec.tabulated(**spec)
    except (ConfigurationError, TypeError) as e:
        _fail("sigma", str(e))
    _fail("sigma.kind", f"unknown kind {kind!r}")


def validate_config(cfg: ExperimentConfig) -> None:
    """Raise a usage error naming the offending field path."""
    if cfg.experiment not in EXPERIMENT_NAMES:
        _fail("experiment", f"unknown experiment {cfg.experiment!r}; "
                            f"expected one of {', '.join(EXPERIMENT_NAMES)}")
    for name, val in (("grid", cfg.grid), ("sigma", cfg.sigma),
                      ("windows", cfg.windows), ("budgets", cfg.budgets),
                      ("options", cfg.options)):
        if not isinstance(val, dict):
            _fail(name, "must be a mapping")

    for key in cfg.grid:
        if key not in ("dx", "dt", "pad"):
            _fail(f"grid.{key}", "unknown key")
    dx = cfg.grid.get("dx")
    if not isinstance(dx, (int, float)) or dx <= 0:
        _fail("grid.dx", "must be a positive number")
    dt = cfg.grid.get("dt")
    if dt is not None:
        if not isinstance(dt, (int, float)) or dt <= 0:
            _fail("grid.dt", "must be a positive number")
        if dt > dx * dx:
            _fail("grid.dt", "explicit scheme needs dt <= dx^2")
    pad = cfg.grid.get("pad")
    if pad is not None and (not isinstance(pad, (int, float)) or pad <= 0):
        _fail("grid.pad", "must be a positive number")

    sigma_from_config(cfg)

    T = cfg.windows.get("T")
    if not isinstance(T, (int, float)) or T <= 0:
        _fail("windows.T", "must be a positive number")
    i_lo, i_hi = _need_interval(cfg.windows, "I")
    if not (0 < i_lo <= i_hi <= T + 1e-12):
        _fail("windows.I", "must satisfy 0 < lo <= hi <= T")
    j_lo, j_hi = _need_interval(cfg.windows, "J")
    if not j_lo < j_hi:
        _fail("windows.J", "must have positive length")
    M = cfg.windows.get("M", 1.0)
    if not isinstance(M, (int, float)) or M <= 0:
        _fail("windows.M", "must be a positive number")

    reps = cfg.budgets.get("replications")
    if not isinstance(reps, int) or isinstance(reps, bool) or reps < 1:
        _fail("budgets.replications", "must be a positive integer")
    boot = cfg.budgets.get("bootstrap")
    if not isinstance(boot, int) or isinstance(boot, bool) or boot < 1:
        _fail("budgets.bootstrap", "must be a positive integer")

    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool) \
            or not 0 <= cfg.seed < 2**64:
        _fail("seed", "must be an integer in [0, 2^64)")
    if cfg.output is not None and not isinstance(cfg.output, str):
        _fail("output", "must be a path string or null")
    for key in cfg.options:
        if not isinstance(key, str):
            _fail("options", f"non-string key {key!r}")


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def default_config(experiment: str) -> ExperimentConfig:
    """The family's built-in full-budget configuration."""
    if experiment not in EXPERIMENT_NAMES:
        _fail("experiment", f"unknown experiment {experiment!r}")
    from . import experiments
    return config_from_dict(
        copy.deepcopy(experiments.EXPERIMENTS[experiment].DEFAULT_CONFIG))


def config_from_dict(doc: dict, defaults: bool = False) -> ExperimentConfig:
    """Build and validate a config from a plain nested dict.

    With ``defaults=True`` the document is merged over the named family's
    built-in configuration, so partial documents stay usable.
    """
    if not isinstance(doc, dict):
        _fail("config", "document must be a mapping")
    name = doc.get("experiment")
    if defaults:
        if name not in EXPERIMENT_NAMES:
            _fail("experiment", f"unknown experiment {name!r}")
        from . import experiments
        doc = _deep_merge(experiments.EXPERIMENTS[name].DEFAULT_CONFIG, doc)
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key in doc:
        if key not in known:
            _fail(str(key), "unknown top-level key")
    cfg = ExperimentConfig(**{k: copy.deepcopy(v) for k, v in doc.items()})
    validate_config(cfg)
    return cfg


def parse_config(text: str, defaults: bool = False) -> ExperimentConfig:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise UsageError(f"config: invalid YAML ({e})") from e
    return config_from_dict(doc, defaults=defaults)


def load_config(path: str | Path, defaults: bool = True) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config: no such file {p}")
    return parse_config(p.read_text(), defaults=defaults)


def serialize_config(cfg: ExperimentConfig) -> str:
    """YAML text whose parse returns an equal config."""
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True,
                          default_flow_style=False)


def config_hash(cfg: ExperimentConfig) -> str:
    """sha256 over the canonical JSON form, minus the output path (which
    cannot affect results)."""
    doc = cfg.to_dict()
    doc.pop("output", None)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ResultRecord:
    """Dispatch to the family's run; results depend only on the config.

    Raises a usage error (with field path) on invalid configs and a resource
    error when a family's update budget would be exceeded.
    """
    validate_config(cfg)
    if workers < 1:
        _fail("workers", "must be a positive integer")
    from . import __version__, experiments
    t_start = time.perf_counter()
    rows, summary = experiments.EXPERIMENTS[cfg.experiment].run(cfg, workers)
    wall = time.perf_counter() - t_start
    for r in rows:
        _check_row(r)
    return ResultRecord(experiment=cfg.experiment, config_hash=config_hash(cfg),
                        version=__version__, rows=rows, summary=summary,
                        wall_clock_s=wall)


def _check_row(row: dict):
    if set(row) != set(_CSV_HEADER):
        raise ConfigurationError(f"malformed result row keys {sorted(row)}")
    s = row["series"]
    if not isinstance(s, str) or not s or not all(
            c.isalnum() or c == "_" for c in s):
        raise ConfigurationError(f"series must be a plain identifier, got {s!r}")


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def emit_plot_data(records, path: str | Path | None = None) -> str:
    """Long-form CSV (x,y,series,ci_lo,ci_hi) from one or more records.

    All records must come from the same experiment family; an empty record
    list produces just the header. The byte content is a pure function of
    the row data.
    """
    if isinstance(records, ResultRecord):
        records = [records]
    records = list(records)
    families = {r.experiment for r in records}
    if len(families) > 1:
        raise UsageError(
            f"cannot mix plot rows from experiments: {', '.join(sorted(families))}")
    lines = [",".join(_CSV_HEADER)]
    for rec in records:
        for row in rec.rows:
            _check_row(row)
            lines.append(",".join((_fmt(row["x"]), _fmt(row["y"]),
                                   row["series"], _fmt(row["ci_lo"]),
                                   _fmt(row["ci_hi"]))))
    text = "\r\n".join(lines) + "\r\n"
    if path is not None:
        Path(path).write_bytes(text.encode())
    return text


def write_record(record: ResultRecord, out_dir: str | Path) -> tuple[Path, Path]:
    """Write rows CSV and summary JSON; returns both paths.

    The CSV bytes are reproducible run to run; the JSON carries the wall
    clock and is the only artifact allowed to differ between reruns.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows_path = out / f"{record.experiment}_rows.csv"
    emit_plot_data(record, rows_path)
    doc = {
        "experiment": record.experiment,
        "config_hash": record.config_hash,
        "version": record.version,
        "passed": record.passed,
        "wall_clock_s": record.wall_clock_s,
        "summary": record.summary,
    }
    summary_path = out / f"{record.experiment}_summary.json"
    summary_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return rows_path, summary_path
