"""Experiment families, one module per family.

Each module exports ``DEFAULT_CONFIG`` (the full-budget built-in config)
and ``run(cfg, workers) -> (rows, summary)``.
"""

from . import (coupling, density, gauge, hitting, holder, seminorm,
               smallball)
from ..harness import EXPERIMENT_NAMES

EXPERIMENTS = {
    "holder": holder,
    "coupling": coupling,
    "seminorm": seminorm,
    "smallball": smallball,
    "hitting": hitting,
    "density": density,
    "gauge": gauge,
}

assert tuple(EXPERIMENTS) == EXPERIMENT_NAMES
