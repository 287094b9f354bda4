"""Monte Carlo laboratory for a nonlinear stochastic heat equation and its
Gaussian linearization on shared noise: solvers, coupling residuals,
Garsia-type seminorm thresholds, small-ball and hitting estimators, set
gauges (Hausdorff measure, Riesz capacity), and a joint-density bound
checker, under a reproducible seeded experiment harness."""

from .errors import (CapabilityError, ConfigurationError, CouplingError,
                     DomainError, GridAlignmentError, HeatlabError,
                     ResourceError, UsageError)
from .noise import (BLOCK_ROWS, GridSpec, NoiseField, Seed, derive_seed,
                    noise_rect, noise_rows, sample_noise)
from .solver import (FieldSolution, SigmaSpec, dump_solution, field_value,
                     heat_kernel, solve_linear, solve_nonlinear)
from .coupling import (FitResult, MomentEstimate, Rectangle,
                       coupling_residual_sup, directional_residual,
                       estimate_moment, fit_exponent, moment_from_samples,
                       residual_matrix)
from .seminorm import (GrrState, SeminormParams, calibrate_grr_constant,
                       check_grr_implication, grr_functionals,
                       grr_functionals_batch, grr_threshold, window_sup)
from .hitting import (DyadicCell, HittingEstimate, TargetSet,
                      cells_intersecting, cover_set, cover_sum, dyadic_cell,
                      hitting_prob_estimate, hitting_prob_multi,
                      small_ball_prob, vector_small_ball_prob,
                      wilson_interval)
from .geometry import (DiscreteMeasure, GaugeResult, capacity,
                       hausdorff_measure, parabolic_metric, riesz_energy,
                       sample_points)
from .density import (BoundReport, DensityGrid, FSample, TailFit,
                      borell_tail_check, check_gaussian_bound, kde2,
                      rect_zeta, sample_F)
from .harness import (EXPERIMENT_NAMES, ExperimentConfig, ResultRecord,
                      config_from_dict, config_hash, default_config,
                      emit_plot_data, load_config, parse_config,
                      run_experiment, serialize_config, validate_config,
                      write_record)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
