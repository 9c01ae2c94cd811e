"""Deterministic-chaos simulator of two-outcome spin statistics.

A classical magnetic moment with a two-branch torque law is carried
through the field of a current loop; damping and the chaotic transit
dynamics collapse every trajectory to one of two poles, and ensemble
averaging over perturbed repeat runs reproduces the quantum spin-down
probability curve.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND, HAVE_NUMBA
from .analysis import (Curve, DimensionEstimate, FlipReport, convolve_nas,
                       fractal_dimension, koch_curve, qm_pdown, rmse,
                       scaled_half_width, sensitivity_pairs)
from .config import (Config, ConfigError, build_model_params, load_config,
                     parse_config)
from .dynamics import (HBAR, ModelParams, Outcome, SpinState,
                       euler_cromer_step, forward_euler_step,
                       integrate_pendulum, pendulum_rhs, qm_timescale, rhs,
                       simulate_trajectory, spin_torque, trajectory_path)
from .ensemble import (CalibrationResult, EnsembleAbortError, EnsembleResult,
                       RunPerturbation, angle_grid, calibrate,
                       derive_perturbation, estimate_pdown, perturb_run,
                       run_ensemble)
from .magnetics import (MU_0, DomainError, FieldSample, LoopGeometry,
                        TrajectorySpec, WireSingularityError,
                        biot_savart_loop, divergence_residual, elliptic_ke,
                        field_along_trajectory, loop_field)

__all__ = [
    "__version__",
    "BACKEND",
    "HAVE_NUMBA",
    "MU_0",
    "HBAR",
    "DomainError",
    "WireSingularityError",
    "ConfigError",
    "EnsembleAbortError",
    "LoopGeometry",
    "FieldSample",
    "TrajectorySpec",
    "ModelParams",
    "SpinState",
    "Outcome",
    "RunPerturbation",
    "EnsembleResult",
    "CalibrationResult",
    "Curve",
    "DimensionEstimate",
    "FlipReport",
    "Config",
    "elliptic_ke",
    "loop_field",
    "biot_savart_loop",
    "divergence_residual",
    "field_along_trajectory",
    "spin_torque",
    "rhs",
    "euler_cromer_step",
    "forward_euler_step",
    "qm_timescale",
    "simulate_trajectory",
    "trajectory_path",
    "pendulum_rhs",
    "integrate_pendulum",
    "angle_grid",
    "derive_perturbation",
    "perturb_run",
    "run_ensemble",
    "estimate_pdown",
    "calibrate",
    "qm_pdown",
    "scaled_half_width",
    "convolve_nas",
    "rmse",
    "fractal_dimension",
    "sensitivity_pairs",
    "koch_curve",
    "parse_config",
    "load_config",
    "build_model_params",
]
