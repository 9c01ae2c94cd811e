"""The statistical experiment: angle grid, perturbed repeat runs, outcomes.

Each repeat run shares one perturbation (a small time-step factor and a
shift of the launch position in its third significant figure) so that
repeat statistics wash out numerical attractors without touching the
initial angles themselves.  Perturbations come from a counter-based
generator, so run k is reproducible in isolation and the whole result is
a pure function of (params, n_angles, n_runs, master_seed) regardless of
how many worker threads execute it.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .dynamics import ModelParams

__all__ = [
    "EnsembleAbortError",
    "RunPerturbation",
    "EnsembleResult",
    "angle_grid",
    "derive_perturbation",
    "perturb_run",
    "run_ensemble",
    "estimate_pdown",
    "calibrate",
    "CalibrationResult",
]

_HALF_PI = 0.5 * math.pi


class EnsembleAbortError(RuntimeError):
    """A trajectory inside an ensemble left the valid state space."""

    def __init__(self, theta_index, run_index, message):
        super().__init__(
            f"trajectory (theta_index={theta_index}, run={run_index}) {message}")
        self.theta_index = theta_index
        self.run_index = run_index


@dataclass(frozen=True)
class RunPerturbation:
    """Per-run nudge of the numerics, fully determined by (master_seed, run)."""

    run_index: int
    dt_factor: float        # in [0.95, 1.05]
    x_start_offset: float   # counts of the third significant figure of x_start
    seed: int               # derived 64-bit sub-seed, recorded for audit

    def __post_init__(self):
        if not (0.95 <= self.dt_factor <= 1.05):
            raise ValueError("dt_factor must stay within [0.95, 1.05]")


@dataclass(frozen=True)
class EnsembleResult:
    """Outcome matrix of a full grid-by-runs experiment."""

    angles: np.ndarray            # (n_angles,)
    outcomes: np.ndarray          # (n_angles, n_runs) int8 of {0, 1}
    perturbations: tuple          # RunPerturbation per run
    unsettled: np.ndarray         # (n_angles, n_runs) bool
    master_seed: int

    def __post_init__(self):
        n_angles, n_runs = self.outcomes.shape
        if len(self.angles) != n_angles or len(self.perturbations) != n_runs:
            raise ValueError("inconsistent result shapes")
        if self.unsettled.shape != self.outcomes.shape:
            raise ValueError("unsettled mask shape mismatch")

    @property
    def n_angles(self):
        return self.outcomes.shape[0]

    @property
    def n_runs(self):
        return self.outcomes.shape[1]


def angle_grid(n) -> np.ndarray:
    """n equally spaced initial angles i*pi/n, i = 0 .. n-1.

    n must be odd so that pi/2 never lands on the grid; an initial state
    of exactly pi/2 would never flip to either side.
    """
    n = int(n)
    if n < 3:
        raise ValueError("need at least 3 angles")
    if n % 2 == 0:
        raise ValueError(f"n_angles must be odd to keep pi/2 off the grid, got {n}")
    return np.arange(n) * (math.pi / n)


def _third_sig_fig_unit(x):
    return 10.0 ** (math.floor(math.log10(abs(x))) - 2)


def derive_perturbation(master_seed, run_index, base: ModelParams) -> RunPerturbation:
    """Counter-based draw of the run's (dt_factor, x_start_offset)."""
    x0 = base.traj.x_start
    if x0 == 0.0:
        raise ValueError("x_start must be nonzero so its third significant "
                         "figure is defined")
    gen = np.random.Generator(
        np.random.Philox(key=int(master_seed), counter=int(run_index) << 128))
    dt_factor = 0.95 + 0.1 * gen.random()
    counts = int(gen.integers(1, 6))
    sign = 1 if gen.integers(0, 2) else -1
    offset = sign * counts * _third_sig_fig_unit(x0)
    sub_seed = int(gen.integers(0, np.iinfo(np.int64).max))
    return RunPerturbation(int(run_index), dt_factor, offset, sub_seed)


def perturb_run(master_seed, run_index, base: ModelParams) -> ModelParams:
    """Model parameters with the run's perturbation applied."""
    pert = derive_perturbation(master_seed, run_index, base)
    return _apply_perturbation(base, pert)


def _apply_perturbation(base: ModelParams, pert: RunPerturbation) -> ModelParams:
    traj = replace(base.traj, x_start=base.traj.x_start + pert.x_start_offset)
    return replace(base, dt=base.dt * pert.dt_factor, traj=traj)


def _integrate_one_run(angles, params: ModelParams):
    traj = params.traj
    n = int(traj.duration / params.dt)
    bx, bz = _kernels.field_table(traj.x_start, traj.v, params.dt, n, traj.z0,
                                  params.loop.radius, params.loop.current,
                                  params.loop.center_x, params.loop.center_z)
    return _kernels.integrate_run(angles, bx, bz, params.dt, params.mu,
                                  params.inertia, params.damping)


def run_ensemble(params: ModelParams, n_angles, n_runs, master_seed,
                 workers=None) -> EnsembleResult:
    """Integrate every (angle, run) pair and collect the down-indicators.

    Bitwise deterministic for fixed (params, master_seed): trajectories
    are independent, results land at disjoint matrix slots, and no
    cross-trajectory floating-point reduction happens during the run.
    """
    angles = angle_grid(n_angles)
    n_runs = int(n_runs)
    if n_runs < 1:
        raise ValueError("n_runs must be positive")
    if workers is not None:
        _kernels.set_worker_threads(workers)
    outcomes = np.zeros((len(angles), n_runs), dtype=np.int8)
    unsettled = np.zeros((len(angles), n_runs), dtype=bool)
    perts = tuple(derive_perturbation(master_seed, r, params)
                  for r in range(n_runs))
    thresh = params.settle_threshold
    for r, pert in enumerate(perts):
        run_params = _apply_perturbation(params, pert)
        thf, yf = _integrate_one_run(angles, run_params)
        bad = ~(np.isfinite(thf) & np.isfinite(yf)
                & (thf >= 0.0) & (thf <= math.pi))
        if bad.any():
            raise EnsembleAbortError(int(np.argmax(bad)), r,
                                     "left the valid state space")
        outcomes[:, r] = thf > _HALF_PI
        unsettled[:, r] = np.abs(yf) > thresh
    return EnsembleResult(angles, outcomes, perts, unsettled, int(master_seed))


def estimate_pdown(result: EnsembleResult):
    """Per-angle mean down fraction over runs (the P-down estimator).

    Returns a Curve over the angle grid; values lie in [0, 1].
    """
    from .analysis import Curve

    if result.outcomes.size == 0:
        raise ValueError("empty ensemble result")
    return Curve(result.angles, result.outcomes.mean(axis=1))


@dataclass(frozen=True)
class CalibrationResult:
    best_damping: float
    best_inertia: float
    objective: float
    log: tuple  # (damping, inertia, objective) per evaluated point


def calibrate(params: ModelParams, damping_values, inertia_values, *,
              n_angles=101, n_runs=10, master_seed=1, smooth_half_width=75,
              full_grid_n=1001, workers=None) -> CalibrationResult:
    """Grid search over (damping, inertia) against the quantum reference.

    The objective is the RMSE of the smoothed down fraction against
    sin^2(theta/2) on a reduced ensemble; the smoothing window is scaled
    from its full-grid width to the reduced grid.  Returns the argmin and
    the full evaluation log.
    """
    from .analysis import convolve_nas, qm_pdown, rmse, scaled_half_width

    damping_values = [float(b) for b in np.atleast_1d(damping_values)]
    inertia_values = [float(i) for i in np.atleast_1d(inertia_values)]
    if not damping_values or not inertia_values:
        raise ValueError("empty calibration search space")
    w = scaled_half_width(smooth_half_width, n_angles, full_grid_n)
    log = []
    best = None
    for inertia in inertia_values:
        for damping in damping_values:
            candidate = replace(params, damping=damping, inertia=inertia)
            result = run_ensemble(candidate, n_angles, n_runs, master_seed,
                                  workers=workers)
            smoothed = convolve_nas(estimate_pdown(result), w)
            objective = rmse(smoothed, qm_pdown)
            log.append((damping, inertia, objective))
            if best is None or objective < best[2]:
                best = (damping, inertia, objective)
    return CalibrationResult(best[0], best[1], best[2], tuple(log))
