"""Plain-text configuration: ``key = value`` lines, ``#`` comments, SI units.

The shipped defaults are the calibrated operating point: the loop current
sets the field scale (max |B| along the transit is about 0.5 uT), and
(damping, inertia) were fitted by the calibration search so that the
smoothed ensemble statistics reproduce the quantum reference curve.  The
integration step is specified as a ratio dt_ratio of the quantum time
scale hbar/(2 dE); configs with dt_ratio > 0.01 are rejected at load.
"""

import math
from dataclasses import dataclass, fields

from .dynamics import HBAR, ModelParams, qm_timescale
from .magnetics import (LoopGeometry, TrajectorySpec,
                        max_field_along_trajectory)

__all__ = [
    "ConfigError",
    "Config",
    "DEFAULTS",
    "FULL_GRID_ANGLES",
    "FULL_GRID_RUNS",
    "parse_config",
    "load_config",
    "render_config",
    "build_model_params",
]

# the full experiment size; the shipped default is the reduced grid
FULL_GRID_ANGLES = 1001
FULL_GRID_RUNS = 100

# maximum allowed dt as a fraction of the quantum time scale
DT_RATIO_LIMIT = 0.01

DEFAULTS = {
    "mu": 9.274e-24,              # J/T, Bohr magneton (silver atom moment)
    "inertia": 4.64e-41,          # kg*m^2, calibrated
    "damping": 1.30e-36,          # kg*m^2/s, calibrated
    "v": 500.0,                   # m/s
    "dt_ratio": 0.001,            # dt = dt_ratio * hbar/(4 mu B_ref)
    "loop_radius": 0.05,          # m
    "loop_current": 0.1125,       # A, sets max |B| on the transit to ~0.5 uT
    "loop_center_x": 0.0,         # m
    "loop_center_z": 0.0,         # m
    "z0": 0.05,                   # m, transit height
    "x_start": -0.2,              # m
    "x_end": 0.2,                 # m
    "n_angles": 101,              # odd; 1001 for the full experiment
    "n_runs": 20,                 # 100 for the full experiment
    "master_seed": 20260810,
    "smooth_half_width": 75,      # neighbours per side on the full grid
    "settle_rate_factor": 1e-3,
    "wire_exclusion_factor": 1e-6,
    "ruler_count": 12,
    "ruler_max_frac": 0.5,
    "ruler_min_frac": 1.0 / 2048.0,
    "output_dir": "out",
}

_INT_KEYS = {"n_angles", "n_runs", "master_seed", "smooth_half_width",
             "ruler_count"}
_STR_KEYS = {"output_dir"}


class ConfigError(ValueError):
    """A configuration file failed to parse or validate."""


@dataclass(frozen=True)
class Config:
    mu: float
    inertia: float
    damping: float
    v: float
    dt_ratio: float
    loop_radius: float
    loop_current: float
    loop_center_x: float
    loop_center_z: float
    z0: float
    x_start: float
    x_end: float
    n_angles: int
    n_runs: int
    master_seed: int
    smooth_half_width: int
    settle_rate_factor: float
    wire_exclusion_factor: float
    ruler_count: int
    ruler_max_frac: float
    ruler_min_frac: float
    output_dir: str

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _coerce(key, raw):
    if key in _STR_KEYS:
        return raw
    try:
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"config key '{key}': cannot parse value {raw!r}") from None


def parse_config(text) -> Config:
    """Parse and validate ``key = value`` lines; unknown keys are rejected.

    An empty file yields the shipped calibrated defaults.
    """
    values = dict(DEFAULTS)
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown config key '{key}'")
        values[key] = _coerce(key, raw)
    config = Config(**values)
    _validate(config)
    return config


def load_config(path) -> Config:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def render_config(config: Config) -> str:
    """Config as the plain-text format it was parsed from."""
    lines = [f"{key} = {getattr(config, key)}" if key in _STR_KEYS
             else f"{key} = {_fmt(getattr(config, key))}"
             for key in DEFAULTS]
    return "\n".join(lines) + "\n"


def _fmt(v):
    return repr(int(v)) if isinstance(v, int) else repr(float(v))


def _validate(c: Config):
    def positive(key):
        if not (getattr(c, key) > 0):
            raise ConfigError(f"config key '{key}' must be positive")

    for key in ("mu", "inertia", "v", "loop_radius", "settle_rate_factor",
                "wire_exclusion_factor", "ruler_max_frac", "ruler_min_frac"):
        positive(key)
    if c.damping < 0:
        raise ConfigError("config key 'damping' must be nonnegative")
    if not math.isfinite(c.loop_current) or c.loop_current == 0.0:
        raise ConfigError("config key 'loop_current' must be finite and nonzero")
    if not (0.0 < c.dt_ratio <= DT_RATIO_LIMIT):
        raise ConfigError(
            f"config key 'dt_ratio' violates the time-scale guard: need "
            f"0 < dt_ratio <= {DT_RATIO_LIMIT}, got {c.dt_ratio} "
            f"(the step must sit far below the quantum time scale)")
    if c.n_angles < 3 or c.n_angles % 2 == 0:
        raise ConfigError(
            f"config key 'n_angles' must be odd and >= 3 to keep pi/2 off "
            f"the grid, got {c.n_angles}")
    if c.n_runs < 1:
        raise ConfigError("config key 'n_runs' must be positive")
    if c.smooth_half_width < 0:
        raise ConfigError("config key 'smooth_half_width' must be nonnegative")
    if c.ruler_count < 3:
        raise ConfigError("config key 'ruler_count' must be at least 3")
    if not (c.ruler_min_frac < c.ruler_max_frac < 1.0):
        raise ConfigError("config keys 'ruler_min_frac' < 'ruler_max_frac' < 1 required")
    if not (c.x_start < c.x_end):
        raise ConfigError("config key 'x_start' must be smaller than 'x_end'")
    if c.x_start == 0.0:
        raise ConfigError("config key 'x_start' must be nonzero (its third "
                          "significant figure is perturbed between runs)")
    # the transit must clear the wire; the distance over the segment is
    # minimized at an endpoint or where the line crosses x = cx +- R
    loop = _loop_from(c)
    probes = [c.x_start, c.x_end,
              min(max(c.loop_center_x - c.loop_radius, c.x_start), c.x_end),
              min(max(c.loop_center_x + c.loop_radius, c.x_start), c.x_end)]
    d_near = min(float(loop.wire_distance(x, c.z0)) for x in probes)
    if d_near < c.wire_exclusion_factor * c.loop_radius:
        raise ConfigError("config keys 'z0'/'x_start'/'x_end': the transit "
                          "line passes through the wire exclusion zone")


def _loop_from(c: Config) -> LoopGeometry:
    return LoopGeometry(radius=c.loop_radius, current=c.loop_current,
                        center_x=c.loop_center_x, center_z=c.loop_center_z,
                        exclusion_factor=c.wire_exclusion_factor)


def build_model_params(config: Config) -> ModelParams:
    """Assemble ModelParams; computes B_ref and the absolute time step."""
    loop = _loop_from(config)
    traj = TrajectorySpec(x_start=config.x_start, x_end=config.x_end,
                          z0=config.z0, v=config.v)
    b_ref = max_field_along_trajectory(traj, loop)
    dt = config.dt_ratio * qm_timescale(config.mu, b_ref)
    return ModelParams(mu=config.mu, inertia=config.inertia,
                       damping=config.damping, dt=dt, loop=loop, traj=traj,
                       b_ref=b_ref,
                       settle_rate_factor=config.settle_rate_factor)
