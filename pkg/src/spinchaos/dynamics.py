"""Torque law, damped driven ODE system, and the velocity-first integrator.

The moment's polar angle theta lives in [0, pi].  The torque has zeros at
0, pi/2 and pi; the Bz term attracts both poles while the Bx term attracts
pi/2, which is what lets a transit through the loop field scramble the
final state.  Reflecting boundaries keep theta in range: crossing a pole
mirrors the angle and negates the angular rate.
"""

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from .magnetics import (DomainError, FieldSample, LoopGeometry,
                        TrajectorySpec, field_along_trajectory)

__all__ = [
    "HBAR",
    "ModelParams",
    "SpinState",
    "Outcome",
    "spin_torque",
    "rhs",
    "euler_cromer_step",
    "forward_euler_step",
    "qm_timescale",
    "simulate_trajectory",
    "trajectory_path",
    "oscillation_energy",
    "pendulum_rhs",
    "integrate_pendulum",
]

HBAR = 1.054571817e-34  # J*s

_HALF_PI = 0.5 * math.pi
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ModelParams:
    """Physical and numerical constants of one simulation."""

    mu: float               # magnetic moment magnitude, J/T
    inertia: float          # kg*m^2
    damping: float          # kg*m^2/s
    dt: float               # integration step, s
    loop: LoopGeometry
    traj: TrajectorySpec
    b_ref: float            # max |B| along the trajectory, T
    settle_rate_factor: float = 1e-3
    hbar: float = HBAR

    def __post_init__(self):
        if self.mu <= 0 or self.inertia <= 0 or self.dt <= 0:
            raise ValueError("mu, inertia and dt must be positive")
        if self.damping < 0:
            raise ValueError("damping must be nonnegative")
        if self.b_ref <= 0:
            raise ValueError("b_ref must be positive")

    @property
    def v(self):
        return self.traj.v

    @property
    def n_steps(self):
        return int(self.traj.duration / self.dt)

    @property
    def settle_threshold(self):
        """Angular-rate scale below which the final state counts as settled."""
        return self.settle_rate_factor * math.sqrt(
            self.mu * self.b_ref / self.inertia)


class SpinState(NamedTuple):
    """Instantaneous (theta, theta_dot, t) of one magnetic moment."""

    theta: float
    y: float
    t: float


@dataclass(frozen=True)
class Outcome:
    """Binary classification of one integrated trajectory."""

    down_indicator: int
    final_theta: float
    final_y: float
    unsettled: bool = False

    def __post_init__(self):
        if self.down_indicator not in (0, 1):
            raise ValueError("down_indicator must be 0 or 1")


def _check_theta(theta):
    if not (0.0 <= theta <= math.pi):
        raise DomainError(f"theta = {theta} outside [0, pi]")


def spin_torque(theta, field: FieldSample, mu) -> float:
    """Net torque on the moment: s(theta) * mu * (Bx - Bz) * sin^2(2 theta).

    s is +1 below pi/2 and -1 above, so that under Bz > 0 both poles
    attract and pi/2 repels, while Bx > 0 attracts pi/2 from both sides.
    The branch join at pi/2 is continuous because sin^2(2 theta) vanishes
    there.
    """
    theta = float(theta)
    _check_theta(theta)
    if theta == 0.0 or theta == _HALF_PI or theta == math.pi:
        # exact zeros of sin^2(2 theta); sin(2*pi) rounds to -2.4e-16
        return 0.0
    s = 1.0 if theta < _HALF_PI else -1.0
    st = math.sin(theta + theta)
    return s * mu * (field.bx - field.bz) * st * st


def rhs(state: SpinState, params: ModelParams):
    """(dtheta/dt, dy/dt) of the first-order system at the given state."""
    fld = field_along_trajectory(params.traj, params.loop, state.t)
    torque = spin_torque(state.theta, fld, params.mu)
    return state.y, (torque - params.damping * state.y) * (1.0 / params.inertia)


def _reflect(theta, y):
    for _ in range(2):
        if theta < 0.0:
            theta, y = -theta, -y
        elif theta > math.pi:
            theta, y = _TWO_PI - theta, -y
    return theta, y


def euler_cromer_step(state: SpinState, params: ModelParams) -> SpinState:
    """One velocity-first step: update y, then theta with the new y."""
    _, dy_dt = rhs(state, params)
    y1 = state.y + dy_dt * params.dt
    theta1 = state.theta + y1 * params.dt
    theta1, y1 = _reflect(theta1, y1)
    return SpinState(theta1, y1, state.t + params.dt)


def forward_euler_step(state: SpinState, params: ModelParams) -> SpinState:
    """Plain explicit step (old y moves theta); pumps energy into
    oscillations, kept only as a negative control for the integrator."""
    dtheta_dt, dy_dt = rhs(state, params)
    theta1 = state.theta + dtheta_dt * params.dt
    y1 = state.y + dy_dt * params.dt
    theta1, y1 = _reflect(theta1, y1)
    return SpinState(theta1, y1, state.t + params.dt)


def qm_timescale(mu, b) -> float:
    """hbar / (2 dE) with dE = 2 mu B, the up/down energy splitting."""
    if not (mu > 0.0) or not (b > 0.0):
        raise DomainError("qm_timescale needs mu > 0 and B > 0")
    return HBAR / (4.0 * mu * b)


def _field_tables(params: ModelParams, dt=None, x_start=None):
    dt = params.dt if dt is None else dt
    traj = params.traj
    x0 = traj.x_start if x_start is None else x_start
    n = int((traj.x_end - x0) / traj.v / dt)
    bx, bz = _kernels.field_table(x0, traj.v, dt, n, traj.z0,
                                  params.loop.radius, params.loop.current,
                                  params.loop.center_x, params.loop.center_z)
    return bx, bz, n


def simulate_trajectory(theta_i, params: ModelParams) -> Outcome:
    """Integrate one moment through the transit and classify the result.

    Deterministic pure function: identical inputs give bitwise-identical
    outcomes.  A final angular rate above the settle threshold flags the
    outcome as unsettled (kept for audit, still classified by final theta).
    """
    theta_i = float(theta_i)
    _check_theta(theta_i)
    if theta_i == _HALF_PI:
        raise DomainError("theta_i = pi/2 sits on the unstable branch point")
    bx, bz, _ = _field_tables(params)
    thf, yf = _kernels.integrate_run(np.array([theta_i]), bx, bz, params.dt,
                                     params.mu, params.inertia, params.damping)
    theta_f, y_f = float(thf[0]), float(yf[0])
    if not (math.isfinite(theta_f) and math.isfinite(y_f)):
        raise DomainError(f"trajectory from theta_i = {theta_i} diverged")
    return Outcome(
        down_indicator=1 if theta_f > _HALF_PI else 0,
        final_theta=theta_f,
        final_y=y_f,
        unsettled=abs(y_f) > params.settle_threshold,
    )


def trajectory_path(theta_i, params: ModelParams, stride=1):
    """Sampled (t, theta, y, Bx, Bz) along one trajectory, every ``stride`` steps."""
    theta_i = float(theta_i)
    _check_theta(theta_i)
    bx, bz, n = _field_tables(params)
    thetas, ys, _, _ = _kernels.integrate_path(
        theta_i, bx, bz, params.dt, params.mu, params.inertia,
        params.damping, stride)
    idx = np.arange(len(thetas)) * stride
    t = idx * params.dt
    return t, thetas, ys, bx[idx], bz[idx]


def oscillation_energy(theta, y, mu, bz, inertia):
    """Kinetic plus potential energy in a static field (Bx = 0).

    The potential is the integral of mu*Bz*sin^2(2u) from 0 to theta,
    mirrored about pi/2 to match the two-branch torque.
    """
    theta = np.asarray(theta, dtype=float)
    th = np.where(theta <= _HALF_PI, theta, math.pi - theta)
    potential = mu * bz * (0.5 * th - np.sin(4.0 * th) / 8.0)
    return 0.5 * inertia * np.asarray(y, dtype=float) ** 2 + potential


# ---------------------------------------------------------------------------
# driven-damped pendulum reference model (validation target only)
# ---------------------------------------------------------------------------

def pendulum_rhs(theta, y, t, a_damp, b_grav, c_drive,
                 drive: Callable[[float], float]):
    """(dtheta/dt, dy/dt) = (y, -a*y - b*sin(theta) + c*F(t))."""
    return y, -a_damp * y - b_grav * math.sin(theta) + c_drive * drive(t)


def integrate_pendulum(theta0, y0, dt, n_steps, a_damp, b_grav, c_drive,
                       drive: Callable[[float], float], record_every=1):
    """Velocity-first integration of the pendulum; theta is unwrapped.

    Returns (t, theta, y) arrays sampled every ``record_every`` steps.
    """
    n_rec = n_steps // record_every + 1
    ts = np.empty(n_rec)
    thetas = np.empty(n_rec)
    ys = np.empty(n_rec)
    th, y, t = float(theta0), float(y0), 0.0
    j = 0
    for k in range(n_steps):
        if k % record_every == 0:
            ts[j], thetas[j], ys[j] = t, th, y
            j += 1
        _, dy = pendulum_rhs(th, y, t, a_damp, b_grav, c_drive, drive)
        y += dt * dy
        th += dt * y
        t = (k + 1) * dt
    return ts[:j], thetas[:j], ys[:j]
