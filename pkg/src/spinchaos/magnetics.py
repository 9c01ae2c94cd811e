"""Magnetostatics of a single circular current loop in its meridian plane.

The loop lies in the plane z = center_z, is axisymmetric about the
vertical through its center, and is evaluated only in the (x, z) plane.
The closed form uses complete elliptic integrals computed by
arithmetic-geometric-mean iteration; the in-plane radial component is
mapped onto Bx with the sign of (x - center_x).

All functions are pure and safe to call concurrently.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from ._kernels import MU_0

__all__ = [
    "MU_0",
    "DomainError",
    "WireSingularityError",
    "LoopGeometry",
    "FieldSample",
    "TrajectorySpec",
    "elliptic_ke",
    "loop_field",
    "divergence_residual",
    "field_along_trajectory",
    "biot_savart_loop",
]


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class WireSingularityError(DomainError):
    """Field evaluation requested on (or too close to) the loop wire."""


@dataclass(frozen=True)
class LoopGeometry:
    """Circular current loop in the plane z = center_z."""

    radius: float
    current: float
    center_x: float = 0.0
    center_z: float = 0.0
    exclusion_factor: float = 1e-6  # wire guard radius, in units of radius

    def __post_init__(self):
        if not (self.radius > 0.0):
            raise ValueError("loop radius must be positive")
        if not math.isfinite(self.current) or self.current == 0.0:
            raise ValueError("loop current must be finite and nonzero")
        if not (0.0 < self.exclusion_factor < 1.0):
            raise ValueError("exclusion_factor must be in (0, 1)")

    def wire_distance(self, x, z):
        """In-plane distance from (x, z) to the nearer point of the wire."""
        rho = np.abs(np.asarray(x, dtype=float) - self.center_x)
        dz = np.asarray(z, dtype=float) - self.center_z
        return np.hypot(rho - self.radius, dz)


class FieldSample(NamedTuple):
    """Field components in tesla at a point of the x-z plane."""

    bx: float
    bz: float


@dataclass(frozen=True)
class TrajectorySpec:
    """Straight constant-speed transit along z = z0."""

    x_start: float
    x_end: float
    z0: float
    v: float

    def __post_init__(self):
        if not (self.x_start < self.x_end):
            raise ValueError("x_start must be smaller than x_end")
        if not (self.v > 0.0):
            raise ValueError("speed v must be positive")

    @property
    def duration(self):
        return (self.x_end - self.x_start) / self.v

    def position(self, t):
        return self.x_start + self.v * t


def elliptic_ke(m):
    """Complete elliptic integrals (K(m), E(m)) for modulus-squared m.

    Computed by AGM iteration; relative error is at machine-precision
    level over [0, 1).  Raises DomainError outside that interval.
    """
    m = float(m)
    if not (0.0 <= m < 1.0):
        raise DomainError(f"elliptic modulus-squared must be in [0, 1), got {m}")
    return _kernels.ellipke(m)


def loop_field(point, loop: LoopGeometry) -> FieldSample:
    """Exact (Bx, Bz) of the loop at an off-wire point of the x-z plane."""
    x, z = float(point[0]), float(point[1])
    dist = float(loop.wire_distance(x, z))
    if dist < loop.exclusion_factor * loop.radius:
        raise WireSingularityError(
            f"point ({x}, {z}) is within the wire exclusion zone "
            f"(distance {dist:.3e} m)"
        )
    bx, bz = _kernels.loop_field_values(x, z, loop.radius, loop.current,
                                        loop.center_x, loop.center_z)
    return FieldSample(float(bx), float(bz))


def loop_field_grid(xs, zs, loop: LoopGeometry):
    """Vectorised loop field on broadcastable coordinate arrays.

    Points inside the wire exclusion zone come back as NaN rather than
    raising, so that whole-grid sampling can proceed past the wire.
    """
    xs = np.asarray(xs, dtype=float)
    zs = np.asarray(zs, dtype=float)
    bx, bz = _kernels.loop_field_values(xs, zs, loop.radius, loop.current,
                                        loop.center_x, loop.center_z)
    bad = loop.wire_distance(xs, zs) < loop.exclusion_factor * loop.radius
    if np.any(bad):
        bx = np.where(bad, np.nan, bx)
        bz = np.where(bad, np.nan, bz)
    return bx, bz


def divergence_residual(loop: LoopGeometry, point, h) -> float:
    """|(1/rho) d(rho*B_rho)/drho + dBz/dz| by second-order central differences.

    The analytic field is divergence-free, so the residual measures pure
    discretisation error and must shrink as O(h^2).
    """
    x, z = float(point[0]), float(point[1])
    h = float(h)
    if not (h > 0.0):
        raise DomainError("stencil spacing h must be positive")
    rho = abs(x - loop.center_x)
    if rho <= h:
        raise DomainError("need rho > h for the radial stencil")

    def b_at(rho_val, z_val):
        return loop_field((loop.center_x + rho_val, z_val), loop)

    b_rp = b_at(rho + h, z)
    b_rm = b_at(rho - h, z)
    b_zp = b_at(rho, z + h)
    b_zm = b_at(rho, z - h)
    radial = ((rho + h) * b_rp.bx - (rho - h) * b_rm.bx) / (2.0 * h * rho)
    axial = (b_zp.bz - b_zm.bz) / (2.0 * h)
    return abs(radial + axial)


def field_along_trajectory(traj: TrajectorySpec, loop: LoopGeometry, t) -> FieldSample:
    """Field seen at time t by a particle moving along the trajectory."""
    t = float(t)
    duration = traj.duration
    if t < 0.0 or t > duration * (1.0 + 1e-12):
        raise DomainError(f"t = {t} outside the transit interval [0, {duration}]")
    return loop_field((traj.position(t), traj.z0), loop)


def max_field_along_trajectory(traj: TrajectorySpec, loop: LoopGeometry,
                               n_samples: int = 4097) -> float:
    """Max |B| over the transit, sampled on a fixed uniform grid."""
    xs = np.linspace(traj.x_start, traj.x_end, n_samples)
    bx, bz = loop_field_grid(xs, np.full(n_samples, traj.z0), loop)
    return float(np.max(np.hypot(bx, bz)))


def biot_savart_loop(point, loop: LoopGeometry, n_segments: int = 100_000) -> FieldSample:
    """Brute-force segment-sum field of the loop; the oracle for loop_field.

    Midpoint rule over n_segments straight elements of the wire.  Slower
    but independent of the elliptic-integral closed form.
    """
    x, z = float(point[0]), float(point[1])
    two_pi = 2.0 * math.pi
    phi = (np.arange(n_segments) + 0.5) * (two_pi / n_segments)
    dphi = two_pi / n_segments
    r = loop.radius
    # wire sample points and tangential elements, loop in plane z = center_z
    wx = loop.center_x + r * np.cos(phi)
    wy = r * np.sin(phi)
    dlx = -r * np.sin(phi) * dphi
    dly = r * np.cos(phi) * dphi
    rx = x - wx
    ry = 0.0 - wy
    rz = z - loop.center_z
    r3 = (rx * rx + ry * ry + rz * rz) ** 1.5
    pref = MU_0 * loop.current / (4.0 * math.pi)
    # dl x r with dl = (dlx, dly, 0)
    bx = pref * np.sum(dly * rz / r3)
    bz = pref * np.sum((dlx * ry - dly * rx) / r3)
    return FieldSample(float(bx), float(bz))
