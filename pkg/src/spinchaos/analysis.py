"""Post-processing: smoothing, the quantum reference curve, error metrics,
and divider-method fractal dimension of result curves.

The smoothing is a square-window moving average over nearest neighbours
in angle space.  Before convolving, the curve is extended with zeros
below the low end and ones above the high end: the physical boundary
values of the down fraction at the two poles.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .magnetics import DomainError

__all__ = [
    "Curve",
    "DimensionEstimate",
    "qm_pdown",
    "scaled_half_width",
    "convolve_nas",
    "rmse",
    "fractal_dimension",
    "default_step_lengths",
    "sensitivity_pairs",
    "FlipReport",
    "koch_curve",
]


@dataclass(frozen=True)
class Curve:
    """Sampled curve y(x) with strictly increasing abscissa."""

    xs: np.ndarray
    ys: np.ndarray
    uniform_spacing: bool = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if xs.ndim != 1 or xs.shape != ys.shape:
            raise ValueError("xs and ys must be 1-d arrays of equal length")
        if len(xs) < 2:
            raise ValueError("a curve needs at least two points")
        dx = np.diff(xs)
        if not (dx > 0).all():
            raise ValueError("xs must be strictly increasing")
        if self.uniform_spacing is None:
            uniform = bool(np.allclose(dx, dx[0], rtol=1e-9, atol=0.0))
            object.__setattr__(self, "uniform_spacing", uniform)

    def __len__(self):
        return len(self.xs)


@dataclass(frozen=True)
class DimensionEstimate:
    """Divider-method regression output."""

    d_f: float
    step_lengths: np.ndarray
    counts: np.ndarray
    fit_residual: float


def qm_pdown(theta):
    """Quantum spin-down probability sin^2(theta/2) for theta in [0, pi]."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0.0) or np.any(theta > math.pi):
        raise DomainError("theta outside [0, pi]")
    out = np.sin(theta / 2.0) ** 2
    return float(out) if out.ndim == 0 else out


def scaled_half_width(w_full, n_angles, full_grid_n=1001):
    """Smoothing half-width rescaled from the full grid to an n-point grid.

    Keeps the angular width of the window fixed, so reduced grids are
    smoothed over the same theta span as the full one.
    """
    if n_angles == full_grid_n:
        return int(w_full)
    return max(1, round(w_full * n_angles / full_grid_n))


def convolve_nas(curve: Curve, half_width) -> Curve:
    """Square-window moving average over 2*half_width + 1 grid neighbours.

    The input is padded with half_width zeros below and ones above before
    convolving, so the output has the same length and abscissa.
    half_width = 0 returns the curve unchanged.
    """
    w = int(half_width)
    if w < 0:
        raise ValueError("half_width must be nonnegative")
    if not curve.uniform_spacing:
        raise ValueError("nearest-neighbour smoothing needs a uniform grid")
    if w == 0:
        return Curve(curve.xs.copy(), curve.ys.copy())
    padded = np.concatenate([np.zeros(w), curve.ys, np.ones(w)])
    kernel = np.full(2 * w + 1, 1.0 / (2 * w + 1))
    return Curve(curve.xs.copy(), np.convolve(padded, kernel, mode="valid"))


def rmse(curve: Curve, reference) -> float:
    """Root-mean-square difference against reference(x) at the curve's grid."""
    ref = reference(curve.xs) if callable(reference) else np.asarray(reference)
    return float(np.sqrt(np.mean((curve.ys - ref) ** 2)))


def default_step_lengths(extent, count=12, max_frac=0.5, min_frac=1.0 / 2048.0):
    """Geometric ruler schedule between fractions of the curve extent."""
    return np.geomspace(extent * max_frac, extent * min_frac, int(count))


def _normalize_to_unit_square(x, y):
    xr = x.max() - x.min()
    yr = y.max() - y.min()
    xn = (x - x.min()) / xr if xr > 0 else np.zeros_like(x)
    yn = (y - y.min()) / yr if yr > 0 else np.zeros_like(y)
    return np.column_stack([xn, yn])


def _divider_count(points, ruler):
    """Steps of length ``ruler`` needed to walk the polyline end to end.

    Classic divider stepping: from the current anchor, advance to the
    first point along the curve at straight-line distance ``ruler``
    (linear interpolation between samples); the leftover arc shorter than
    one ruler counts fractionally.
    """
    n = len(points)
    count = 0.0
    ax, ay = points[0]
    seg = 0
    t_lo = 0.0
    while True:
        hit = False
        j = seg
        lo = t_lo
        while j < n - 1:
            sx, sy = points[j]
            dx = points[j + 1, 0] - sx
            dy = points[j + 1, 1] - sy
            fx = sx - ax
            fy = sy - ay
            a = dx * dx + dy * dy
            b = 2.0 * (fx * dx + fy * dy)
            c = fx * fx + fy * fy - ruler * ruler
            disc = b * b - 4.0 * a * c
            if a > 0.0 and disc >= 0.0:
                root = math.sqrt(disc)
                for t in ((-b - root) / (2.0 * a), (-b + root) / (2.0 * a)):
                    if lo + 1e-15 < t <= 1.0:
                        ax, ay = sx + t * dx, sy + t * dy
                        seg, t_lo = j, t
                        count += 1.0
                        hit = True
                        break
            if hit:
                break
            j += 1
            lo = 0.0
        if not hit:
            ex, ey = points[-1]
            return count + math.hypot(ex - ax, ey - ay) / ruler


def fractal_dimension(curve, step_lengths=None, *, ruler_count=12,
                      max_frac=0.5, min_frac=1.0 / 2048.0) -> DimensionEstimate:
    """Divider (ruler) dimension of a curve, normalized to the unit square.

    Accepts a Curve or a plain (n, 2) point array (the Koch validation
    curve folds back in x, which a Curve cannot represent).  Walks the
    curve with each ruler length L, counts steps k(L), and fits
    d_f = -d ln k / d ln L by least squares.  Rulers default to a
    geometric schedule between fractions of the normalized end-to-end
    extent; they must be positive and smaller than that extent, and at
    least three are needed for the fit.
    """
    if isinstance(curve, Curve):
        x, y = curve.xs, curve.ys
    else:
        pts = np.asarray(curve, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("expected a Curve or an (n, 2) point array")
        x, y = pts[:, 0], pts[:, 1]
    if len(x) < 2:
        raise ValueError("need at least two points")
    points = _normalize_to_unit_square(x, y)
    extent = float(math.hypot(*(points[-1] - points[0])))
    if step_lengths is None:
        step_lengths = default_step_lengths(extent, ruler_count, max_frac,
                                            min_frac)
    rulers = np.asarray(step_lengths, dtype=float)
    if np.any(rulers <= 0.0):
        raise DomainError("step lengths must be positive")
    if np.any(rulers >= extent):
        raise DomainError("step lengths must be smaller than the curve extent")
    if len(rulers) < 3:
        raise DomainError("need at least three step lengths for the fit")
    counts = np.array([_divider_count(points, L) for L in rulers])
    ln_l = np.log(rulers)
    ln_k = np.log(counts)
    slope, intercept = np.polyfit(ln_l, ln_k, 1)
    resid = float(np.sqrt(np.mean((ln_k - (slope * ln_l + intercept)) ** 2)))
    return DimensionEstimate(float(-slope), rulers, counts, resid)


@dataclass(frozen=True)
class FlipReport:
    """Adjacent-angle outcome flips of an ensemble, per run."""

    pairs: tuple          # (run_index, angle_index) with outcome[i] != outcome[i+1]
    count: int
    density: float        # count / ((n_angles - 1) * n_runs)


def sensitivity_pairs(result) -> FlipReport:
    """All adjacent-angle outcome flips, the chaos signature of the model."""
    out = result.outcomes
    n_angles, n_runs = out.shape
    if n_angles < 2:
        raise ValueError("need at least two angles")
    diff = out[:-1, :] != out[1:, :]
    runs, idx = np.nonzero(diff.T)
    pairs = tuple(zip(runs.tolist(), idx.tolist()))
    count = len(pairs)
    return FlipReport(pairs, count, count / ((n_angles - 1) * n_runs))


def koch_curve(depth) -> np.ndarray:
    """Koch curve on [0, 1] as an (n, 2) array; exact dimension ln 4 / ln 3.

    Validation target for the divider estimator.
    """
    pts = np.array([[0.0, 0.0], [1.0, 0.0]])
    rot = np.array([[0.5, -math.sqrt(3.0) / 2.0],
                    [math.sqrt(3.0) / 2.0, 0.5]])
    for _ in range(int(depth)):
        a = pts[:-1]
        b = pts[1:]
        step = (b - a) / 3.0
        p1 = a + step
        p3 = a + 2.0 * step
        p2 = p1 + step @ rot.T
        out = np.empty((4 * len(a) + 1, 2))
        out[0:-1:4] = a
        out[1::4] = p1
        out[2::4] = p2
        out[3::4] = p3
        out[-1] = pts[-1]
        pts = out
    return pts
