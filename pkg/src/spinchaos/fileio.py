"""Frozen on-disk formats: CSV schemas, run manifests, and SVG figures.

Column order is part of the contract.  Floats are written with repr so
they round-trip exactly; every writer is byte-deterministic for fixed
inputs (no timestamps or absolute paths inside digested content).
"""

import hashlib
import json
import math

import numpy as np

from .analysis import Curve

__all__ = [
    "write_field_csv",
    "write_outcomes_csv",
    "read_outcomes_csv",
    "write_curve_csv",
    "read_curve_csv",
    "write_trajectory_csv",
    "write_dimension_report",
    "sha256_of",
    "write_manifest",
    "read_manifest",
    "svg_plot",
]


def _f(v):
    return repr(float(v))


def sha256_of(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_field_csv(path, xs, zs, bx, bz):
    """Field map rows ``x,z,Bx,Bz``; NaN marks wire-excluded samples."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,z,Bx,Bz\n")
        for row in zip(np.ravel(xs), np.ravel(zs), np.ravel(bx), np.ravel(bz)):
            fh.write(",".join(_f(v) for v in row) + "\n")


def write_outcomes_csv(path, result):
    """Outcome matrix as ``theta_index,run_index,down,unsettled`` rows."""
    out = result.outcomes
    uns = result.unsettled
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("theta_index,run_index,down,unsettled\n")
        for i in range(out.shape[0]):
            for r in range(out.shape[1]):
                fh.write(f"{i},{r},{int(out[i, r])},{int(uns[i, r])}\n")


def read_outcomes_csv(path):
    """Outcome and unsettled matrices from an outcome CSV."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    if data.size == 0:
        raise ValueError(f"empty outcome file {path}")
    n_angles = int(data[:, 0].max()) + 1
    n_runs = int(data[:, 1].max()) + 1
    if len(data) != n_angles * n_runs:
        raise ValueError(f"outcome file {path} is not a full grid")
    outcomes = np.zeros((n_angles, n_runs), dtype=np.int8)
    unsettled = np.zeros((n_angles, n_runs), dtype=bool)
    outcomes[data[:, 0], data[:, 1]] = data[:, 2].astype(np.int8)
    unsettled[data[:, 0], data[:, 1]] = data[:, 3] != 0
    return outcomes, unsettled


def write_curve_csv(path, curve: Curve):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("theta,value\n")
        for x, y in zip(curve.xs, curve.ys):
            fh.write(f"{_f(x)},{_f(y)}\n")


def read_curve_csv(path) -> Curve:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        raise ValueError(f"empty curve file {path}")
    return Curve(data[:, 0], data[:, 1])


def write_trajectory_csv(path, t, theta, y, bx, bz):
    """Sampled single-trajectory path as ``t,theta,y,Bx,Bz`` rows."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,theta,y,Bx,Bz\n")
        for row in zip(t, theta, y, bx, bz):
            fh.write(",".join(_f(v) for v in row) + "\n")


def write_dimension_report(path, estimates):
    """Dimension fits as plain-text tables; estimates is {label: estimate}."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for label, est in estimates.items():
            fh.write(f"[{label}]\n")
            fh.write(f"d_f = {_f(est.d_f)}\n")
            fh.write(f"fit_residual = {_f(est.fit_residual)}\n")
            fh.write("L,k,ln_L,ln_k\n")
            for L, k in zip(est.step_lengths, est.counts):
                fh.write(f"{_f(L)},{_f(k)},{_f(math.log(L))},{_f(math.log(k))}\n")
            fh.write("\n")


def write_manifest(path, manifest):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# deterministic SVG plotting
# ---------------------------------------------------------------------------

_SVG_W, _SVG_H = 720, 520
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 24, 40, 48
_COLORS = ("#2ca02c", "#1f77b4", "#d62728", "#9467bd")
_X_TICKS = ((0.0, "0"), (math.pi / 4, "&#960;/4"), (math.pi / 2, "&#960;/2"),
            (3 * math.pi / 4, "3&#960;/4"), (math.pi, "&#960;"))


def _sx(x, x0, x1):
    w = _SVG_W - _MARGIN_L - _MARGIN_R
    return _MARGIN_L + (x - x0) / (x1 - x0) * w


def _sy(y, y0, y1):
    h = _SVG_H - _MARGIN_T - _MARGIN_B
    return _SVG_H - _MARGIN_B - (y - y0) / (y1 - y0) * h


def svg_plot(series, title):
    """Self-contained SVG text: one polyline per (label, xs, ys) series.

    Axes span [0, pi] in angle and [0, 1] in probability.  Byte
    deterministic: coordinates are formatted to fixed precision and no
    metadata or timestamps are embedded.
    """
    x0, x1, y0, y1 = 0.0, math.pi, 0.0, 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" '
        f'height="{_SVG_H}" viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<text x="{_SVG_W // 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
    ]
    ax_l, ax_r = _MARGIN_L, _SVG_W - _MARGIN_R
    ax_t, ax_b = _MARGIN_T, _SVG_H - _MARGIN_B
    parts.append(f'<rect x="{ax_l}" y="{ax_t}" width="{ax_r - ax_l}" '
                 f'height="{ax_b - ax_t}" fill="none" stroke="black"/>')
    for xv, label in _X_TICKS:
        px = _sx(xv, x0, x1)
        parts.append(f'<line x1="{px:.2f}" y1="{ax_b}" x2="{px:.2f}" '
                     f'y2="{ax_b + 5}" stroke="black"/>')
        parts.append(f'<text x="{px:.2f}" y="{ax_b + 20}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="12">{label}</text>')
    for yv in (0.0, 0.25, 0.5, 0.75, 1.0):
        py = _sy(yv, y0, y1)
        parts.append(f'<line x1="{ax_l - 5}" y1="{py:.2f}" x2="{ax_l}" '
                     f'y2="{py:.2f}" stroke="black"/>')
        parts.append(f'<text x="{ax_l - 9}" y="{py + 4:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="12">{yv:g}</text>')
    parts.append(f'<text x="{(ax_l + ax_r) // 2}" y="{_SVG_H - 10}" '
                 f'text-anchor="middle" font-family="sans-serif" '
                 f'font-size="13">initial angle (rad)</text>')
    parts.append(f'<text x="16" y="{(ax_t + ax_b) // 2}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13" '
                 f'transform="rotate(-90 16 {(ax_t + ax_b) // 2})">'
                 f'down fraction</text>')
    for idx, (label, xs, ys) in enumerate(series):
        color = _COLORS[idx % len(_COLORS)]
        coords = " ".join(f"{_sx(float(x), x0, x1):.2f},{_sy(float(y), y0, y1):.2f}"
                          for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{coords}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        ly = ax_t + 18 + 18 * idx
        parts.append(f'<line x1="{ax_l + 10}" y1="{ly}" x2="{ax_l + 34}" '
                     f'y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{ax_l + 40}" y="{ly + 4}" '
                     f'font-family="sans-serif" font-size="12">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
