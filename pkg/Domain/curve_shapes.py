# Domain/curve_shapes.py
# Curve factories used by experiment configs; every shape is sampled on its exact form.
from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from Domain.curve import ClosedCurve, resample_arclength, sample_parametric
from Shared.errors import DegenerateCurveError


def circle(
    R: float, n: int, center: Tuple[float, float] = (0.0, 0.0), clockwise: bool = False
) -> ClosedCurve:
    if not R > 0:
        raise DegenerateCurveError(f"circle radius must be positive, got {R}")
    theta = 2.0 * math.pi * np.arange(n) / n
    if clockwise:
        theta = -theta
    pts = np.column_stack([center[0] + R * np.cos(theta), center[1] + R * np.sin(theta)])
    return ClosedCurve(points=pts, arclength=True)


def ellipse(a: float, b: float, n: int) -> ClosedCurve:
    """Counter-clockwise, first sample at (a, 0)."""
    if not (a > 0 and b > 0):
        raise DegenerateCurveError(f"ellipse semi-axes must be positive, got {a}, {b}")

    def P(s: np.ndarray) -> np.ndarray:
        th = 2.0 * math.pi * s
        return np.column_stack([a * np.cos(th), b * np.sin(th)])

    return sample_parametric(P, 1.0, n)


def rounded_rectangle(w: float, h: float, r: float, n: int) -> ClosedCurve:
    """Axis-aligned w x h rectangle centered at 0 with quarter-circle corners of radius r."""
    if not (w > 0 and h > 0 and 0 < r <= 0.5 * min(w, h)):
        raise DegenerateCurveError(f"invalid rounded rectangle w={w}, h={h}, r={r}")

    hw, hh = 0.5 * w, 0.5 * h
    arc = 0.5 * math.pi * r
    # (kind, length, data): lines carry (start, direction); arcs carry (center, start angle)
    pieces = [
        ("line", hh - r, ((hw, 0.0), (0.0, 1.0))),
        ("arc", arc, ((hw - r, hh - r), 0.0)),
        ("line", w - 2 * r, ((hw - r, hh), (-1.0, 0.0))),
        ("arc", arc, ((-hw + r, hh - r), 0.5 * math.pi)),
        ("line", h - 2 * r, ((-hw, hh - r), (0.0, -1.0))),
        ("arc", arc, ((-hw + r, -hh + r), math.pi)),
        ("line", w - 2 * r, ((-hw + r, -hh), (1.0, 0.0))),
        ("arc", arc, ((hw - r, -hh + r), 1.5 * math.pi)),
        ("line", hh - r, ((hw, -hh + r), (0.0, 1.0))),
    ]
    pieces = [p for p in pieces if p[1] > 0]
    starts = np.cumsum([0.0] + [p[1] for p in pieces])
    total = float(starts[-1])

    def P(s: np.ndarray) -> np.ndarray:
        s = np.mod(s, total)
        out = np.empty((s.shape[0], 2))
        k = np.clip(np.searchsorted(starts, s, side="right") - 1, 0, len(pieces) - 1)
        for idx, (kind, _length, data) in enumerate(pieces):
            m = k == idx
            if not np.any(m):
                continue
            u = s[m] - starts[idx]
            if kind == "line":
                (x0, y0), (dx, dy) = data
                out[m, 0] = x0 + u * dx
                out[m, 1] = y0 + u * dy
            else:
                (cx, cy), a0 = data
                ang = a0 + u / r
                out[m, 0] = cx + r * np.cos(ang)
                out[m, 1] = cy + r * np.sin(ang)
        return out

    return sample_parametric(P, total, n)


def fourier_circle(
    R: float, modes: Sequence[Tuple[int, float, float]], n: int
) -> ClosedCurve:
    """Star-shaped curve r(theta) = R (1 + sum_k a_k cos k theta + b_k sin k theta)."""
    modes = [(int(k), float(a), float(b)) for k, a, b in modes]

    def radius(th: np.ndarray) -> np.ndarray:
        r = np.ones_like(th)
        for k, a, b in modes:
            r = r + a * np.cos(k * th) + b * np.sin(k * th)
        return R * r

    r_dense = radius(np.linspace(0.0, 2.0 * math.pi, 4096, endpoint=False))
    if np.any(r_dense <= 0):
        raise DegenerateCurveError("Fourier perturbation makes the radius nonpositive")

    def P(s: np.ndarray) -> np.ndarray:
        th = 2.0 * math.pi * s
        r = radius(th)
        return np.column_stack([r * np.cos(th), r * np.sin(th)])

    return sample_parametric(P, 1.0, n)


def load_curve_csv(path: Path, n: Optional[int] = None) -> ClosedCurve:
    """Read x,y samples from CSV; with n given, resample to n equal chords."""
    c = ClosedCurve.from_csv(path)
    return c if n is None else resample_arclength(c, n)
