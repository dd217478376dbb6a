# Domain/curve.py
from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Callable, List

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.interpolate import splev, splprep

from Shared import ARCLENGTH_RTOL, MIN_CURVE_SAMPLES
from Shared.errors import DegenerateCurveError, OffsetTooLargeError
from Shared.io import read_csv, read_json, write_csv, write_json

logger = logging.getLogger(__name__)

Parametrization = Callable[[np.ndarray], np.ndarray]  # sigma (k,) -> points (k, 2)


class ClosedCurve(BaseModel):
    """Cyclic polyline; the last sample connects back to the first."""

    points: np.ndarray
    arclength: bool = False

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("points", mode="before")
    @classmethod
    def _points(cls, v):
        arr = np.array(v, dtype=float, copy=True)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check(self) -> "ClosedCurve":
        pts = self.points
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"samples must have shape (n, 2), got {pts.shape}")
        if pts.shape[0] < MIN_CURVE_SAMPLES:
            raise ValueError(f"need at least {MIN_CURVE_SAMPLES} samples, got {pts.shape[0]}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("samples must be finite")
        seg = self.segment_lengths
        if np.any(seg <= 0):
            raise ValueError("consecutive samples must be distinct (no duplicated endpoint)")
        if self.arclength:
            dev = float(np.max(np.abs(seg / seg.mean() - 1.0)))
            if dev > ARCLENGTH_RTOL:
                raise ValueError(f"arclength flag set but segment lengths vary by {dev:.2e}")
        return self

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.roll(self.points, -1, axis=0) - self.points, axis=1)

    @property
    def length(self) -> float:
        return math.fsum(self.segment_lengths)

    @property
    def ds(self) -> float:
        """Arclength step L/n (meaningful for arclength-sampled curves)."""
        return self.length / self.n

    def closed_points(self) -> np.ndarray:
        return np.vstack([self.points, self.points[:1]])

    def bounds(self, margin: float = 0.0) -> tuple:
        lo = self.points.min(axis=0) - margin
        hi = self.points.max(axis=0) + margin
        return (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))

    # --- CSV (x, y per row, cyclic) ---
    def to_csv(self, path: Path) -> Path:
        return write_csv(path, pd.DataFrame({"x": self.points[:, 0], "y": self.points[:, 1]}))

    @classmethod
    def from_csv(cls, path: Path) -> "ClosedCurve":
        df = read_csv(path, ("x", "y"))
        return cls(points=df[["x", "y"]].to_numpy(float))


class CurveSystem(BaseModel):
    curves: List[ClosedCurve] = Field(default_factory=list)

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def total_length(self) -> float:
        return math.fsum(c.length for c in self.curves)

    def to_json(self, path: Path) -> Path:
        """Write each curve as a CSV next to ``path`` and list them in a JSON document."""
        path = Path(path)
        files = []
        for k, c in enumerate(self.curves):
            csv_path = path.with_name(f"{path.stem}_{k:03d}.csv")
            c.to_csv(csv_path)
            files.append(csv_path.name)
        return write_json(path, {"curves": files})

    @classmethod
    def from_json(cls, path: Path) -> "CurveSystem":
        path = Path(path)
        obj = read_json(path)
        entries = obj["curves"] if isinstance(obj, dict) else obj
        return cls(curves=[ClosedCurve.from_csv(path.parent / f) for f in entries])


class CurvatureProfile(BaseModel):
    """Signed curvature and unit normal per sample, with det(gamma', nu) = -1."""

    kappa: np.ndarray
    normals: np.ndarray
    ds: float

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode="after")
    def _check(self) -> "CurvatureProfile":
        norms = np.linalg.norm(self.normals, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("normals must be unit vectors")
        return self


# -----------------------------
# Equal-chord sampling
# -----------------------------


def sample_parametric(
    P: Parametrization,
    period: float,
    n: int,
    tol: float = 1e-12,
    max_iter: int = 500,
) -> ClosedCurve:
    """n samples of a periodic parametrization with all chords equal.

    Starts from equal parameter steps, then rescales each step by mean/chord until
    the chords agree; the first sample stays at P(0).
    """
    if n < MIN_CURVE_SAMPLES:
        raise ValueError(f"need at least {MIN_CURVE_SAMPLES} samples, got {n}")

    sigma = np.arange(n) * (period / n)
    dev = math.inf
    for it in range(max_iter):
        pts = P(sigma)
        chords = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        mean = float(chords.mean())
        if not mean > 0:
            raise DegenerateCurveError("curve has zero length")
        prev_dev, dev = dev, float(np.max(np.abs(chords / mean - 1.0)))
        # rounding noise floor: stop once well inside tolerance and no longer improving
        if dev < tol or (dev < 1e-3 * ARCLENGTH_RTOL and dev >= prev_dev):
            break
        steps = np.diff(np.append(sigma, period)) * (mean / chords)
        steps *= period / steps.sum()
        sigma = np.concatenate([[0.0], np.cumsum(steps[:-1])])
    else:
        logger.debug("sample_parametric(): stopped at max_iter=%d with dev=%.2e", max_iter, dev)

    if dev > ARCLENGTH_RTOL:
        raise DegenerateCurveError(f"equal-chord sampling did not converge (dev={dev:.2e})")
    return ClosedCurve(points=pts, arclength=True)


def _polyline_parametrization(c: ClosedCurve) -> tuple:
    closed = c.closed_points()
    cum = np.concatenate([[0.0], np.cumsum(c.segment_lengths)])
    L = float(cum[-1])

    def P(s: np.ndarray) -> np.ndarray:
        s = np.mod(s, L)
        return np.column_stack([np.interp(s, cum, closed[:, 0]), np.interp(s, cum, closed[:, 1])])

    return P, L


def resample_arclength(c: ClosedCurve, n: int) -> ClosedCurve:
    """n samples at equal spacing along the polyline of c."""
    if c.length <= 0:
        raise DegenerateCurveError("cannot resample a zero-length curve")
    P, L = _polyline_parametrization(c)
    return sample_parametric(P, L, n)


# -----------------------------
# Curvature
# -----------------------------


def curvature_profile(c: ClosedCurve) -> CurvatureProfile:
    """Menger curvature of each consecutive triple, signed so that kappa = nu . gamma''.

    nu is the tangent rotated clockwise, nu = (T_y, -T_x). A counter-clockwise circle
    therefore has kappa = -1/R and outward normals.
    """
    if not c.arclength:
        raise ValueError("curvature_profile needs an arclength-sampled curve (resample first)")

    pts = c.points
    prev = np.roll(pts, 1, axis=0)
    nxt = np.roll(pts, -1, axis=0)
    a = pts - prev
    b = nxt - pts
    chord = nxt - prev

    la = np.linalg.norm(a, axis=1)
    lb = np.linalg.norm(b, axis=1)
    lc = np.linalg.norm(chord, axis=1)
    if np.any(lc == 0):
        raise DegenerateCurveError("curve folds back onto itself (zero central chord)")

    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    kappa = -2.0 * cross / (la * lb * lc)  # collinear triple -> exactly 0

    T = chord / lc[:, None]
    normals = np.column_stack([T[:, 1], -T[:, 0]])
    return CurvatureProfile(kappa=kappa, normals=normals, ds=c.ds)


def max_abs_curvature(c: ClosedCurve) -> float:
    return float(np.max(np.abs(curvature_profile(c).kappa)))


def total_curvature(c: ClosedCurve) -> float:
    """Discrete int kappa ds (= -2 pi turning number under the sign convention)."""
    prof = curvature_profile(c)
    return math.fsum(prof.kappa) * prof.ds


def turning_number(c: ClosedCurve) -> int:
    pts = c.points
    a = pts - np.roll(pts, 1, axis=0)
    b = np.roll(pts, -1, axis=0) - pts
    angles = np.arctan2(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0], np.sum(a * b, axis=1))
    return int(round(math.fsum(angles) / (2.0 * math.pi)))


def elastica_energy(G: CurveSystem) -> float:
    """W = 1/2 sum_i int kappa_i^2 ds over the multiset."""
    total = 0.0
    for c in G.curves:
        prof = curvature_profile(c)
        total += 0.5 * math.fsum(prof.kappa**2) * prof.ds
    return total


# -----------------------------
# Offsets and motions
# -----------------------------


def offset_curve(c: ClosedCurve, delta: float) -> ClosedCurve:
    """gamma + delta * nu, resampled to equal chords on a periodic spline."""
    prof = curvature_profile(c)
    kmax = float(np.max(np.abs(prof.kappa)))
    if abs(delta) * kmax >= 0.25:
        raise OffsetTooLargeError(
            f"|delta| * max|kappa| = {abs(delta) * kmax:.4f} must stay below 1/4"
        )
    if delta == 0:
        return c

    q = c.points + delta * prof.normals
    q = np.vstack([q, q[:1]])
    tck, _ = splprep([q[:, 0], q[:, 1]], s=0, per=True)

    def P(s: np.ndarray) -> np.ndarray:
        x, y = splev(np.mod(s, 1.0), tck)
        return np.column_stack([x, y])

    return sample_parametric(P, 1.0, c.n)


def dilate_curve(c: ClosedCurve, lam: float) -> ClosedCurve:
    return ClosedCurve(points=c.points * lam, arclength=c.arclength)


def rigid_motion(c: ClosedCurve, angle: float, shift: tuple = (0.0, 0.0)) -> ClosedCurve:
    rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    return ClosedCurve(points=c.points @ rot.T + np.asarray(shift), arclength=c.arclength)
