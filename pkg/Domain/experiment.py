# Domain/experiment.py
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from Domain.curve import ClosedCurve
from Domain.curve_shapes import circle, ellipse, fourier_circle, load_curve_csv, rounded_rectangle
from Shared import DEFAULT_CURVE_SAMPLES, SOLVER_CAPACITY
from Shared.errors import ConfigError
from Shared.io import write_csv

ExperimentKind = Literal["convergence", "grid-validation", "scaling", "ring-sweep"]


# -----------------------------
# Curve specs
# -----------------------------


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CircleSpec(_Spec):
    kind: Literal["circle"] = "circle"
    R: float = 1.0
    clockwise: bool = False

    def build(self, n: int) -> ClosedCurve:
        return circle(self.R, n, clockwise=self.clockwise)


class EllipseSpec(_Spec):
    kind: Literal["ellipse"] = "ellipse"
    a: float
    b: float

    def build(self, n: int) -> ClosedCurve:
        return ellipse(self.a, self.b, n)


class RoundedRectangleSpec(_Spec):
    kind: Literal["rounded_rectangle"] = "rounded_rectangle"
    w: float
    h: float
    r: float

    def build(self, n: int) -> ClosedCurve:
        return rounded_rectangle(self.w, self.h, self.r, n)


class FourierSpec(_Spec):
    kind: Literal["fourier"] = "fourier"
    R: float = 1.0
    modes: List[Tuple[int, float, float]] = Field(default_factory=list)  # (k, a_k, b_k)

    def build(self, n: int) -> ClosedCurve:
        return fourier_circle(self.R, self.modes, n)


class FileSpec(_Spec):
    kind: Literal["file"] = "file"
    path: Path

    def build(self, n: int) -> ClosedCurve:
        return load_curve_csv(self.path, n)


CurveSpec = Annotated[
    Union[CircleSpec, EllipseSpec, RoundedRectangleSpec, FourierSpec, FileSpec],
    Field(discriminator="kind"),
]


# -----------------------------
# Config
# -----------------------------


class ExperimentConfig(BaseModel):
    """One JSON document per experiment; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ExperimentKind
    name: Optional[str] = None
    curve: Optional[CurveSpec] = None
    eps: List[float] = Field(default_factory=list)
    spacings: List[float] = Field(default_factory=list)
    R: List[float] = Field(default_factory=list)
    t: List[float] = Field(default_factory=list)
    M: List[float] = Field(default_factory=list)

    samples: int = DEFAULT_CURVE_SAMPLES
    capacity: int = SOLVER_CAPACITY
    smoothing: Optional[float] = None  # contour pre-smoothing width, length units
    max_workers: int = 1
    record_timing: bool = False
    output: Optional[Path] = None

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        for label in ("eps", "spacings", "R", "t", "M"):
            bad = [x for x in getattr(self, label) if not (x > 0 and math.isfinite(x))]
            if bad:
                raise ValueError(f"{label} values must be positive and finite, got {bad}")

        if self.kind == "convergence":
            if self.curve is None:
                raise ValueError("convergence needs a curve")
            if not self.eps:
                raise ValueError("convergence needs a nonempty eps list")
        elif self.kind == "grid-validation":
            if not (self.R and self.t and self.spacings):
                raise ValueError("grid-validation needs nonempty R, t and spacings lists")
        elif self.kind == "scaling":
            if not self.M:
                raise ValueError("scaling needs a nonempty M ladder")
        elif self.kind == "ring-sweep":
            if not (self.R and self.t):
                raise ValueError("ring-sweep needs nonempty R and t lists")

        if self.samples < 8 or self.capacity < 1 or self.max_workers < 1:
            raise ValueError("samples >= 8, capacity >= 1 and max_workers >= 1 required")
        if self.smoothing is not None and not (self.smoothing >= 0 and math.isfinite(self.smoothing)):
            raise ValueError(f"smoothing must be >= 0 and finite, got {self.smoothing}")
        return self

    @property
    def experiment_id(self) -> str:
        return self.name or self.kind


def load_config(path: Path) -> ExperimentConfig:
    """Read and validate a JSON config; every failure surfaces as ConfigError."""
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        return ExperimentConfig.model_validate(obj)
    except ValidationError as e:
        raise ConfigError(f"invalid config {path}:\n{e}") from e


# -----------------------------
# Rows
# -----------------------------

COLUMNS: Dict[str, Tuple[str, ...]] = {
    "convergence": (
        "experiment", "eps", "h", "F", "M", "G", "W", "gap", "order", "limit",
        "d1", "perimeter", "lower_bound", "upper_bound", "bound_gap", "atoms", "toggled", "error",
    ),
    "grid-validation": (
        "experiment", "R", "t", "h", "eps", "F", "M", "G", "atoms", "d1", "d1_exact",
        "d1_rel_error", "perimeter", "perimeter_exact", "perimeter_rel_error", "toggled", "error",
    ),
    "scaling": (
        "experiment", "mass", "disc_d1", "disc_F", "strip_F", "strip_wins",
        "disc_exponent", "strip_exponent", "crossover", "error",
    ),
    "ring-sweep": (
        "experiment", "R", "t", "eps", "F", "M", "G", "F_per_M", "asymptotic",
        "residual", "C_fit", "slope_R", "t_opt", "error",
    ),
}


class ResultRow(BaseModel):
    """One CSV row. G is always (F - 2M)/eps^2 of the row's own F, M and eps."""

    experiment: str
    values: Dict[str, Optional[float]] = Field(default_factory=dict)
    error: Optional[str] = None
    wall_time: Optional[float] = None

    @model_validator(mode="after")
    def _check(self) -> "ResultRow":
        for k, v in self.values.items():
            if v is not None and not math.isfinite(v):
                raise ValueError(f"{self.experiment}: column {k} is not finite ({v})")
        F, M, eps = (self.values.get(k) for k in ("F", "M", "eps"))
        if F is not None and M is not None and eps is not None:
            self.values["G"] = (F - 2.0 * M) / eps**2
        return self

    def get(self, key: str) -> Optional[float]:
        return self.values.get(key)

    def record(self, columns: Tuple[str, ...], timing: bool) -> Dict[str, object]:
        out: Dict[str, object] = {}
        for col in columns:
            if col == "experiment":
                out[col] = self.experiment
            elif col == "error":
                out[col] = self.error or ""
            else:
                out[col] = self.values.get(col)
        if timing:
            out["wall_time"] = self.wall_time
        return out


def rows_to_frame(rows: List[ResultRow], kind: str, timing: bool = False) -> pd.DataFrame:
    columns = COLUMNS[kind]
    header = list(columns) + (["wall_time"] if timing else [])
    return pd.DataFrame([r.record(columns, timing) for r in rows], columns=header)


def write_rows(rows: List[ResultRow], cfg: ExperimentConfig, path: Path) -> Path:
    return write_csv(path, rows_to_frame(rows, cfg.kind, cfg.record_timing))
