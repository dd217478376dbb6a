# Domain/measure.py
from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from Shared.io import read_csv, write_csv


def _frozen_array(v, dtype, ndim: int) -> np.ndarray:
    arr = np.array(v, dtype=dtype, copy=True)
    if ndim == 2 and arr.size == 0:
        arr = arr.reshape(0, 2)
    arr.setflags(write=False)
    return arr


class DiscreteMeasure(BaseModel):
    """Weighted atoms in the plane: points (n, 2), weights (n,)."""

    points: np.ndarray
    weights: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("points", mode="before")
    @classmethod
    def _points(cls, v):
        return _frozen_array(v, float, 2)

    @field_validator("weights", mode="before")
    @classmethod
    def _weights(cls, v):
        return _frozen_array(v, float, 1)

    @model_validator(mode="after")
    def _check(self) -> "DiscreteMeasure":
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ValueError(f"points must have shape (n, 2), got {self.points.shape}")
        if self.weights.shape != (self.points.shape[0],):
            raise ValueError("one weight per atom required")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("atom positions must be finite")
        if np.any(~np.isfinite(self.weights)) or np.any(self.weights <= 0):
            raise ValueError("atom weights must be positive and finite")
        return self

    @classmethod
    def empty(cls) -> "DiscreteMeasure":
        return cls(points=np.zeros((0, 2)), weights=np.zeros(0))

    def __len__(self) -> int:
        return int(self.weights.shape[0])

    @property
    def total(self) -> float:
        return math.fsum(self.weights)

    # --- CSV (x, y, w) ---
    def to_csv(self, path: Path) -> Path:
        df = pd.DataFrame({"x": self.points[:, 0], "y": self.points[:, 1], "w": self.weights})
        return write_csv(path, df)

    @classmethod
    def from_csv(cls, path: Path) -> "DiscreteMeasure":
        df = read_csv(path, ("x", "y", "w"))
        return cls(points=df[["x", "y"]].to_numpy(float), weights=df["w"].to_numpy(float))


class TransportPlan(BaseModel):
    """Sparse coupling: entries (source i, target j, mass > 0) and its cost."""

    sources: np.ndarray
    targets: np.ndarray
    masses: np.ndarray
    cost: float
    p: float = 1.0

    # LP duals from the solver (alpha_i + beta_j <= c_ij), when available
    source_dual: Optional[np.ndarray] = None
    target_dual: Optional[np.ndarray] = None

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("sources", "targets", mode="before")
    @classmethod
    def _indices(cls, v):
        return _frozen_array(v, np.int64, 1)

    @field_validator("masses", mode="before")
    @classmethod
    def _masses(cls, v):
        return _frozen_array(v, float, 1)

    @model_validator(mode="after")
    def _check(self) -> "TransportPlan":
        n = self.masses.shape[0]
        if self.sources.shape != (n,) or self.targets.shape != (n,):
            raise ValueError("sources, targets and masses must have equal length")
        if np.any(self.masses <= 0):
            raise ValueError("plan entries must carry positive mass")
        if self.p < 1:
            raise ValueError(f"exponent p must be >= 1, got {self.p}")
        return self

    @property
    def distance(self) -> float:
        return self.cost ** (1.0 / self.p)

    def row_sums(self, n_sources: int) -> np.ndarray:
        return np.bincount(self.sources, weights=self.masses, minlength=n_sources)

    def col_sums(self, n_targets: int) -> np.ndarray:
        return np.bincount(self.targets, weights=self.masses, minlength=n_targets)

    # --- CSV (i, j, mass) ---
    def to_csv(self, path: Path) -> Path:
        df = pd.DataFrame({"i": self.sources, "j": self.targets, "mass": self.masses})
        return write_csv(path, df)

    @classmethod
    def from_csv(
        cls, path: Path, mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 1.0
    ) -> "TransportPlan":
        """Reload entries and recompute the cost from the measures."""
        df = read_csv(path, ("i", "j", "mass"))
        i = df["i"].to_numpy(np.int64)
        j = df["j"].to_numpy(np.int64)
        m = df["mass"].to_numpy(float)
        d = np.linalg.norm(mu.points[i] - nu.points[j], axis=1) ** p
        return cls(sources=i, targets=j, masses=m, cost=math.fsum(m * d), p=p)


class DualPotential(BaseModel):
    """Kantorovich potential sampled on source atoms and target atoms."""

    source_values: np.ndarray
    target_values: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("source_values", "target_values", mode="before")
    @classmethod
    def _values(cls, v):
        return _frozen_array(v, float, 1)

    def shifted(self, c: float) -> "DualPotential":
        return DualPotential(
            source_values=self.source_values + c, target_values=self.target_values + c
        )
