# Domain/recovery.py
from __future__ import annotations

import math
from typing import Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from Domain.curve import ClosedCurve
from Domain.density_field import DensityField


class OffsetFrame(BaseModel):
    """Per-sample ray data on one offset curve gamma + side * eps * nu.

    r:          arclength position on the offset curve (theta_+- of the center sample)
    dr:         offset arclength element (1 -+ eps kappa) ds
    kappa:      offset curvature kappa / (1 -+ eps kappa)
    ray_length: signed extent of the u ray back toward the center curve
    v_width:    signed extent of the v band away from the center curve
    """

    side: Literal["outer", "inner"]
    r: np.ndarray
    dr: np.ndarray
    kappa: np.ndarray
    ray_length: np.ndarray
    v_width: np.ndarray
    epsilon: float

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def length(self) -> float:
        return math.fsum(self.dr)


class RecoveryPair(BaseModel):
    curve: ClosedCurve
    epsilon: float
    h: float
    u: DensityField
    v: DensityField
    outer: OffsetFrame
    inner: OffsetFrame
    target_mass: float  # 2L
    toggled_cells: int = 0

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def mass(self) -> float:
        return self.u.count * self.h * self.h / self.epsilon


class RecoveryEnergy(BaseModel):
    epsilon: float
    F: float
    G: float
    mass: float
    d1: float
    interface: float
    W: float

    def as_tuple(self) -> Tuple[float, float]:
        return self.F, self.G


class GridEnergy(BaseModel):
    epsilon: float
    h: float
    d1: float
    perimeter: float
    mass: float
    F: float
    G: float
    atoms: int


class UpperBoundTerms(BaseModel):
    base: float  # 2L
    bending: float  # (eps^2/2) int kappa^2
    correction: float  # (eps^4/2) int kappa^4 / (1 - eps^2 kappa^2)
    remainder: float  # (7/9) eps^4 sum_sides int kappa~^4 dr

    @property
    def total(self) -> float:
        return self.base + self.bending + self.correction + self.remainder
