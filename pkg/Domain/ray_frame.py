# Domain/ray_frame.py
from __future__ import annotations

import math

from pydantic import BaseModel, ConfigDict, model_validator


class RayFrame(BaseModel):
    """Transport-ray data at one boundary point.

    sin_beta:    angle between ray and boundary, in (0, 1]
    alpha_prime: ray-angle derivative along the boundary (1/length)
    mass:        mass carried by the ray, in (0, 1]
    epsilon:     thickness scale
    """

    sin_beta: float
    alpha_prime: float
    mass: float
    epsilon: float

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check(self) -> "RayFrame":
        if not (0.0 < self.sin_beta <= 1.0):
            raise ValueError(f"sin_beta must lie in (0, 1], got {self.sin_beta}")
        if not (0.0 < self.mass <= 1.0):
            raise ValueError(f"mass must lie in (0, 1], got {self.mass}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not math.isfinite(self.alpha_prime):
            raise ValueError("alpha_prime must be finite")
        if not abs(self.xi) < 1.0:
            raise ValueError(
                f"discriminant 1 - 2 alpha' eps m / sin^2 beta vanishes within |m| <= M (xi={self.xi})"
            )
        return self

    @property
    def xi(self) -> float:
        return 2.0 * self.alpha_prime * self.epsilon * self.mass / self.sin_beta**2


class RayCostSeries(BaseModel):
    leading: float
    bending: float
    remainder_bound: float
    exact: float

    @property
    def remainder(self) -> float:
        return self.exact - self.leading - self.bending


class LowerBoundTerms(BaseModel):
    thickness_penalty: float
    angle_penalty: float
    bending_term: float

    @property
    def total(self) -> float:
        return self.thickness_penalty + self.angle_penalty + self.bending_term
