# Domain/ring.py
from __future__ import annotations

import math

from pydantic import BaseModel, ConfigDict, model_validator

_RTOL = 1e-12


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= _RTOL * max(abs(a), abs(b), 1.0)


class RingConfig(BaseModel):
    """Radially symmetric pair at eps = 1.

    v = 1 on r1 < r < r2 and r3 < r < r4, u = 1 on r2 < r < r3; R splits the u annulus
    between inward and outward transport, so r2^2 = (R^2 + r1^2)/2 and
    r3^2 = (R^2 + r4^2)/2. Symmetric rings additionally have r1 = R - t, r4 = R + t.
    """

    R: float
    r1: float
    r2: float
    r3: float
    r4: float
    symmetric: bool = True

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check(self) -> "RingConfig":
        if not (0 <= self.r1 < self.r2 < self.R < self.r3 < self.r4):
            raise ValueError(
                f"radii must satisfy r1 < r2 < R < r3 < r4, got "
                f"{self.r1}, {self.r2}, {self.R}, {self.r3}, {self.r4}"
            )
        if not _close(self.r2**2, 0.5 * (self.R**2 + self.r1**2)):
            raise ValueError("inner split identity r2^2 = (R^2 + r1^2)/2 violated")
        if not _close(self.r3**2, 0.5 * (self.R**2 + self.r4**2)):
            raise ValueError("outer split identity r3^2 = (R^2 + r4^2)/2 violated")
        if self.symmetric and not _close(self.r1 + self.r4, 2.0 * self.R):
            raise ValueError("symmetric ring requires 2R = r1 + r4")
        return self

    @property
    def t(self) -> float:
        return 0.5 * (self.r4 - self.r1)

    @property
    def u_mass(self) -> float:
        return math.pi * (self.r3**2 - self.r2**2)

    @property
    def interface(self) -> float:
        return 2.0 * math.pi * (self.r2 + self.r3)

    @classmethod
    def from_interfaces(cls, split: float, r2: float, r3: float) -> "RingConfig":
        """General ring from the split radius and the u-annulus radii."""
        r1 = math.sqrt(2.0 * r2 * r2 - split * split)
        r4 = math.sqrt(2.0 * r3 * r3 - split * split)
        return cls(R=split, r1=r1, r2=r2, r3=r3, r4=r4, symmetric=False)


class StripConfig(BaseModel):
    """Straight strip of thickness t and length M/t at eps = 1."""

    t: float
    M: float

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check(self) -> "StripConfig":
        if not (self.t > 0 and self.M > 0):
            raise ValueError(f"strip needs t > 0 and M > 0, got t={self.t}, M={self.M}")
        return self

    @property
    def length(self) -> float:
        return self.M / self.t
