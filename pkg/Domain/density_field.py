# Domain/density_field.py
from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Callable, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.ndimage import gaussian_filter
from skimage.measure import find_contours

from Shared.errors import (
    BalanceError,
    GeometryMismatchError,
    InvalidFieldError,
)
from Shared.io import read_json, read_pgm, sidecar_path, write_json, write_pgm

logger = logging.getLogger(__name__)

Predicate = Callable[[np.ndarray, np.ndarray], np.ndarray]


class GridGeometry(BaseModel):
    """Uniform cell grid. Column i maps to x, row j maps to y."""

    origin: Tuple[float, float] = (0.0, 0.0)
    h: float
    width: int
    height: int

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check(self) -> "GridGeometry":
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"grid spacing must be positive, got {self.h}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"grid dimensions must be positive, got {self.width}x{self.height}")
        return self

    @classmethod
    def around(
        cls, bounds: Tuple[float, float, float, float], h: float, pad: int = 2
    ) -> "GridGeometry":
        """Window covering (xmin, ymin, xmax, ymax) with ``pad`` spare cells per side."""
        xmin, ymin, xmax, ymax = bounds
        width = int(math.ceil((xmax - xmin) / h)) + 2 * pad
        height = int(math.ceil((ymax - ymin) / h)) + 2 * pad
        return cls(origin=(xmin - pad * h, ymin - pad * h), h=h, width=width, height=height)

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        x = self.origin[0] + (np.arange(self.width) + 0.5) * self.h
        y = self.origin[1] + (np.arange(self.height) + 0.5) * self.h
        return np.meshgrid(x, y)  # shapes (height, width)


class DensityField(BaseModel):
    """Two-valued density: occupied cells carry 1/epsilon, all others 0."""

    origin: Tuple[float, float]
    h: float
    width: int
    height: int
    epsilon: float
    occupancy: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("occupancy", mode="before")
    @classmethod
    def _as_bool(cls, v):
        arr = np.array(v, dtype=bool, copy=True)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check(self) -> "DensityField":
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"spacing h must be positive, got {self.h}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.occupancy.shape != (self.height, self.width):
            raise ValueError(
                f"occupancy shape {self.occupancy.shape} != (height, width) "
                f"({self.height}, {self.width})"
            )
        return self

    # --- constructors ---
    @classmethod
    def empty(cls, grid: GridGeometry, epsilon: float) -> "DensityField":
        return cls.on_grid(grid, epsilon, np.zeros((grid.height, grid.width), dtype=bool))

    @classmethod
    def on_grid(cls, grid: GridGeometry, epsilon: float, occupancy: np.ndarray) -> "DensityField":
        return cls(
            origin=grid.origin,
            h=grid.h,
            width=grid.width,
            height=grid.height,
            epsilon=epsilon,
            occupancy=occupancy,
        )

    # --- views ---
    @property
    def grid(self) -> GridGeometry:
        return GridGeometry(origin=self.origin, h=self.h, width=self.width, height=self.height)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.occupancy))

    def values(self) -> np.ndarray:
        return np.where(self.occupancy, 1.0 / self.epsilon, 0.0)

    def same_geometry(self, other: "DensityField") -> bool:
        return (
            tuple(self.origin) == tuple(other.origin)
            and self.h == other.h
            and self.width == other.width
            and self.height == other.height
            and self.epsilon == other.epsilon
        )

    def with_occupancy(self, occupancy: np.ndarray) -> "DensityField":
        return DensityField.on_grid(self.grid, self.epsilon, occupancy)

    def has_empty_border(self) -> bool:
        occ = self.occupancy
        return not (occ[0, :].any() or occ[-1, :].any() or occ[:, 0].any() or occ[:, -1].any())

    def check_border(self) -> None:
        if not self.has_empty_border():
            raise InvalidFieldError(
                "support touches the window edge; keep one empty ring of cells"
            )

    # --- IO ---
    def dump(self, pgm_path: Path) -> Path:
        """Write occupancy as PGM plus a JSON header {origin, h, epsilon}."""
        pgm_path = Path(pgm_path)
        write_pgm(pgm_path, self.occupancy)
        write_json(
            sidecar_path(pgm_path),
            {"origin": list(self.origin), "h": self.h, "epsilon": self.epsilon},
        )
        return pgm_path

    @classmethod
    def load(cls, pgm_path: Path) -> "DensityField":
        occ = read_pgm(pgm_path)
        header = read_json(sidecar_path(pgm_path))
        return cls(
            origin=tuple(header["origin"]),
            h=float(header["h"]),
            width=occ.shape[1],
            height=occ.shape[0],
            epsilon=float(header["epsilon"]),
            occupancy=occ,
        )


class AdmissibilityReport(BaseModel):
    is_admissible: bool
    mass_u: float
    mass_v: float
    overlap_cells: int
    value_violations: int


class AdmissiblePair(BaseModel):
    """(u, v) in K_eps: shared grid, disjoint supports, equal mass."""

    u: DensityField
    v: DensityField
    mass: float

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode="after")
    def _check(self) -> "AdmissiblePair":
        report = validate_pair(self.u, self.v)
        if not report.is_admissible:
            raise ValueError(f"inadmissible pair: {report.model_dump()}")
        if self.mass != report.mass_u:
            raise ValueError(f"pair mass {self.mass} != mass(u) {report.mass_u}")
        return self

    @classmethod
    def from_fields(cls, u: DensityField, v: DensityField) -> "AdmissiblePair":
        report = validate_pair(u, v)
        if not report.is_admissible:
            raise BalanceError(
                f"fields are not admissible: overlap={report.overlap_cells}, "
                f"mass_u={report.mass_u}, mass_v={report.mass_v}"
            )
        return cls(u=u, v=v, mass=report.mass_u)


# -----------------------------
# Operations
# -----------------------------


def rasterize_region(predicate: Predicate, grid: GridGeometry, epsilon: float) -> DensityField:
    """Occupy every cell whose center satisfies the (vectorized) predicate."""
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise InvalidFieldError(f"epsilon must be positive, got {epsilon}")
    if not grid.h > 0:
        raise InvalidFieldError(f"spacing must be positive, got {grid.h}")

    X, Y = grid.cell_centers()
    occ = np.broadcast_to(np.asarray(predicate(X, Y), dtype=bool), X.shape)
    field = DensityField.on_grid(grid, epsilon, occ)
    if not field.has_empty_border():
        logger.warning("rasterize_region(): support reaches the window border")
    return field


def total_mass(f: DensityField) -> float:
    return f.count * f.h * f.h / f.epsilon


def validate_pair(u: DensityField, v: DensityField) -> AdmissibilityReport:
    if not u.same_geometry(v):
        raise GeometryMismatchError(
            f"grid mismatch: u(origin={u.origin}, h={u.h}, {u.width}x{u.height}, eps={u.epsilon}) "
            f"vs v(origin={v.origin}, h={v.h}, {v.width}x{v.height}, eps={v.epsilon})"
        )
    overlap = int(np.count_nonzero(u.occupancy & v.occupancy))

    level = 1.0 / u.epsilon
    violations = 0
    for f in (u, v):
        vals = f.values()
        violations += int(np.count_nonzero((vals != 0.0) & (vals != level)))

    mass_u, mass_v = total_mass(u), total_mass(v)
    return AdmissibilityReport(
        is_admissible=(overlap == 0 and violations == 0 and u.count == v.count),
        mass_u=mass_u,
        mass_v=mass_v,
        overlap_cells=overlap,
        value_violations=violations,
    )


def scaled_perimeter(
    f: DensityField,
    estimator: Literal["edge-count", "contour-length"] = "contour-length",
    smoothing: Optional[float] = None,
) -> float:
    """Support perimeter of f, which equals eps * int |grad u| for u in {0, 1/eps}.

    edge-count:
      h * number of occupied/unoccupied cell interfaces (window edge counts as
      unoccupied). Exact for unions of cells, l1-anisotropic otherwise.
    contour-length:
      length of the marching-squares polygon of the indicator at level 1/2, after
      a Gaussian pre-smoothing of width ``smoothing`` in physical length units
      (0 = raw indicator). The default sqrt(h * eps) spans a growing number of
      cells as h -> 0 while the sigma^2 kappa / 2 inward shift of the level set
      vanishes like h, so the estimate converges.
    """
    if estimator == "edge-count":
        p = np.pad(f.occupancy, 1)
        n_edges = np.count_nonzero(p[:, 1:] != p[:, :-1]) + np.count_nonzero(p[1:, :] != p[:-1, :])
        return float(n_edges) * f.h

    if estimator != "contour-length":
        raise ValueError(f"Unknown perimeter estimator: {estimator}")
    if smoothing is None:
        smoothing = default_smoothing(f.h, f.epsilon)
    if not (smoothing >= 0 and math.isfinite(smoothing)):
        raise ValueError(f"smoothing must be >= 0, got {smoothing}")

    if f.count == 0:
        return 0.0
    sigma = smoothing / f.h  # in cells
    pad = max(1, int(math.ceil(4.0 * sigma)) + 1)
    img = np.pad(f.occupancy, pad).astype(float)
    if sigma > 0:
        img = gaussian_filter(img, sigma=sigma, mode="constant", cval=0.0, truncate=4.0)

    length = 0.0
    for contour in find_contours(img, 0.5):
        seg = np.diff(contour, axis=0)
        length += math.fsum(np.hypot(seg[:, 0], seg[:, 1]))
    return length * f.h


def default_smoothing(h: float, epsilon: float) -> float:
    """Contour pre-smoothing width sqrt(h * eps), in length units."""
    return math.sqrt(h * epsilon)
