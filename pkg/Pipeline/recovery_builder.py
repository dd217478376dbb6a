# Pipeline/recovery_builder.py
# Recovery pair around a closed curve: u is the eps-tube, v is two bands outside the
# offset curves gamma +- eps nu whose rays carry unit mass each. Mass coordinates on
# either side come from Pipeline.ray_calculus with sin(beta) = 1, alpha' = kappa~.
from __future__ import annotations

import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist, squareform

from Domain.curve import (
    ClosedCurve,
    CurveSystem,
    CurvatureProfile,
    curvature_profile,
    elastica_energy,
    max_abs_curvature,
)
from Domain.density_field import DensityField, GridGeometry, scaled_perimeter, total_mass
from Domain.recovery import (
    GridEnergy,
    OffsetFrame,
    RecoveryEnergy,
    RecoveryPair,
    UpperBoundTerms,
)
from Pipeline.ot_solver import field_to_measure, solve_transport
from Pipeline.ray_calculus import length_of_mass_array, lower_bound_functional, per_ray_cost_array
from Shared import SOLVER_CAPACITY
from Shared.errors import (
    ConsistencyError,
    GridTooCoarseError,
    InadmissibleEpsilonError,
)

logger = logging.getLogger(__name__)

_REACH_SAMPLES = 2048
_EQUALIZE_REACH = 3.0  # cells may be added up to this many eps from the curve


# -----------------------------
# Admissibility
# -----------------------------


def _reach_estimate(c: ClosedCurve, kmax: float) -> float:
    """Half the shortest chord between samples that are far apart along the curve.

    "Far" means an arclength gap of at least min(pi / max|kappa|, L/2), which keeps
    neighbouring samples out and leaves the double-normal chords (the bottleneck).
    """
    stride = max(1, int(math.ceil(c.n / _REACH_SAMPLES)))
    idx = np.arange(0, c.n, stride)
    pts = c.points[idx]

    gap = np.abs(idx[:, None] - idx[None, :])
    gap = np.minimum(gap, c.n - gap) * c.ds
    window = min(math.pi / kmax if kmax > 0 else math.inf, 0.5 * c.length) * (1.0 - 1e-9)

    dist = squareform(pdist(pts))
    far = gap >= window
    if not far.any():
        return math.inf
    return 0.5 * float(np.min(dist[far]))


def admissible_epsilon(c: ClosedCurve) -> float:
    """eps0 = min(1 / (4 max|kappa|), reach / 4)."""
    kmax = max_abs_curvature(c)
    curv = 0.25 / kmax if kmax > 0 else math.inf
    eps0 = min(curv, 0.25 * _reach_estimate(c, kmax))
    logger.debug("admissible_epsilon(): max|kappa|=%.6g eps0=%.6g", kmax, eps0)
    return eps0


def _check_epsilon(c: ClosedCurve, eps: float) -> float:
    eps0 = admissible_epsilon(c)
    if not (0 < eps < eps0):
        raise InadmissibleEpsilonError(f"eps={eps} outside (0, eps0={eps0:.6g})")
    return eps0


# -----------------------------
# Offset frames
# -----------------------------


def ray_lengths(kappa_tilde: np.ndarray, eps: float, side: str) -> np.ndarray:
    """Signed u-ray extent from the offset curve back toward gamma.

    outer: t_+(-1) = (1/kappa)(1 - eps kappa - sqrt(1 - eps^2 kappa^2)) <= 0
    inner: t_-(+1) = (1/kappa)(1 + eps kappa - sqrt(1 - eps^2 kappa^2)) >= 0
    """
    m = -1.0 if side == "outer" else 1.0
    return length_of_mass_array(1.0, kappa_tilde, eps, m)


def _frame(prof: CurvatureProfile, eps: float, side: str) -> OffsetFrame:
    sign = 1.0 if side == "outer" else -1.0
    k = prof.kappa
    dr = (1.0 - sign * eps * k) * prof.ds
    kt = k / (1.0 - sign * eps * k)
    r = np.concatenate([[0.0], np.cumsum(dr)[:-1]])
    return OffsetFrame(
        side=side,
        r=r,
        dr=dr,
        kappa=kt,
        ray_length=ray_lengths(kt, eps, side),
        v_width=length_of_mass_array(1.0, kt, eps, sign),
        epsilon=eps,
    )


def build_offset_frames(c: ClosedCurve, eps: float) -> Tuple[OffsetFrame, OffsetFrame]:
    eps0 = _check_epsilon(c, eps)
    prof = curvature_profile(c)
    outer = _frame(prof, eps, "outer")
    inner = _frame(prof, eps, "inner")

    kt_max = max(float(np.max(np.abs(outer.kappa))), float(np.max(np.abs(inner.kappa))))
    if kt_max > (1.0 + 1e-12) / (3.0 * eps0):
        raise ConsistencyError(f"offset curvature {kt_max:.6g} above 1/(3 eps0)")
    gap = np.max(np.abs(inner.ray_length - outer.ray_length - 2.0 * eps))
    if gap > 1e-8 * max(1.0, eps):
        raise ConsistencyError(f"rays from the two offsets do not meet (gap {gap:.3e})")
    return outer, inner


# -----------------------------
# Rasterization
# -----------------------------


def signed_distance_to_curve(
    c: ClosedCurve, X: np.ndarray, Y: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Signed distance along nu and the foot position on the polygon.

    Returns (d, i0, w): the foot lies at (1 - w) * gamma_i0 + w * gamma_(i0+1).
    """
    pts = c.points
    n = c.n
    prof = curvature_profile(c)
    q = np.column_stack([np.ravel(X), np.ravel(Y)])
    _, k = cKDTree(pts).query(q)

    best_d2 = np.full(q.shape[0], np.inf)
    best_d = np.zeros(q.shape[0])
    best_i = np.zeros(q.shape[0], dtype=int)
    best_w = np.zeros(q.shape[0])
    for shift in (-1, 0):
        i0 = (k + shift) % n
        i1 = (i0 + 1) % n
        a = pts[i0]
        ab = pts[i1] - a
        w = np.clip(np.sum((q - a) * ab, axis=1) / np.sum(ab * ab, axis=1), 0.0, 1.0)
        diff = q - (a + w[:, None] * ab)
        d2 = np.sum(diff * diff, axis=1)
        nu = (1.0 - w)[:, None] * prof.normals[i0] + w[:, None] * prof.normals[i1]
        d = np.copysign(np.sqrt(d2), np.sum(diff * nu, axis=1))

        better = d2 < best_d2
        best_d2 = np.where(better, d2, best_d2)
        best_d = np.where(better, d, best_d)
        best_i = np.where(better, i0, best_i)
        best_w = np.where(better, w, best_w)

    shape = np.shape(X)
    return best_d.reshape(shape), best_i.reshape(shape), best_w.reshape(shape)


def _interp(values: np.ndarray, i0: np.ndarray, w: np.ndarray) -> np.ndarray:
    i1 = (i0 + 1) % values.shape[0]
    return (1.0 - w) * values[i0] + w * values[i1]


def equalize_masses(
    u_occ: np.ndarray, v_occ: np.ndarray, beyond: np.ndarray, allowed: np.ndarray
) -> Tuple[np.ndarray, int]:
    """Toggle v cells until #v = #u.

    ``beyond`` is the signed distance past the outer edge of v (negative inside v).
    Surplus v cells go shallowest-first (largest ``beyond``); missing ones are taken
    from ``allowed`` cells outside v, nearest-first. Ties keep row-major order.
    """
    flat_v = np.asarray(v_occ, dtype=bool).ravel().copy()
    flat_u = np.asarray(u_occ, dtype=bool).ravel()
    key = np.asarray(beyond, dtype=float).ravel()
    excess = int(flat_v.sum()) - int(flat_u.sum())

    if excess > 0:
        cand = np.flatnonzero(flat_v)
        order = cand[np.argsort(-key[cand], kind="stable")]
        flat_v[order[:excess]] = False
    elif excess < 0:
        cand = np.flatnonzero(~flat_v & ~flat_u & (key > 0) & np.asarray(allowed, bool).ravel())
        if cand.size < -excess:
            raise GridTooCoarseError(
                f"cannot equalize masses: need {-excess} extra v cells, {cand.size} available"
            )
        order = cand[np.argsort(key[cand], kind="stable")]
        flat_v[order[:-excess]] = True
    return flat_v.reshape(np.shape(v_occ)), abs(excess)


def build_recovery_pair(c: ClosedCurve, eps: float, h: float) -> RecoveryPair:
    """Rasterize the recovery pair on a grid of spacing h <= eps/4.

    Cells are classified by their signed distance d to the polygon: u is |d| < eps,
    v lies between the offset curve and the per-sample band width. Counts are then
    matched by equalize_masses, adding cells no farther than 3 eps from the curve.
    """
    if not (h > 0 and h <= 0.25 * eps):
        raise GridTooCoarseError(f"spacing h={h} must satisfy 0 < h <= eps/4 = {0.25 * eps}")
    outer, inner = build_offset_frames(c, eps)

    margin = _EQUALIZE_REACH * eps + h
    grid = GridGeometry.around(c.bounds(margin), h, pad=2)
    X, Y = grid.cell_centers()
    d, i0, w = signed_distance_to_curve(c, X, Y)

    top = eps + _interp(outer.v_width, i0, w)  # outer band: eps <= d <= top
    bottom = -eps + _interp(inner.v_width, i0, w)  # inner band: bottom <= d <= -eps

    u_occ = np.abs(d) < eps
    v_occ = ((d >= eps) & (d <= top)) | ((d <= -eps) & (d >= bottom))

    # distance past the outer edge of the band on the cell's side (< 0 inside v)
    beyond = np.where(d >= 0, d - top, bottom - d)
    v_occ, toggled = equalize_masses(u_occ, v_occ, beyond, np.abs(d) <= _EQUALIZE_REACH * eps)

    u = DensityField.on_grid(grid, eps, u_occ)
    v = DensityField.on_grid(grid, eps, v_occ)
    if not (u.has_empty_border() and v.has_empty_border()):
        raise GridTooCoarseError("recovery pair reaches the window border")
    logger.info("build_recovery_pair(): eps=%g h=%g cells=%d toggled=%d", eps, h, u.count, toggled)
    return RecoveryPair(
        curve=c,
        epsilon=eps,
        h=h,
        u=u,
        v=v,
        outer=outer,
        inner=inner,
        target_mass=2.0 * c.length,
        toggled_cells=toggled,
    )


# -----------------------------
# Energies
# -----------------------------


def recovery_energy_semianalytic(c: ClosedCurve, eps: float) -> RecoveryEnergy:
    """F and G of the recovery pair from per-ray closed forms, no grid involved.

    d1 = sum_sides int c(1, kappa~, eps, 1) dr,  int |grad u| = (L+ + L-)/eps
    """
    outer, inner = build_offset_frames(c, eps)
    interface = 0.0
    parts = []
    for fr in (outer, inner):
        parts.append(per_ray_cost_array(1.0, fr.kappa, eps, 1.0) * fr.dr)
        interface += fr.length
    d1 = math.fsum(np.concatenate(parts))

    M = 2.0 * c.length
    F = d1 / eps + interface
    return RecoveryEnergy(
        epsilon=eps,
        F=F,
        G=(F - 2.0 * M) / eps**2,
        mass=M,
        d1=d1,
        interface=interface,
        W=elastica_energy(CurveSystem(curves=[c])),
    )


def recovery_lower_bound(c: ClosedCurve, eps: float) -> float:
    """Lower-bound functional on the recovery rays: normal (sin beta = 1), unit mass,
    alpha' = kappa~, integrated over both offset curves. G of the pair is at least this.
    """
    outer, inner = build_offset_frames(c, eps)
    return math.fsum(
        lower_bound_functional(1.0, fr.kappa, 1.0, eps, fr.dr) for fr in (outer, inner)
    )


def upper_bound_constant(eps0: float) -> float:
    """C(eps0) such that eps * F_eps <= 2L + (eps^2/2) int kappa^2 + eps^4 L C."""
    return 0.5 * (4.0 * eps0) ** -4 / (1.0 - 1.0 / 16.0) + (7.0 / 9.0) * 2.0 * (3.0 * eps0) ** -4


def upper_bound_terms(c: ClosedCurve, eps: float) -> UpperBoundTerms:
    outer, inner = build_offset_frames(c, eps)
    k = curvature_profile(c).kappa
    ds = c.ds
    k2 = k * k
    rem = math.fsum(np.concatenate([fr.kappa**4 * fr.dr for fr in (outer, inner)]))
    return UpperBoundTerms(
        base=2.0 * c.length,
        bending=0.5 * eps**2 * math.fsum(k2) * ds,
        correction=0.5 * eps**4 * math.fsum(k2 * k2 / (1.0 - eps**2 * k2)) * ds,
        remainder=(7.0 / 9.0) * eps**4 * rem,
    )


def recovery_upper_bound(c: ClosedCurve, eps: float) -> float:
    """Bound on d1/eps: 2L + (eps^2/2) int kappa^2 + eps^4 L C(eps0)."""
    eps0 = _check_epsilon(c, eps)
    k = curvature_profile(c).kappa
    L = c.length
    return 2.0 * L + 0.5 * eps**2 * math.fsum(k * k) * c.ds + eps**4 * L * upper_bound_constant(eps0)


def recovery_energy_grid(
    pair: RecoveryPair, smoothing: Optional[float] = None, capacity: int = SOLVER_CAPACITY
) -> GridEnergy:
    """F and G of a rasterized pair: exact transport plus the contour-length perimeter.

    ``smoothing`` is the contour pre-smoothing width in length units (None = sqrt(h eps)).
    """
    mu = field_to_measure(pair.u)
    nu = field_to_measure(pair.v)
    plan = solve_transport(mu, nu, p=1.0, capacity=capacity)
    perimeter = scaled_perimeter(pair.u, "contour-length", smoothing=smoothing)

    eps = pair.epsilon
    M = total_mass(pair.u)
    F = plan.cost / eps + perimeter
    return GridEnergy(
        epsilon=eps,
        h=pair.h,
        d1=plan.cost,
        perimeter=perimeter,
        mass=M,
        F=F,
        G=(F - 2.0 * M) / eps**2,
        atoms=len(mu),
    )
