# Pipeline/ray_calculus.py
# Closed-form transport along a single ray in mass coordinates.
#
#   m(t) = (t sin(beta) - t^2 alpha' / 2) / eps          mass up to distance t
#   t(m) = 2 eps m / (sin(beta) (1 + sqrt(1 - 2 alpha' eps m / sin^2 beta)))
#   cost = int_0^M [t(m) - t(m - M)] dm
#        = sin^3 / (3 alpha'^2 eps) [(1+xi)^{3/2} + (1-xi)^{3/2} - 2],  xi = 2 alpha' eps M / sin^2
from __future__ import annotations

import math

import numpy as np
from scipy.special import binom

from Domain.ray_frame import LowerBoundTerms, RayCostSeries, RayFrame
from Shared import SERIES_XI
from Shared.errors import (
    ConsistencyError,
    DegenerateRayError,
    ExpansionDomainError,
    OutOfRangeError,
)

# (1+xi)^{3/2} + (1-xi)^{3/2} - 2 = sum_k 2 binom(3/2, 2k) xi^{2k}; relative to the
# leading term eps M^2 / sin(beta) the k-th term is (4/3) 2 binom(3/2, 2k) xi^{2k-2}.
_EVEN_COEFFS = 2.0 * binom(1.5, 2 * np.arange(1, 9))
_SERIES = (4.0 / 3.0) * _EVEN_COEFFS


# -----------------------------
# Array forms
# -----------------------------


def mass_of_length_array(sin_beta, alpha_prime, eps, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return (t * sin_beta - 0.5 * t * t * alpha_prime) / eps


def length_of_mass_array(sin_beta, alpha_prime, eps, m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    disc = 1.0 - 2.0 * np.asarray(alpha_prime) * eps * m / np.asarray(sin_beta) ** 2
    if np.any(disc <= 0):
        raise DegenerateRayError("nonpositive discriminant in the length of mass")
    # rationalized form; no 0/0 as alpha' -> 0
    return 2.0 * eps * m / (sin_beta * (1.0 + np.sqrt(disc)))


def per_ray_cost_array(sin_beta, alpha_prime, eps, mass) -> np.ndarray:
    s = np.asarray(sin_beta, dtype=float)
    a = np.asarray(alpha_prime, dtype=float)
    M = np.asarray(mass, dtype=float)
    s, a, M = np.broadcast_arrays(s, a, M)

    xi = 2.0 * a * eps * M / s**2
    if np.any(np.abs(xi) >= 1.0):
        raise ExpansionDomainError(f"|xi| >= 1 (max {float(np.max(np.abs(xi))):.4f})")

    base = eps * M * M / s
    small = np.abs(xi) < SERIES_XI

    x2 = xi * xi
    series = np.zeros_like(xi)
    for c in _SERIES[::-1]:
        series = series * x2 + c
    series = base * series

    a_safe = np.where(small, 1.0, a)
    xi_safe = np.where(small, 0.5, xi)
    closed = (s**3 / (3.0 * a_safe**2 * eps)) * (
        (1.0 + xi_safe) ** 1.5 + (1.0 - xi_safe) ** 1.5 - 2.0
    )
    return np.where(small, series, closed)


# -----------------------------
# Frame operations
# -----------------------------


def mass_of_length(fr: RayFrame, t: float) -> float:
    if not fr.sin_beta - t * fr.alpha_prime > 0:
        raise OutOfRangeError(
            f"t={t} leaves the monotone range (sin beta - t alpha' = {fr.sin_beta - t * fr.alpha_prime})"
        )
    return float(mass_of_length_array(fr.sin_beta, fr.alpha_prime, fr.epsilon, t))


def length_of_mass(fr: RayFrame, m: float) -> float:
    return float(length_of_mass_array(fr.sin_beta, fr.alpha_prime, fr.epsilon, m))


def per_ray_cost_exact(fr: RayFrame) -> float:
    return float(per_ray_cost_array(fr.sin_beta, fr.alpha_prime, fr.epsilon, fr.mass))


def per_ray_cost_series(fr: RayFrame) -> RayCostSeries:
    """Leading and bending terms of the per-ray cost plus the eps^5 remainder bound."""
    s, a, eps, M = fr.sin_beta, fr.alpha_prime, fr.epsilon, fr.mass
    leading = eps * M**2 / s
    bending = eps**3 * a**2 * M**4 / (4.0 * s**5)
    remainder_bound = (7.0 / 9.0) * M**6 * a**4 * eps**5 / s**9
    exact = per_ray_cost_exact(fr)

    # every Taylor coefficient is positive, so the remainder is too
    if exact < (leading + bending) * (1.0 - 1e-14):
        raise ConsistencyError(
            f"per-ray cost {exact!r} below leading + bending {leading + bending!r}"
        )
    return RayCostSeries(
        leading=leading, bending=bending, remainder_bound=remainder_bound, exact=exact
    )


def lower_bound_integrand(fr: RayFrame) -> LowerBoundTerms:
    s, a, eps, M = fr.sin_beta, fr.alpha_prime, fr.epsilon, fr.mass
    return LowerBoundTerms(
        thickness_penalty=(M - 1.0) ** 2 / eps**2,
        angle_penalty=(1.0 / s - 1.0) * M**2 / eps**2,
        bending_term=(1.0 / (4.0 * s)) * (M / s) ** 4 * a**2,
    )


def lower_bound_functional(sin_beta, alpha_prime, mass, eps: float, ds) -> float:
    """Integrate the lower-bound integrand over a periodic boundary.

    ds is the arclength element, a scalar for uniform sampling or one value per sample.
    """
    s = np.asarray(sin_beta, dtype=float)
    a = np.asarray(alpha_prime, dtype=float)
    M = np.asarray(mass, dtype=float)
    w = np.asarray(ds, dtype=float)
    density = (
        (M - 1.0) ** 2 / eps**2
        + (1.0 / s - 1.0) * M**2 / eps**2
        + (1.0 / (4.0 * s)) * (M / s) ** 4 * a**2
    )
    shape = np.broadcast(s, a, M, w).shape
    return math.fsum(np.broadcast_to(density * w, shape).ravel())
