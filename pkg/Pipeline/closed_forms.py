# Pipeline/closed_forms.py
from __future__ import annotations

import math
from typing import Tuple

from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from Domain.ring import RingConfig, StripConfig
from Shared.errors import RingBoundsError


# -----------------------------
# Ring family
# -----------------------------


def ring_radii(R: float, t: float) -> RingConfig:
    if not (0 < t < R):
        raise RingBoundsError(f"ring needs 0 < t < R, got R={R}, t={t}")
    r1, r4 = R - t, R + t
    r2 = math.sqrt(0.5 * (R * R + r1 * r1))
    r3 = math.sqrt(0.5 * (R * R + r4 * r4))
    return RingConfig(R=R, r1=r1, r2=r2, r3=r3, r4=r4)


def ring_d1_exact(cfg: RingConfig) -> float:
    """Radial monotone transport: u on (r2, R) moves inward onto (r1, r2), u on (R, r3)
    moves outward onto (r3, r4).

    inner = (2 pi/3)[R^3 + r1^3 - 2 r2^3], outer = (2 pi/3)[R^3 + r4^3 - 2 r3^3]
    """
    R, r1, r2, r3, r4 = cfg.R, cfg.r1, cfg.r2, cfg.r3, cfg.r4
    inner = R**3 + r1**3 - 2.0 * r2**3
    outer = R**3 + r4**3 - 2.0 * r3**3
    return (2.0 * math.pi / 3.0) * (inner + outer)


def ring_d1_quadrature(cfg: RingConfig) -> float:
    """Same quantity by adaptive quadrature of int 2 pi r |r - S(r)| dr."""
    R, r1, r2, r3, r4 = cfg.R, cfg.r1, cfg.r2, cfg.r3, cfg.r4

    def inner(r: float) -> float:
        return 2.0 * math.pi * r * (r - math.sqrt(r * r - r2 * r2 + r1 * r1))

    def outer(r: float) -> float:
        return 2.0 * math.pi * r * (math.sqrt(r4 * r4 - r3 * r3 + r * r) - r)

    a, _ = quad(inner, r2, R, epsabs=0.0, epsrel=1e-13, limit=200)
    b, _ = quad(outer, R, r3, epsabs=0.0, epsrel=1e-13, limit=200)
    return a + b


def ring_energy_exact(cfg: RingConfig) -> float:
    """F1 = d1 + int |grad u| with interface 2 pi (r2 + r3)."""
    return ring_d1_exact(cfg) + cfg.interface


def ring_energy_asymptotic(R: float, t: float, eps: float = 1.0) -> float:
    """F/M ~ 2 + (t/eps - 2)^2 / 4 + eps^2 R^-2 / 4."""
    return 2.0 + 0.25 * (t / eps - 2.0) ** 2 + 0.25 * eps**2 / R**2


def ring_optimal_thickness(R: float) -> float:
    if not R > 1.0:
        raise RingBoundsError(f"thickness search needs R > 1, got {R}")

    def per_mass(t: float) -> float:
        cfg = ring_radii(R, t)
        return ring_energy_exact(cfg) / cfg.u_mass

    res = minimize_scalar(
        per_mass, bounds=(0.5, min(4.0, 0.5 * R)), method="bounded", options={"xatol": 1e-10}
    )
    return float(res.x)


# -----------------------------
# Strip and disc
# -----------------------------


def strip_energy(cfg: StripConfig) -> float:
    return (0.5 * cfg.t + 2.0 / cfg.t) * cfg.M + 2.0 * cfg.t


def strip_optimal_thickness() -> float:
    """argmin of the per-mass prefactor t/2 + 2/t."""
    return brentq(lambda t: 0.5 - 2.0 / (t * t), 0.1, 10.0, xtol=1e-15)


def strip_energy_argmin(M: float) -> float:
    """argmin over t including the 2t end term: 2 sqrt(M/(M + 4))."""
    return 2.0 * math.sqrt(M / (M + 4.0))


def disc_radius(M: float) -> float:
    return math.sqrt(M / math.pi)


def disc_energy(M: float) -> Tuple[float, float]:
    """u = disc of radius a, v = annulus a..a sqrt(2); returns (d1, interface)."""
    if not M > 0:
        raise ValueError(f"disc mass must be positive, got {M}")
    a = disc_radius(M)
    d1 = (2.0 * math.pi / 3.0) * (2.0**1.5 - 2.0) * a**3
    return d1, 2.0 * math.pi * a


def disc_d1_quadrature(M: float) -> float:
    a = disc_radius(M)
    # mass coordinate pi r^2 on u lands at pi (S^2 - a^2) on v
    val, _ = quad(
        lambda r: 2.0 * math.pi * r * (math.sqrt(a * a + r * r) - r),
        0.0,
        a,
        epsabs=0.0,
        epsrel=1e-13,
    )
    return val


def disc_total_energy(M: float) -> float:
    d1, interface = disc_energy(M)
    return d1 + interface


def disc_strip_crossover() -> float:
    """Mass above which the optimal strip (t = 2) beats the disc."""

    def gap(M: float) -> float:
        return strip_energy(StripConfig(t=2.0, M=M)) - disc_total_energy(M)

    return brentq(gap, 1.0, 1e4, xtol=1e-12)


# -----------------------------
# Rescaling x = eps y between (eps, u) and (1, u~)
# -----------------------------


def rescale_to_unit(eps: float, mass: float, d1: float, perimeter: float) -> Tuple[float, float, float]:
    """(M, d1, P) at scale eps -> (M~, d1~, P~) at scale 1."""
    return mass / eps, d1 / eps**2, perimeter / eps


def energy_from_unit(eps: float, F1: float) -> float:
    """F_eps(u, v) = eps F_1(u~, v~)."""
    return eps * F1


def rescaled_G(eps: float, F1: float, M1: float) -> float:
    """G_eps = (F_eps - 2M)/eps^2 expressed through the unit-scale pair."""
    return (F1 - 2.0 * M1) / eps


def circle_recovery_ring(R: float, eps: float) -> RingConfig:
    """Unit-scale ring realised by the recovery pair around a circle of radius R.

    u fills R - eps < r < R + eps; the two sides' rays meet at sqrt(R^2 - eps^2).
    """
    return RingConfig.from_interfaces(
        split=math.sqrt(R * R - eps * eps) / eps,
        r2=(R - eps) / eps,
        r3=(R + eps) / eps,
    )


def circle_G_from_ring(R: float, eps: float) -> float:
    cfg = circle_recovery_ring(R, eps)
    return rescaled_G(eps, ring_energy_exact(cfg), cfg.u_mass)
