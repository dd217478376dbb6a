# Pipeline/oracle_suite.py
# Fast self-checks behind `main_lab.py --check`. Each check compares a lab result with an
# independent oracle (closed form, quadrature, LP) and reports (name, passed, detail).
from __future__ import annotations

import logging
import math
from typing import Callable, List, Tuple

import numpy as np
from pydantic import BaseModel
from scipy.integrate import quad
from scipy.optimize import linprog

from Domain.curve import CurveSystem, elastica_energy
from Domain.curve_shapes import circle, fourier_circle
from Domain.experiment import ResultRow
from Domain.measure import DiscreteMeasure
from Domain.ray_frame import RayFrame
from Domain.ring import StripConfig
from Pipeline.closed_forms import (
    circle_G_from_ring,
    disc_d1_quadrature,
    ring_d1_quadrature,
    ring_energy_asymptotic,
    ring_energy_exact,
    ring_radii,
    strip_energy,
    strip_optimal_thickness,
)
from Pipeline.experiments import fit_loglog_slope, richardson_limit
from Pipeline.ot_solver import kantorovich_value, recover_dual, solve_transport
from Pipeline.ray_calculus import length_of_mass, per_ray_cost_series
from Pipeline.recovery_builder import (
    build_recovery_pair,
    recovery_energy_semianalytic,
    signed_distance_to_curve,
)
from Shared.errors import LabError

logger = logging.getLogger(__name__)

SEED = 20240611


class OracleResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""


# -----------------------------
# Checks
# -----------------------------


def check_strip() -> Tuple[bool, str]:
    worst = max(abs(strip_energy(StripConfig(t=2.0, M=M)) - (2.0 * M + 4.0)) for M in (1.0, 10.0, 100.0))
    t_star = strip_optimal_thickness()
    return worst == 0.0 and abs(t_star - 2.0) < 1e-9, f"max |F - (2M+4)| = {worst:.1e}, argmin t = {t_star!r}"


def check_ring_asymptotics() -> Tuple[bool, str]:
    Rs = (10.0, 20.0, 40.0, 80.0)
    res = []
    for R in Rs:
        cfg = ring_radii(R, 2.0)
        res.append(abs(ring_energy_exact(cfg) / cfg.u_mass - ring_energy_asymptotic(R, 2.0)))
    # at t = 2 the odd orders cancel: residual = R^-4 / 6 + O(R^-6)
    slope = fit_loglog_slope(Rs, res)
    return abs(slope + 4.0) <= 0.3, f"residual slope in R = {slope:.3f}"


def check_ray_calculus(n: int = 200) -> Tuple[bool, str]:
    rng = np.random.default_rng(SEED)
    worst_rel = 0.0
    bad_remainder = 0
    for _ in range(n):
        s = rng.uniform(0.3, 1.0)
        M = rng.uniform(0.1, 1.0)
        eps = rng.uniform(0.01, 0.2)
        xi = rng.uniform(-0.9, 0.9)
        fr = RayFrame(sin_beta=s, alpha_prime=xi * s * s / (2.0 * eps * M), mass=M, epsilon=eps)

        oracle, _ = quad(
            lambda m: length_of_mass(fr, m) - length_of_mass(fr, m - M),
            0.0, M, epsabs=0.0, epsrel=1e-13, limit=200,
        )
        ser = per_ray_cost_series(fr)
        worst_rel = max(worst_rel, abs(ser.exact - oracle) / oracle)
        floor = -1e-14 * ser.leading
        if not (floor <= ser.remainder <= ser.remainder_bound + 1e-14 * ser.leading):
            bad_remainder += 1
    ok = worst_rel <= 1e-10 and bad_remainder == 0
    return ok, f"max rel err vs quadrature {worst_rel:.2e}, remainder violations {bad_remainder}"


def _lp_transport_cost(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    n, m = len(mu), len(nu)
    C = np.linalg.norm(mu.points[:, None, :] - nu.points[None, :, :], axis=2)
    A = np.zeros((n + m, n * m))
    for i in range(n):
        A[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        A[n + j, j::m] = 1.0
    b = np.concatenate([mu.weights, nu.weights])
    res = linprog(C.ravel(), A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    return float(res.fun)


def check_transport(n: int = 50) -> Tuple[bool, str]:
    rng = np.random.default_rng(SEED)
    worst_cost = 0.0
    worst_gap = 0.0
    for _ in range(n):
        k, l = rng.integers(1, 6, size=2)
        a = rng.integers(1, 10, size=k).astype(float)
        b = rng.integers(1, 10, size=l).astype(float)
        b *= a.sum() / b.sum()
        mu = DiscreteMeasure(points=rng.uniform(0, 1, (k, 2)), weights=a)
        nu = DiscreteMeasure(points=rng.uniform(0, 1, (l, 2)), weights=b)
        plan = solve_transport(mu, nu)
        lp = _lp_transport_cost(mu, nu)
        worst_cost = max(worst_cost, abs(plan.cost - lp) / max(1.0, lp))
        phi = recover_dual(plan, mu, nu)
        worst_gap = max(worst_gap, abs(plan.cost - kantorovich_value(phi, mu, nu)))
    ok = worst_cost <= 1e-9 and worst_gap <= 1e-9
    return ok, f"max |cost - LP| {worst_cost:.1e}, max duality gap {worst_gap:.1e}"


def check_circle_convergence() -> Tuple[bool, str]:
    c = circle(1.0, 2048)
    W = elastica_energy(CurveSystem(curves=[c]))
    ladder = (0.1, 0.05, 0.025, 0.0125)
    G = [recovery_energy_semianalytic(c, eps).G for eps in ladder]
    order = fit_loglog_slope(ladder, [g - W for g in G])
    limit = richardson_limit(G[-2], G[-1])
    ok = all(g >= W for g in G) and abs(order - 2.0) <= 0.2 and abs(limit - math.pi) <= 5e-3 * math.pi
    return ok, f"order {order:.3f}, limit {limit:.8f}, min gap {min(G) - W:.3e}"


def check_circle_ring() -> Tuple[bool, str]:
    c = circle(1.0, 2**15)
    worst = 0.0
    for eps in (0.1, 0.05):
        semi = recovery_energy_semianalytic(c, eps).G
        ring = circle_G_from_ring(1.0, eps)
        worst = max(worst, abs(semi - ring) / abs(ring))
    return worst <= 1e-8, f"max rel diff {worst:.2e}"


def check_recovery_pairs(n: int = 20) -> Tuple[bool, str]:
    rng = np.random.default_rng(SEED)
    eps = 0.05
    h = 0.25 * eps
    failures = []
    for trial in range(n):
        modes = [(k, rng.uniform(-0.03, 0.03), rng.uniform(-0.03, 0.03)) for k in (2, 3, 4)]
        c = fourier_circle(1.0, modes, 1024)
        pair = build_recovery_pair(c, eps, h)
        X, Y = pair.u.grid.cell_centers()
        d, _, _ = signed_distance_to_curve(c, X, Y)
        support = pair.u.occupancy | pair.v.occupancy
        mass_err = abs(pair.mass - pair.target_mass) / pair.target_mass
        if (
            np.any(pair.u.occupancy & pair.v.occupancy)
            or pair.u.count != pair.v.count
            or np.any(np.abs(d[support]) > 3.0 * eps)
            or mass_err > 0.02
        ):
            failures.append(f"trial {trial}: mass err {mass_err:.3e}")
    return not failures, "; ".join(failures) or f"{n} pairs admissible"


CHECKS: List[Tuple[str, Callable[[], Tuple[bool, str]]]] = [
    ("strip energy", check_strip),
    ("ring asymptotics", check_ring_asymptotics),
    ("per-ray calculus", check_ray_calculus),
    ("transport vs LP", check_transport),
    ("circle convergence", check_circle_convergence),
    ("circle-ring consistency", check_circle_ring),
    ("recovery pair invariants", check_recovery_pairs),
]


def run_oracle_suite() -> List[OracleResult]:
    out: List[OracleResult] = []
    for name, fn in CHECKS:
        try:
            passed, detail = fn()
        except LabError as e:
            passed, detail = False, f"{type(e).__name__}: {e}"
        logger.info("run_oracle_suite(): %s -> %s (%s)", name, "ok" if passed else "FAIL", detail)
        out.append(OracleResult(name=name, passed=passed, detail=detail))
    return out


# -----------------------------
# Row audit (used after every CLI run)
# -----------------------------

_AUDIT_RTOL = 1e-8


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def audit_rows(kind: str, rows: List[ResultRow]) -> List[str]:
    """Cross-check result rows against oracles that do not share their code path.

    grid-validation: d1_exact against the radial quadrature of the ring
    ring-sweep:      F against quadrature d1 + 2 pi (r2 + r3)
    scaling:         disc_d1 against the squared-radius quadrature
    convergence:     lower_bound <= G and d1/eps <= upper_bound on semianalytic rows
    """
    problems: List[str] = []
    for r in rows:
        if r.error is not None or r.experiment.endswith(":summary"):
            continue
        v = r.get
        if kind == "grid-validation" and v("d1_exact") is not None:
            ring = ring_radii(v("R"), v("t"))
            if _rel(v("d1_exact"), ring_d1_quadrature(ring)) > _AUDIT_RTOL:
                problems.append(f"{r.experiment}: d1_exact disagrees with quadrature")
        elif kind == "ring-sweep" and v("F") is not None:
            ring = ring_radii(v("R"), v("t"))
            F = ring_d1_quadrature(ring) + 2.0 * math.pi * (ring.r2 + ring.r3)
            if _rel(v("F"), F) > _AUDIT_RTOL:
                problems.append(f"{r.experiment}: F disagrees with quadrature")
        elif kind == "scaling" and v("disc_d1") is not None:
            if _rel(v("disc_d1"), disc_d1_quadrature(v("mass"))) > _AUDIT_RTOL:
                problems.append(f"{r.experiment}: disc_d1 disagrees with quadrature")
        elif kind == "convergence" and v("h") is None and v("lower_bound") is not None:
            G, lb = v("G"), v("lower_bound")
            if G < lb - 1e-9 * max(1.0, abs(lb)):
                problems.append(f"{r.experiment}: G = {G!r} below the lower bound {lb!r}")
            if v("bound_gap") < -1e-12 * v("upper_bound"):
                problems.append(f"{r.experiment}: d1/eps above the upper bound")
    return problems
