# Pipeline/experiments.py
from __future__ import annotations

import logging
import math
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from Domain.curve import CurveSystem, elastica_energy
from Domain.density_field import DensityField, GridGeometry, scaled_perimeter, total_mass
from Domain.experiment import ExperimentConfig, ResultRow
from Domain.ring import RingConfig, StripConfig
from Pipeline.closed_forms import (
    disc_energy,
    disc_strip_crossover,
    ring_d1_exact,
    ring_energy_asymptotic,
    ring_energy_exact,
    ring_optimal_thickness,
    ring_radii,
    strip_energy,
)
from Pipeline.ot_solver import field_to_measure, solve_transport
from Pipeline.recovery_builder import (
    build_recovery_pair,
    equalize_masses,
    recovery_energy_grid,
    recovery_energy_semianalytic,
    recovery_lower_bound,
    recovery_upper_bound,
)
from Shared.errors import InvariantFailure, LabError
from Shared.workflow import ordered_map

logger = logging.getLogger(__name__)

Values = Dict[str, Optional[float]]


# -----------------------------
# Fits
# -----------------------------


def fit_orders(eps: Sequence[float], gaps: Sequence[float]) -> List[Optional[float]]:
    """Observed order between consecutive entries: log(gap_i-1/gap_i) / log(eps_i-1/eps_i).

    For an eps-halving ladder this is log2 of the gap ratio. The first entry is None.
    """
    out: List[Optional[float]] = [None]
    for k in range(1, len(eps)):
        g0, g1 = gaps[k - 1], gaps[k]
        if g0 > 0 and g1 > 0 and eps[k - 1] != eps[k]:
            out.append(math.log(g0 / g1) / math.log(eps[k - 1] / eps[k]))
        else:
            out.append(None)
    return out


def fit_loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log|y| against log x."""
    coeffs = np.polyfit(np.log(np.asarray(x, float)), np.log(np.abs(np.asarray(y, float))), 1)
    return float(coeffs[0])


def richardson_limit(G_coarse: float, G_fine: float, ratio: float = 2.0, order: float = 2.0) -> float:
    return G_fine + (G_fine - G_coarse) / (ratio**order - 1.0)


def fit_remainder_constant(
    residuals: Sequence[float], t: Sequence[float], R: Sequence[float]
) -> float:
    """Smallest C with residual <= C (|t - 2|^3 + R^-3) on every sample."""
    res = np.abs(np.asarray(residuals, float))
    scale = np.abs(np.asarray(t, float) - 2.0) ** 3 + np.asarray(R, float) ** -3.0
    return float(np.max(res / scale))


# -----------------------------
# Row plumbing
# -----------------------------


def _timed_row(
    experiment: str, base: Values, fn: Callable[[], Values]
) -> ResultRow:
    t0 = time.perf_counter()
    try:
        values, error = {**base, **fn()}, None
    except LabError as e:
        logger.warning("%s: %s", experiment, e)
        values, error = dict(base), f"{type(e).__name__}: {e}"
    try:
        return ResultRow(
            experiment=experiment, values=values, error=error, wall_time=time.perf_counter() - t0
        )
    except ValidationError as e:
        # non-finite result column
        raise InvariantFailure(f"{experiment}: {e}") from e


# -----------------------------
# Convergence
# -----------------------------


def run_convergence_study(cfg: ExperimentConfig) -> List[ResultRow]:
    """G(eps) of the recovery pair against W of the curve, over the eps ladder.

    Rows without h are semianalytic; rows with h repeat the evaluation on a grid.
    A final summary row carries the log-log order and the Richardson limit.
    """
    curve = cfg.curve.build(cfg.samples)
    W = elastica_energy(CurveSystem(curves=[curve]))
    exp = cfg.experiment_id
    logger.info("run_convergence_study(): %s, %d eps values, W=%.12g", exp, len(cfg.eps), W)

    def semianalytic(eps: float) -> ResultRow:
        def compute() -> Values:
            e = recovery_energy_semianalytic(curve, eps)
            bound = recovery_upper_bound(curve, eps)
            return {
                "F": e.F,
                "M": e.mass,
                "W": W,
                "gap": e.G - W,
                "d1": e.d1,
                "perimeter": e.interface,
                "lower_bound": recovery_lower_bound(curve, eps),
                "upper_bound": bound,
                "bound_gap": bound - e.d1 / eps,
            }

        return _timed_row(f"{exp}:eps={eps!r}", {"eps": eps}, compute)

    rows = ordered_map(semianalytic, list(cfg.eps), cfg.max_workers)

    ok = [r for r in rows if r.error is None]
    orders = fit_orders([r.get("eps") for r in ok], [r.get("gap") for r in ok])
    for r, order in zip(ok, orders):
        r.values["order"] = order

    summary: Values = {}
    if len(ok) >= 2:
        eps_ok = [r.get("eps") for r in ok]
        summary["order"] = fit_loglog_slope(eps_ok, [r.get("gap") for r in ok])
        a, b = ok[-2], ok[-1]
        summary["limit"] = richardson_limit(a.get("G"), b.get("G"), ratio=a.get("eps") / b.get("eps"))
        summary["W"] = W

    grid_params = [(eps, h) for eps in cfg.eps for h in cfg.spacings]

    def gridded(param: Tuple[float, float]) -> ResultRow:
        eps, h = param

        def compute() -> Values:
            pair = build_recovery_pair(curve, eps, h)
            g = recovery_energy_grid(pair, smoothing=cfg.smoothing, capacity=cfg.capacity)
            return {
                "F": g.F,
                "M": g.mass,
                "W": W,
                "gap": g.G - W,
                "d1": g.d1,
                "perimeter": g.perimeter,
                "atoms": float(g.atoms),
                "toggled": float(pair.toggled_cells),
            }

        return _timed_row(f"{exp}:eps={eps!r}:h={h!r}", {"eps": eps, "h": h}, compute)

    rows += ordered_map(gridded, grid_params, cfg.max_workers)
    rows.append(ResultRow(experiment=f"{exp}:summary", values=summary))
    return rows


# -----------------------------
# Grid validation (rings at eps = 1)
# -----------------------------


def rasterize_ring(cfg: RingConfig, h: float) -> Tuple[DensityField, DensityField, int]:
    """u on r2 < r < r3, v on the two outer annuli, counts equalized at the v edges."""
    grid = GridGeometry.around((-cfg.r4, -cfg.r4, cfg.r4, cfg.r4), h, pad=4)
    X, Y = grid.cell_centers()
    r = np.hypot(X, Y)
    u_occ = (r > cfg.r2) & (r < cfg.r3)
    v_occ = ((r > cfg.r1) & (r <= cfg.r2)) | ((r >= cfg.r3) & (r < cfg.r4))
    beyond = np.where(r >= cfg.R, r - cfg.r4, cfg.r1 - r)
    v_occ, toggled = equalize_masses(u_occ, v_occ, beyond, beyond <= 3.0 * h)
    return (
        DensityField.on_grid(grid, 1.0, u_occ),
        DensityField.on_grid(grid, 1.0, v_occ),
        toggled,
    )


def run_grid_validation(cfg: ExperimentConfig) -> List[ResultRow]:
    """Rasterized rings against the closed-form d1 and interface length."""
    params = [(R, t, h) for R in cfg.R for t in cfg.t for h in cfg.spacings]
    exp = cfg.experiment_id
    logger.info("run_grid_validation(): %s, %d rows", exp, len(params))

    def one(param: Tuple[float, float, float]) -> ResultRow:
        R, t, h = param

        def compute() -> Values:
            ring = ring_radii(R, t)
            d1_exact = ring_d1_exact(ring)
            u, v, toggled = rasterize_ring(ring, h)
            plan = solve_transport(field_to_measure(u), field_to_measure(v), capacity=cfg.capacity)
            perimeter = scaled_perimeter(u, "contour-length", smoothing=cfg.smoothing)
            return {
                "F": plan.cost + perimeter,
                "M": total_mass(u),
                "atoms": float(u.count),
                "d1": plan.cost,
                "d1_exact": d1_exact,
                "d1_rel_error": abs(plan.cost - d1_exact) / d1_exact,
                "perimeter": perimeter,
                "perimeter_exact": ring.interface,
                "perimeter_rel_error": abs(perimeter - ring.interface) / ring.interface,
                "toggled": float(toggled),
            }

        return _timed_row(f"{exp}:R={R!r}:t={t!r}:h={h!r}", {"R": R, "t": t, "h": h, "eps": 1.0}, compute)

    return ordered_map(one, params, cfg.max_workers)


# -----------------------------
# Scaling (disc vs strip)
# -----------------------------


def run_scaling_study(cfg: ExperimentConfig) -> List[ResultRow]:
    exp = cfg.experiment_id
    ladder = list(cfg.M)

    def one(M: float) -> ResultRow:
        def compute() -> Values:
            d1, interface = disc_energy(M)
            disc_F = d1 + interface
            strip_F = strip_energy(StripConfig(t=2.0, M=M))
            return {
                "disc_d1": d1,
                "disc_F": disc_F,
                "strip_F": strip_F,
                "strip_wins": 1.0 if strip_F < disc_F else 0.0,
            }

        return _timed_row(f"{exp}:M={M!r}", {"mass": M}, compute)

    rows = ordered_map(one, ladder, cfg.max_workers)

    ok = [r for r in rows if r.error is None]
    summary: Values = {"crossover": disc_strip_crossover()}
    if len(ok) >= 2:
        masses = [r.get("mass") for r in ok]
        summary["disc_exponent"] = fit_loglog_slope(masses, [r.get("disc_d1") for r in ok])
        summary["strip_exponent"] = fit_loglog_slope(masses, [r.get("strip_F") for r in ok])
    wins = [r.get("mass") for r in ok if r.get("strip_wins") == 1.0]
    summary["mass"] = min(wins) if wins else None
    rows.append(ResultRow(experiment=f"{exp}:summary", values=summary))
    return rows


# -----------------------------
# Ring sweep
# -----------------------------


def run_ring_sweep(cfg: ExperimentConfig) -> List[ResultRow]:
    """Exact F/M against 2 + (t - 2)^2/4 + R^-2/4 over the (R, t) grid."""
    exp = cfg.experiment_id
    params = [(R, t) for R in cfg.R for t in cfg.t]

    def one(param: Tuple[float, float]) -> ResultRow:
        R, t = param

        def compute() -> Values:
            ring = ring_radii(R, t)
            F = ring_energy_exact(ring)
            M = ring.u_mass
            asym = ring_energy_asymptotic(R, t)
            return {
                "F": F,
                "M": M,
                "F_per_M": F / M,
                "asymptotic": asym,
                "residual": abs(F / M - asym),
            }

        return _timed_row(f"{exp}:R={R!r}:t={t!r}", {"R": R, "t": t, "eps": 1.0}, compute)

    rows = ordered_map(one, params, cfg.max_workers)

    ok = [r for r in rows if r.error is None]
    summary: Values = {}
    if ok:
        summary["C_fit"] = fit_remainder_constant(
            [r.get("residual") for r in ok], [r.get("t") for r in ok], [r.get("R") for r in ok]
        )
    at_two = [r for r in ok if abs(r.get("t") - 2.0) < 1e-12]
    if len(at_two) >= 2:
        summary["slope_R"] = fit_loglog_slope(
            [r.get("R") for r in at_two], [r.get("residual") for r in at_two]
        )
    rows.append(ResultRow(experiment=f"{exp}:summary", values=summary))

    for R in sorted(set(cfg.R)):
        rows.append(
            _timed_row(f"{exp}:R={R!r}:argmin", {"R": R}, lambda R=R: {"t_opt": ring_optimal_thickness(R)})
        )
    return rows


RUNNERS: Dict[str, Callable[[ExperimentConfig], List[ResultRow]]] = {
    "convergence": run_convergence_study,
    "grid-validation": run_grid_validation,
    "scaling": run_scaling_study,
    "ring-sweep": run_ring_sweep,
}


def run_experiment(cfg: ExperimentConfig) -> List[ResultRow]:
    return RUNNERS[cfg.kind](cfg)
