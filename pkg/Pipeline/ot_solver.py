# Pipeline/ot_solver.py
from __future__ import annotations

import logging
import math
from typing import Callable, Literal, Optional, Tuple

import numpy as np
import ot
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components
from scipy.spatial.distance import cdist

from Domain.density_field import DensityField
from Domain.measure import DiscreteMeasure, DualPotential, TransportPlan
from Shared import BALANCE_RTOL, DUAL_ATOL, MARGINAL_RTOL, SOLVER_CAPACITY, SOLVER_MAX_ITER
from Shared.errors import (
    BalanceError,
    CapacityError,
    ConsistencyError,
    InvalidPotentialError,
    UnsupportedExponentError,
)

logger = logging.getLogger(__name__)

_CHUNK = 2048


# -----------------------------
# Measures
# -----------------------------


def field_to_measure(f: DensityField) -> DiscreteMeasure:
    """One atom per occupied cell, at the cell center, weight h^2/eps (row-major order)."""
    if f.count == 0:
        return DiscreteMeasure.empty()
    X, Y = f.grid.cell_centers()
    occ = f.occupancy
    points = np.column_stack([X[occ], Y[occ]])
    weights = np.full(points.shape[0], f.h * f.h / f.epsilon)
    return DiscreteMeasure(points=points, weights=weights)


def dilate_measure(mu: DiscreteMeasure, lam: float) -> DiscreteMeasure:
    return DiscreteMeasure(points=mu.points * lam, weights=mu.weights)


# -----------------------------
# Primal
# -----------------------------


def _check_balance(ta: float, tb: float) -> None:
    if abs(ta - tb) > BALANCE_RTOL * max(ta, tb):
        raise BalanceError(f"unbalanced masses: total(mu)={ta!r}, total(nu)={tb!r}")


def solve_transport(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    p: float = 1.0,
    capacity: int = SOLVER_CAPACITY,
    max_iter: int = SOLVER_MAX_ITER,
) -> TransportPlan:
    """Exact optimal plan for ground cost |x - y|^p (network simplex)."""
    if not p >= 1:
        raise UnsupportedExponentError(f"exponent p must be >= 1, got {p}")
    n, m = len(mu), len(nu)
    if n > capacity or m > capacity:
        raise CapacityError(f"{n} x {m} atoms exceeds solver capacity {capacity}")

    ta, tb = mu.total, nu.total
    if n == 0 and m == 0:
        return TransportPlan(sources=[], targets=[], masses=[], cost=0.0, p=p)
    _check_balance(ta, tb)

    a = np.ascontiguousarray(mu.weights, dtype=np.float64)
    # absorb the (<= 1e-12 relative) imbalance so the simplex sees a feasible problem
    b = np.ascontiguousarray(nu.weights * (ta / tb), dtype=np.float64)
    C = cdist(mu.points, nu.points)
    if p != 1:
        C = C**p

    logger.debug("solve_transport(): %d x %d atoms, p=%g", n, m, p)
    G, log = ot.emd(a, b, C, numItermax=max_iter, log=True)
    if log.get("warning"):
        raise ConsistencyError(f"network simplex did not reach optimality: {log['warning']}")

    i, j = np.nonzero(G > 0)
    masses = G[i, j]
    cost = math.fsum(masses * C[i, j])

    rows = np.bincount(i, weights=masses, minlength=n)
    cols = np.bincount(j, weights=masses, minlength=m)
    err = max(np.max(np.abs(rows - a)), np.max(np.abs(cols - nu.weights)))
    if err > 1e3 * MARGINAL_RTOL * ta:
        raise ConsistencyError(f"plan marginals off by {err:.3e} (total {ta:.6g})")
    if err > MARGINAL_RTOL * ta:
        logger.warning("solve_transport(): marginal residual %.3e above %.0e relative", err, MARGINAL_RTOL)

    return TransportPlan(
        sources=i,
        targets=j,
        masses=masses,
        cost=cost,
        p=p,
        source_dual=np.asarray(log["u"], dtype=float),
        target_dual=np.asarray(log["v"], dtype=float),
    )


def wasserstein_distance(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 1.0) -> float:
    return solve_transport(mu, nu, p=p).distance


# -----------------------------
# Dual
# -----------------------------


def _propagate_duals(
    plan: TransportPlan, mu: DiscreteMeasure, nu: DiscreteMeasure
) -> Optional[np.ndarray]:
    """Target duals from reduced-cost equalities on the positive-entry graph.

    Only a connected support fixes the duals up to one constant; returns None
    when the graph splits (degenerate plan), since the relative offsets of the
    components are then not determined by the entries alone.
    """
    n, m = len(mu), len(nu)
    k = plan.masses.shape[0]
    edge_ids = np.arange(1, k + 1, dtype=np.int64)
    rows = np.concatenate([plan.sources, n + plan.targets])
    cols = np.concatenate([n + plan.targets, plan.sources])
    adj = csr_matrix((np.concatenate([edge_ids, edge_ids]), (rows, cols)), shape=(n + m, n + m))

    n_comp, _ = connected_components(adj, directed=False)
    if n_comp > 1:
        return None

    c = np.linalg.norm(mu.points[plan.sources] - nu.points[plan.targets], axis=1)
    pot = np.full(n + m, np.nan)  # alpha on sources, beta on targets
    order, preds = breadth_first_order(adj, 0, directed=False, return_predecessors=True)
    pot[0] = 0.0
    for node in order[1:]:
        prev = preds[node]
        e = int(adj[prev, node]) - 1
        # alpha_i + beta_j = c_ij on every basis edge
        pot[node] = c[e] - pot[prev]
    return pot[n:]


def _target_duals(plan: TransportPlan, mu: DiscreteMeasure, nu: DiscreteMeasure) -> np.ndarray:
    if plan.target_dual is not None and plan.target_dual.shape == (len(nu),):
        return plan.target_dual
    beta = _propagate_duals(plan, mu, nu)
    if beta is not None:
        return beta
    # Any optimal dual is complementary to every optimal plan, so the duals of a
    # fresh solve certify the given entries iff those entries are optimal.
    logger.info("recover_dual(): support graph is disconnected, re-solving for duals")
    return solve_transport(mu, nu, p=1.0).target_dual


def _c_transform(beta: np.ndarray, targets: np.ndarray, z: np.ndarray) -> np.ndarray:
    out = np.empty(z.shape[0])
    for s in range(0, z.shape[0], _CHUNK):
        out[s : s + _CHUNK] = np.min(cdist(z[s : s + _CHUNK], targets) - beta[None, :], axis=1)
    return out


def recover_dual(plan: TransportPlan, mu: DiscreteMeasure, nu: DiscreteMeasure) -> DualPotential:
    """Lipschitz-1 Kantorovich potential certifying an optimal p = 1 plan.

    phi(z) = min_j (|z - y_j| - beta_j) is 1-Lipschitz everywhere; with beta optimal
    it satisfies phi(x) - phi(y) = |x - y| on every plan entry.
    """
    if plan.p != 1:
        raise UnsupportedExponentError(f"dual recovery needs p = 1, plan has p = {plan.p}")
    if len(mu) == 0:
        return DualPotential(source_values=[], target_values=[])

    beta = _target_duals(plan, mu, nu)
    phi_x = _c_transform(beta, nu.points, mu.points)
    phi_y = _c_transform(beta, nu.points, nu.points)
    phi = DualPotential(source_values=phi_x, target_values=phi_y)

    i, j = plan.sources, plan.targets
    c = np.linalg.norm(mu.points[i] - nu.points[j], axis=1)
    slack = np.abs(phi_x[i] - phi_y[j] - c)
    scale = max(1.0, float(np.max(c)))
    if slack.size and float(np.max(slack)) > DUAL_ATOL * scale:
        raise ConsistencyError(
            f"complementary slackness fails by {float(np.max(slack)):.3e}; plan is not optimal"
        )
    gap = plan.cost - kantorovich_value(phi, mu, nu)
    if abs(gap) > DUAL_ATOL * max(1.0, abs(plan.cost)):
        raise ConsistencyError(f"duality gap {gap:.3e} after reconstruction")
    return phi


def kantorovich_value(phi: DualPotential, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """K(phi) = sum phi(x_i) a_i - sum phi(y_j) b_j."""
    return math.fsum(phi.source_values * mu.weights) - math.fsum(phi.target_values * nu.weights)


def duality_check(
    phi: DualPotential, mu: DiscreteMeasure, nu: DiscreteMeasure, cost: float
) -> float:
    """Return cost - K(phi) after checking that phi is 1-Lipschitz on all atoms."""
    if phi.source_values.shape != (len(mu),) or phi.target_values.shape != (len(nu),):
        raise ValueError("potential must be defined on every source and target atom")

    z = np.vstack([mu.points, nu.points])
    vals = np.concatenate([phi.source_values, phi.target_values])
    for s in range(0, z.shape[0], _CHUNK):
        d = cdist(z[s : s + _CHUNK], z)
        excess = np.abs(vals[s : s + _CHUNK, None] - vals[None, :]) - d
        worst = float(np.max(excess)) if excess.size else 0.0
        if worst > DUAL_ATOL:
            raise InvalidPotentialError(f"potential violates Lipschitz-1 by {worst:.3e}")

    return cost - kantorovich_value(phi, mu, nu)


# -----------------------------
# 1-D monotone rearrangement
# -----------------------------

Orientation = Literal["nondecreasing", "nonincreasing"]


def monotone_transport_1d(
    edges: np.ndarray,
    fplus: np.ndarray,
    fminus: np.ndarray,
    orientation: Orientation = "nondecreasing",
    ground: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    nodes: int = 8,
) -> Tuple[np.ndarray, float]:
    """CDF-matching map pushing f+ onto f-, and its transport cost.

    Densities are bin values on ``edges`` (piecewise constant), so both CDFs and
    the rearrangement are exact. ``ground`` maps coordinates to physical positions
    (e.g. mass coordinate to ray length); cost = int |g(T(x)) - g(x)| f+(x) dx by
    Gauss-Legendre quadrature per bin.

    Returns:
      (T at bin centers, cost)
    """
    edges = np.asarray(edges, dtype=float)
    fp = np.asarray(fplus, dtype=float)
    fm = np.asarray(fminus, dtype=float)
    n = edges.shape[0] - 1
    if fp.shape != (n,) or fm.shape != (n,):
        raise ValueError("densities must have one value per bin")
    dx = np.diff(edges)
    if np.any(dx <= 0):
        raise ValueError("bin edges must be strictly increasing")
    if np.any(fp < 0) or np.any(fm < 0):
        raise ValueError("densities must be nonnegative")
    if orientation not in ("nondecreasing", "nonincreasing"):
        raise ValueError(f"Unknown orientation: {orientation}")

    Fp = np.concatenate([[0.0], np.cumsum(fp * dx)])
    Fm = np.concatenate([[0.0], np.cumsum(fm * dx)])
    tp, tm = math.fsum(fp * dx), math.fsum(fm * dx)
    if abs(tp - tm) > 1e-10 * max(tp, tm, np.finfo(float).tiny):
        raise BalanceError(f"unbalanced 1-D densities: {tp!r} vs {tm!r}")
    Fp[-1], Fm[-1] = tp, tp

    def quantile(q: np.ndarray) -> np.ndarray:
        q = np.clip(q, 0.0, tp)
        k = np.clip(np.searchsorted(Fm, q, side="left"), 1, n)
        F0, F1 = Fm[k - 1], Fm[k]
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(F1 > F0, (q - F0) / (F1 - F0), 0.0)
        return edges[k - 1] + frac * (edges[k] - edges[k - 1])

    def T(x: np.ndarray) -> np.ndarray:
        q = np.interp(x, edges, Fp)
        if orientation == "nonincreasing":
            q = tp - q
        return quantile(q)

    g = ground if ground is not None else (lambda x: x)

    xg, wg = np.polynomial.legendre.leggauss(nodes)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * dx
    xq = mid[:, None] + half[:, None] * xg[None, :]
    integrand = np.abs(g(T(xq)) - g(xq)) * fp[:, None]
    cost = math.fsum((integrand * wg[None, :] * half[:, None]).ravel())

    return T(mid), cost
