"""
Exact optimal transport: Test Suite.

 Group 1: Primal solve
   1.  Identical measures have distance 0
   2.  Two sources into one target: 1 + sqrt 2
   3.  200 random instances (up to 12 cells) match exhaustive basis enumeration
   4.  200 random <=5x5 instances match the LP optimum (HiGHS)
   5.  Plan marginals reproduce the weights to 1e-12 relative
   6.  p = 2 reports cost^(1/2); p < 1 is rejected
   7.  Unbalanced masses and capacity overflow raise

 Group 2: Metric properties
   8.  Symmetry, triangle inequality, identity on 100 random triples
   9.  Dilation by lambda scales the p = 1 distance by lambda

 Group 3: Dual potentials
  10.  Single ray: phi(x) - phi(y) = |x - y|
  11.  mu = nu: K(phi) = 0 = cost
  12.  Random instances: duality gap below 1e-9
  13.  2000 x 2000 atoms: duality gap below 1e-9
  14.  Plans without solver duals (degenerate supports included) still certify
  15.  A plan reloaded from CSV certifies
  16.  A crossed, non-optimal plan raises ConsistencyError
  17.  phi = 0 gives gap = cost; constant shifts leave the gap unchanged
  18.  Linear 1-Lipschitz potentials satisfy weak duality
  19.  Lipschitz violation and p != 1 raise

 Group 4: Fields to measures
  20.  Empty field gives an empty measure
  21.  Single cell at the origin gives one atom at (0.5, 0.5)
  22.  Strip pair t = 2 on grid lines: d1 / M = 1

 Group 5: 1-D monotone rearrangement
  23.  [0,1] -> [1,2]: T(x) = x + 1, cost 1
  24.  f+ = f-: identity, cost 0
  25.  [0,1] -> [-1,0]: T(x) = x - 1, cost 1
  26.  Nonincreasing orientation reverses the map
  27.  Unbalanced densities raise BalanceError

 Group 6: CSV
  28.  Measure and plan CSV round trips
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from scipy.optimize import linprog

from Domain.density_field import DensityField, GridGeometry, rasterize_region
from Domain.measure import DiscreteMeasure, DualPotential, TransportPlan
from Pipeline.ot_solver import (
    dilate_measure,
    duality_check,
    field_to_measure,
    kantorovich_value,
    monotone_transport_1d,
    recover_dual,
    solve_transport,
    wasserstein_distance,
)
from Shared.errors import (
    BalanceError,
    CapacityError,
    ConsistencyError,
    InvalidPotentialError,
    UnsupportedExponentError,
)


# ── Shared fixtures ───────────────────────────────────────────────────────────

_SEED = 7

_TWO_TO_ONE = (
    DiscreteMeasure(points=[[0.0, 0.0], [1.0, 0.0]], weights=[1.0, 1.0]),
    DiscreteMeasure(points=[[0.0, 1.0]], weights=[2.0]),
)


def _random_pair(rng, n, m, total=None):
    """Integer weights with equal totals, points in the unit square."""
    a = (rng.integers(1, 6, size=n) + m).astype(float)
    if total is not None:
        a = 1.0 + rng.multinomial(int(total) - n, np.ones(n) / n).astype(float)
    b = 1.0 + rng.multinomial(int(a.sum()) - m, np.ones(m) / m).astype(float)
    mu = DiscreteMeasure(points=rng.uniform(0, 1, (n, 2)), weights=a)
    nu = DiscreteMeasure(points=rng.uniform(0, 1, (m, 2)), weights=b)
    return mu, nu


def _cost_matrix(mu, nu):
    return np.linalg.norm(mu.points[:, None, :] - nu.points[None, :, :], axis=2)


def _constraints(n, m):
    A = np.zeros((n + m, n * m))
    for i in range(n):
        A[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        A[n + j, j::m] = 1.0
    return A


def _enumerate_vertices(mu, nu):
    """Minimum cost over all basic solutions of the transportation polytope."""
    n, m = len(mu), len(nu)
    C = _cost_matrix(mu, nu).ravel()
    A = _constraints(n, m)
    b = np.concatenate([mu.weights, nu.weights])
    best = math.inf
    for cols in itertools.combinations(range(n * m), n + m - 1):
        sub = A[:, cols]
        x, *_ = np.linalg.lstsq(sub, b, rcond=None)
        if np.max(np.abs(sub @ x - b)) > 1e-9 or np.min(x) < -1e-12:
            continue
        best = min(best, float(np.dot(C[list(cols)], x)))
    return best


def _strip_measures():
    # strip pair t = 2, length 4, on grid lines with h = t/8
    grid = GridGeometry(origin=(-1.0, -3.0), h=0.25, width=24, height=24)
    u = rasterize_region(lambda X, Y: (X > 0) & (X < 4) & (np.abs(Y) < 1), grid, 1.0)
    v = rasterize_region(
        lambda X, Y: (X > 0) & (X < 4) & (np.abs(Y) > 1) & (np.abs(Y) < 2), grid, 1.0
    )
    return field_to_measure(u), field_to_measure(v)


def _lp_cost(mu, nu):
    n, m = len(mu), len(nu)
    res = linprog(
        _cost_matrix(mu, nu).ravel(),
        A_eq=_constraints(n, m),
        b_eq=np.concatenate([mu.weights, nu.weights]),
        bounds=(0, None),
        method="highs",
    )
    return float(res.fun)


# ═══════════════════════════════════════════════════════════════════════════════
# Group 1: Primal solve
# ═══════════════════════════════════════════════════════════════════════════════


def test_identical_measures_distance_zero():
    rng = np.random.default_rng(_SEED)
    mu, _ = _random_pair(rng, 5, 5)
    plan = solve_transport(mu, mu)
    assert plan.cost < 1e-15
    assert np.array_equal(plan.sources, plan.targets), "identity plan expected"


def test_two_sources_one_target():
    mu, nu = _TWO_TO_ONE
    d = wasserstein_distance(mu, nu)
    assert abs(d - (1.0 + math.sqrt(2.0))) < 1e-12, f"d1={d!r}"


def test_matches_vertex_enumeration():
    rng = np.random.default_rng(_SEED)
    shapes = [(n, m) for n in range(1, 5) for m in range(1, 5) if n * m <= 12]
    for k in range(200):
        n, m = shapes[k % len(shapes)]
        mu, nu = _random_pair(rng, n, m)
        brute = _enumerate_vertices(mu, nu)
        got = solve_transport(mu, nu).cost
        assert abs(got - brute) < 1e-9, f"solver {got!r} vs enumeration {brute!r}"


def test_matches_linear_program():
    rng = np.random.default_rng(_SEED + 1)
    for _ in range(200):
        n, m = rng.integers(1, 6, size=2)
        mu, nu = _random_pair(rng, int(n), int(m))
        got = solve_transport(mu, nu).cost
        lp = _lp_cost(mu, nu)
        assert abs(got - lp) <= 1e-9 * max(1.0, lp), f"solver {got!r} vs LP {lp!r}"


def test_marginals():
    rng = np.random.default_rng(_SEED + 2)
    mu, nu = _random_pair(rng, 5, 4)
    plan = solve_transport(mu, nu)
    tol = 1e-12 * mu.total
    assert np.max(np.abs(plan.row_sums(len(mu)) - mu.weights)) <= tol
    assert np.max(np.abs(plan.col_sums(len(nu)) - nu.weights)) <= tol


def test_quadratic_cost():
    mu = DiscreteMeasure(points=[[0.0, 0.0]], weights=[1.0])
    nu = DiscreteMeasure(points=[[3.0, 4.0]], weights=[1.0])
    plan = solve_transport(mu, nu, p=2.0)
    assert abs(plan.cost - 25.0) < 1e-12
    assert abs(plan.distance - 5.0) < 1e-12
    with pytest.raises(UnsupportedExponentError):
        solve_transport(mu, nu, p=0.5)


def test_balance_and_capacity_errors():
    mu, nu = _TWO_TO_ONE
    heavier = DiscreteMeasure(points=nu.points, weights=[2.5])
    with pytest.raises(BalanceError):
        solve_transport(mu, heavier)
    with pytest.raises(CapacityError):
        solve_transport(mu, nu, capacity=1)


# ═══════════════════════════════════════════════════════════════════════════════
# Group 2: Metric properties
# ═══════════════════════════════════════════════════════════════════════════════


def test_metric_axioms():
    rng = np.random.default_rng(_SEED + 3)
    for _ in range(100):
        a, _ = _random_pair(rng, 4, 1, total=12)
        b, _ = _random_pair(rng, 3, 1, total=12)
        c, _ = _random_pair(rng, 5, 1, total=12)
        ab = wasserstein_distance(a, b)
        ba = wasserstein_distance(b, a)
        bc = wasserstein_distance(b, c)
        ac = wasserstein_distance(a, c)
        assert abs(ab - ba) <= 1e-12 * max(1.0, ab), "symmetry"
        assert ac <= ab + bc + 1e-9, f"triangle: {ac} > {ab} + {bc}"
        assert ab > 0
        assert wasserstein_distance(a, a) < 1e-15


def test_dilation_equivariance():
    rng = np.random.default_rng(_SEED + 4)
    mu, nu = _random_pair(rng, 5, 5)
    lam = 2.5
    d = wasserstein_distance(mu, nu)
    d_lam = wasserstein_distance(dilate_measure(mu, lam), dilate_measure(nu, lam))
    assert abs(d_lam - lam * d) <= 1e-12 * lam * d


# ═══════════════════════════════════════════════════════════════════════════════
# Group 3: Dual potentials
# ═══════════════════════════════════════════════════════════════════════════════


def test_single_ray_potential():
    mu = DiscreteMeasure(points=[[0.0, 0.0]], weights=[1.0])
    nu = DiscreteMeasure(points=[[3.0, 0.0]], weights=[1.0])
    phi = recover_dual(solve_transport(mu, nu), mu, nu)
    assert abs(phi.source_values[0] - phi.target_values[0] - 3.0) < 1e-12


def test_identical_measures_potential():
    rng = np.random.default_rng(_SEED + 5)
    mu, _ = _random_pair(rng, 4, 4)
    plan = solve_transport(mu, mu)
    phi = recover_dual(plan, mu, mu)
    assert abs(kantorovich_value(phi, mu, mu)) < 1e-12
    assert abs(duality_check(phi, mu, mu, plan.cost)) < 1e-12


def test_strong_duality_random():
    rng = np.random.default_rng(_SEED + 6)
    for _ in range(25):
        n, m = rng.integers(1, 6, size=2)
        mu, nu = _random_pair(rng, int(n), int(m))
        plan = solve_transport(mu, nu)
        phi = recover_dual(plan, mu, nu)
        gap = duality_check(phi, mu, nu, plan.cost)
        assert -1e-9 <= gap <= 1e-9, f"duality gap {gap:.3e}"
        i, j = plan.sources, plan.targets
        slack = phi.source_values[i] - phi.target_values[j]
        dist = np.linalg.norm(mu.points[i] - nu.points[j], axis=1)
        assert np.max(np.abs(slack - dist)) < 1e-9, "ray criterion on plan entries"


def test_duality_gap_two_thousand_atoms():
    rng = np.random.default_rng(_SEED + 10)
    mu, nu = _random_pair(rng, 2000, 2000)
    mu = DiscreteMeasure(points=mu.points, weights=mu.weights / mu.total)
    nu = DiscreteMeasure(points=nu.points, weights=nu.weights / nu.total)
    plan = solve_transport(mu, nu)
    phi = recover_dual(plan, mu, nu)
    gap = duality_check(phi, mu, nu, plan.cost)
    assert abs(gap) <= 1e-9, f"duality gap {gap:.3e} at 2000 x 2000"


def _without_duals(plan):
    return plan.model_copy(update={"source_dual": None, "target_dual": None})


def test_recover_dual_from_entries_only():
    rng = np.random.default_rng(_SEED + 11)
    for _ in range(32):
        n, m = rng.integers(1, 7, size=2)
        mu, nu = _random_pair(rng, int(n), int(m))
        plan = _without_duals(solve_transport(mu, nu))
        phi = recover_dual(plan, mu, nu)
        gap = duality_check(phi, mu, nu, plan.cost)
        assert abs(gap) <= 1e-9, f"duality gap {gap:.3e}"

    # equal cell weights: the plan is a permutation and its support splits
    mu, nu = _strip_measures()
    plan = _without_duals(solve_transport(mu, nu))
    phi = recover_dual(plan, mu, nu)
    assert abs(duality_check(phi, mu, nu, plan.cost)) <= 1e-9


def test_recover_dual_after_csv_reload(tmp_path):
    mu, nu = _strip_measures()
    plan = solve_transport(mu, nu)
    reloaded = TransportPlan.from_csv(plan.to_csv(tmp_path / "plan.csv"), mu, nu)
    assert reloaded.target_dual is None
    phi = recover_dual(reloaded, mu, nu)
    assert abs(duality_check(phi, mu, nu, reloaded.cost)) <= 1e-9


def test_recover_dual_rejects_suboptimal_plan():
    mu = DiscreteMeasure(points=[[0.0, 0.0], [1.0, 0.0]], weights=[1.0, 1.0])
    nu = DiscreteMeasure(points=[[0.0, 1.0], [1.0, 1.0]], weights=[1.0, 1.0])
    crossed = TransportPlan(
        sources=[0, 1], targets=[1, 0], masses=[1.0, 1.0], cost=2.0 * math.sqrt(2.0)
    )
    with pytest.raises(ConsistencyError):
        recover_dual(crossed, mu, nu)


def test_zero_and_shifted_potentials():
    rng = np.random.default_rng(_SEED + 7)
    mu, nu = _random_pair(rng, 4, 3)
    plan = solve_transport(mu, nu)
    zero = DualPotential(source_values=np.zeros(len(mu)), target_values=np.zeros(len(nu)))
    assert duality_check(zero, mu, nu, plan.cost) == plan.cost

    phi = recover_dual(plan, mu, nu)
    g0 = duality_check(phi, mu, nu, plan.cost)
    g1 = duality_check(phi.shifted(3.7), mu, nu, plan.cost)
    assert abs(g0 - g1) < 1e-9


def test_weak_duality_linear_potentials():
    rng = np.random.default_rng(_SEED + 8)
    mu, nu = _random_pair(rng, 5, 5)
    cost = solve_transport(mu, nu).cost
    for angle in np.linspace(0.0, 2.0 * math.pi, 12, endpoint=False):
        a = np.array([math.cos(angle), math.sin(angle)])
        phi = DualPotential(source_values=mu.points @ a, target_values=nu.points @ a)
        assert duality_check(phi, mu, nu, cost) >= -1e-9


def test_invalid_potential_and_exponent():
    mu, nu = _TWO_TO_ONE
    bad = DualPotential(source_values=[10.0, 0.0], target_values=[0.0])
    with pytest.raises(InvalidPotentialError):
        duality_check(bad, mu, nu, 1.0)

    plan = solve_transport(mu, nu, p=2.0)
    with pytest.raises(UnsupportedExponentError):
        recover_dual(plan, mu, nu)


# ═══════════════════════════════════════════════════════════════════════════════
# Group 4: Fields to measures
# ═══════════════════════════════════════════════════════════════════════════════


def test_empty_field_measure():
    grid = GridGeometry(origin=(0.0, 0.0), h=1.0, width=3, height=3)
    assert len(field_to_measure(DensityField.empty(grid, 1.0))) == 0


def test_single_cell_measure():
    grid = GridGeometry(origin=(0.0, 0.0), h=1.0, width=3, height=3)
    occ = np.zeros((3, 3), dtype=bool)
    occ[0, 0] = True
    mu = field_to_measure(DensityField.on_grid(grid, 1.0, occ))
    assert len(mu) == 1
    assert np.array_equal(mu.points[0], [0.5, 0.5])
    assert mu.weights[0] == 1.0


def test_strip_transport_distance_is_one():
    mu, nu = _strip_measures()
    assert mu.total == 8.0
    d1 = solve_transport(mu, nu).cost
    assert abs(d1 / mu.total - 1.0) < 1e-9, f"d1/M = {d1 / mu.total!r}"


# ═══════════════════════════════════════════════════════════════════════════════
# Group 5: 1-D monotone rearrangement
# ═══════════════════════════════════════════════════════════════════════════════

_EDGES = np.linspace(-2.0, 2.0, 401)
_MID = 0.5 * (_EDGES[:-1] + _EDGES[1:])


def _uniform(lo, hi):
    return ((_MID > lo) & (_MID < hi)).astype(float)


def test_shift_right():
    fp, fm = _uniform(0.0, 1.0), _uniform(1.0, 2.0)
    T, cost = monotone_transport_1d(_EDGES, fp, fm)
    on = fp > 0
    assert np.max(np.abs(T[on] - (_MID[on] + 1.0))) < 1e-12
    assert abs(cost - 1.0) < 1e-12


def test_identity_map():
    fp = _uniform(-0.5, 1.5)
    T, cost = monotone_transport_1d(_EDGES, fp, fp)
    on = fp > 0
    assert np.max(np.abs(T[on] - _MID[on])) < 1e-12
    assert abs(cost) < 1e-12


def test_shift_left():
    fp, fm = _uniform(0.0, 1.0), _uniform(-1.0, 0.0)
    T, cost = monotone_transport_1d(_EDGES, fp, fm)
    on = fp > 0
    assert np.max(np.abs(T[on] - (_MID[on] - 1.0))) < 1e-12
    assert abs(cost - 1.0) < 1e-12


def test_nonincreasing_orientation():
    fp, fm = _uniform(0.0, 1.0), _uniform(1.0, 2.0)
    T, cost = monotone_transport_1d(_EDGES, fp, fm, orientation="nonincreasing")
    on = fp > 0
    assert np.max(np.abs(T[on] - (2.0 - _MID[on]))) < 1e-12
    assert abs(cost - 1.0) < 1e-12


def test_unbalanced_1d():
    with pytest.raises(BalanceError):
        monotone_transport_1d(_EDGES, _uniform(0.0, 1.0), _uniform(1.0, 1.5))


# ═══════════════════════════════════════════════════════════════════════════════
# Group 6: CSV
# ═══════════════════════════════════════════════════════════════════════════════


def test_csv_round_trips(tmp_path):
    rng = np.random.default_rng(_SEED + 9)
    mu, nu = _random_pair(rng, 4, 5)
    mu2 = DiscreteMeasure.from_csv(mu.to_csv(tmp_path / "mu.csv"))
    assert np.array_equal(mu2.points, mu.points)
    assert np.array_equal(mu2.weights, mu.weights)

    plan = solve_transport(mu, nu)
    plan2 = TransportPlan.from_csv(plan.to_csv(tmp_path / "plan.csv"), mu, nu)
    assert np.array_equal(plan2.sources, plan.sources)
    assert abs(plan2.cost - plan.cost) <= 1e-12 * plan.cost
