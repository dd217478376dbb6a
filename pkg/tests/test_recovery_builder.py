"""
Recovery pair around a closed curve: Test Suite.

 Group 1: Admissible epsilon
   1.  Circle R=2: eps0 = 1/2
   2.  Ellipse (2, 1): eps0 = 1/8 from curvature
   3.  eps0 scales with the circle radius

 Group 2: Offset frames
   4.  L+ + L- = 2L and L+ = L (1 + eps/R) on a circle
   5.  Rays from the two offsets meet: inner - outer = 2 eps
   6.  Flat stretches: ray lengths -eps / +eps and cost eps
   7.  eps >= eps0 raises InadmissibleEpsilonError

 Group 3: Rasterized pair
   8.  Circle R=1, eps=0.05, h=0.01: mass within 2% of 4 pi
   9.  Disjoint supports with equal counts, pair is admissible
  10.  Support stays within 3 eps of the curve
  11.  h > eps/4 raises GridTooCoarseError
  12.  Twenty random Fourier curves: disjoint, equal counts, mass, support

 Group 4: Semianalytic energy
  13.  Circle R=1, eps=0.05: G in [pi, pi + 0.05], interface = 2L
  14.  Circle ladder: G - W decays at order 2
  15.  Ellipse ladder: G - W decays at order 2
  16.  Circle agrees with the closed-form recovery ring
  17.  Ellipse: extrapolated limit within 0.5% of the quadrature W
  18.  Random curves: G >= lower bound >= W, and G >= 0.99 W

 Group 5: Upper bound
  19.  d1/eps <= term-wise bound <= 2L + (eps^2/2) int kappa^2 + eps^4 L C
  20.  The bound's slack is O(eps^4)
  21.  eps -> 0 recovers 2L

 Group 6: Grid energy
  22.  Circle R=1, eps=0.1, h=0.025: F within 5% of the semianalytic F
  23.  Finer spacing h=0.0125 (slow)
  24.  |G_grid - G_semi| shrinks from h = eps/4 to eps/8
  25.  ... and on to eps/16 (slow)
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from Domain.curve import CurveSystem, curvature_profile, elastica_energy
from Domain.curve_shapes import circle, ellipse, fourier_circle, rounded_rectangle
from Domain.density_field import validate_pair
from Pipeline.closed_forms import circle_G_from_ring
from Pipeline.experiments import fit_loglog_slope, richardson_limit
from Pipeline.ray_calculus import per_ray_cost_array
from Pipeline.recovery_builder import (
    admissible_epsilon,
    build_offset_frames,
    build_recovery_pair,
    recovery_energy_grid,
    recovery_energy_semianalytic,
    recovery_lower_bound,
    recovery_upper_bound,
    signed_distance_to_curve,
    upper_bound_terms,
)
from Shared.errors import GridTooCoarseError, InadmissibleEpsilonError


# ── Shared fixtures ───────────────────────────────────────────────────────────

_CIRCLE = circle(1.0, 2048)

_ELLIPSE = ellipse(2.0, 1.0, 2048)

_LADDER = (0.1, 0.05, 0.025, 0.0125)

_SEED = 17


@pytest.fixture(scope="module")
def circle_pair():
    return build_recovery_pair(circle(1.0, 1024), 0.05, 0.01)


def _W(c):
    return elastica_energy(CurveSystem(curves=[c]))


def _fourier_curves(n, seed=_SEED):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        modes = [(k, rng.uniform(-0.03, 0.03), rng.uniform(-0.03, 0.03)) for k in (2, 3, 4)]
        yield fourier_circle(1.0, modes, 1024)


# ═══════════════════════════════════════════════════════════════════════════════
# Group 1: Admissible epsilon
# ═══════════════════════════════════════════════════════════════════════════════


def test_eps0_circle():
    eps0 = admissible_epsilon(circle(2.0, 1024))
    assert abs(eps0 - 0.5) < 1e-9, f"eps0 = {eps0!r}"


def test_eps0_ellipse():
    eps0 = admissible_epsilon(ellipse(2.0, 1.0, 4096))
    assert abs(eps0 - 0.125) < 1e-3, f"eps0 = {eps0!r}"


def test_eps0_scales_with_radius():
    for R, expected in ((1.0, 0.25), (3.0, 0.75)):
        eps0 = admissible_epsilon(circle(R, 1024))
        assert abs(eps0 - expected) < 1e-9 * expected, f"R={R}: {eps0!r}"


# ═══════════════════════════════════════════════════════════════════════════════
# Group 2: Offset frames
# ═══════════════════════════════════════════════════════════════════════════════


def test_offset_lengths_circle():
    eps = 0.1
    outer, inner = build_offset_frames(_CIRCLE, eps)
    L = _CIRCLE.length
    assert abs(outer.length + inner.length - 2.0 * L) < 1e-12 * L
    assert abs(outer.length - L * (1.0 + eps)) < 1e-9 * L
    assert abs(inner.length - L * (1.0 - eps)) < 1e-9 * L


def test_rays_meet():
    for c, eps in ((_CIRCLE, 0.2), (_ELLIPSE, 0.1)):
        outer, inner = build_offset_frames(c, eps)
        assert np.all(outer.ray_length <= 0.0)
        assert np.all(inner.ray_length >= 0.0)
        gap = np.max(np.abs(inner.ray_length - outer.ray_length - 2.0 * eps))
        assert gap < 1e-12, f"gap {gap:.2e}"


def test_flat_rays():
    eps = 0.05
    c = rounded_rectangle(3.0, 2.0, 0.5, 2048)
    flat = np.abs(curvature_profile(c).kappa) < 1e-12
    assert flat.sum() > 100
    outer, inner = build_offset_frames(c, eps)
    assert np.max(np.abs(outer.ray_length[flat] + eps)) < 1e-12
    assert np.max(np.abs(inner.ray_length[flat] - eps)) < 1e-12
    cost = per_ray_cost_array(1.0, outer.kappa[flat], eps, 1.0)
    assert np.max(np.abs(cost - eps)) < 1e-12


def test_inadmissible_epsilon():
    with pytest.raises(InadmissibleEpsilonError):
        build_offset_frames(circle(1.0, 256), 0.3)
    with pytest.raises(InadmissibleEpsilonError):
        recovery_energy_semianalytic(circle(1.0, 256), 0.0)


# ═══════════════════════════════════════════════════════════════════════════════
# Group 3: Rasterized pair
# ═══════════════════════════════════════════════════════════════════════════════


def test_pair_mass(circle_pair):
    rel = abs(circle_pair.mass - 4.0 * math.pi) / (4.0 * math.pi)
    assert rel < 0.02, f"mass rel err {rel:.2e}"
    assert abs(circle_pair.target_mass - 2.0 * circle_pair.curve.length) < 1e-12


def test_pair_admissible(circle_pair):
    u, v = circle_pair.u, circle_pair.v
    assert not np.any(u.occupancy & v.occupancy)
    assert u.count == v.count
    rep = validate_pair(u, v)
    assert rep.is_admissible, rep.model_dump()
    assert u.has_empty_border() and v.has_empty_border()


def test_pair_support_near_curve(circle_pair):
    X, Y = circle_pair.u.grid.cell_centers()
    d, _, _ = signed_distance_to_curve(circle_pair.curve, X, Y)
    eps = circle_pair.epsilon
    assert np.all(np.abs(d[circle_pair.u.occupancy]) < eps)
    support = circle_pair.u.occupancy | circle_pair.v.occupancy
    assert np.max(np.abs(d[support])) <= 3.0 * eps


def test_grid_too_coarse():
    with pytest.raises(GridTooCoarseError):
        build_recovery_pair(circle(1.0, 256), 0.05, 0.02)


def test_fourier_pairs_invariants():
    eps, h = 0.05, 0.0125
    for c in _fourier_curves(20):
        pair = build_recovery_pair(c, eps, h)
        u, v = pair.u.occupancy, pair.v.occupancy
        assert not np.any(u & v)
        assert pair.u.count == pair.v.count
        rel = abs(pair.mass - pair.target_mass) / pair.target_mass
        assert rel < 0.02, f"mass rel err {rel:.2e}"
        X, Y = pair.u.grid.cell_centers()
        d, _, _ = signed_distance_to_curve(c, X, Y)
        assert np.max(np.abs(d[u | v])) <= 3.0 * eps


# ═══════════════════════════════════════════════════════════════════════════════
# Group 4: Semianalytic energy
# ═══════════════════════════════════════════════════════════════════════════════


def test_semianalytic_circle():
    e = recovery_energy_semianalytic(_CIRCLE, 0.05)
    assert math.pi <= e.G <= math.pi + 0.05, f"G = {e.G!r}"
    assert abs(e.interface - 2.0 * _CIRCLE.length) < 1e-12 * _CIRCLE.length
    assert e.mass == 2.0 * _CIRCLE.length
    assert abs(e.W - math.pi) < 1e-5


def test_circle_order_two():
    W = _W(_CIRCLE)
    gaps = [recovery_energy_semianalytic(_CIRCLE, eps).G - W for eps in _LADDER]
    assert all(g > 0 for g in gaps)
    order = fit_loglog_slope(_LADDER, gaps)
    assert abs(order - 2.0) <= 0.2, f"order {order:.3f}"


def test_ellipse_order_two():
    ladder = (0.08, 0.04, 0.02, 0.01)
    W = _W(_ELLIPSE)
    gaps = [recovery_energy_semianalytic(_ELLIPSE, eps).G - W for eps in ladder]
    assert all(g > 0 for g in gaps)
    order = fit_loglog_slope(ladder, gaps)
    assert abs(order - 2.0) <= 0.3, f"order {order:.3f}"


def test_circle_matches_ring():
    c = circle(1.0, 4096)
    # polygon and circle differ only by the length ratio; curvature is 1 on both
    scale = c.length / (2.0 * math.pi)
    for eps in (0.1, 0.05):
        semi = recovery_energy_semianalytic(c, eps).G
        ring = circle_G_from_ring(1.0, eps) * scale
        assert abs(semi - ring) <= 1e-8 * ring, f"eps={eps}: {semi!r} vs {ring!r}"


def test_ellipse_limit_matches_quadrature():
    a, b = 2.0, 1.0
    W, _ = quad(
        lambda th: 0.5 * a * a * b * b / (a * a * math.sin(th) ** 2 + b * b * math.cos(th) ** 2) ** 2.5,
        0.0,
        2.0 * math.pi,
        epsabs=0.0,
        epsrel=1e-12,
        limit=200,
    )
    G = [recovery_energy_semianalytic(_ELLIPSE, eps).G for eps in (0.02, 0.01)]
    assert all(g >= W * (1.0 - 1e-3) for g in G)
    limit = richardson_limit(G[0], G[1])
    assert abs(limit - W) / W < 5e-3, f"limit {limit:.6f} vs W {W:.6f}"


def test_lower_bound_below_G_on_random_curves():
    for c in _fourier_curves(10, seed=_SEED + 1):
        W = _W(c)
        for eps in (0.05, 0.025):
            G = recovery_energy_semianalytic(c, eps).G
            lb = recovery_lower_bound(c, eps)
            assert G >= lb - 1e-9 * lb, f"G {G!r} below lower bound {lb!r}"
            assert lb >= W * (1.0 - 1e-12)
            assert G >= 0.99 * W


# ═══════════════════════════════════════════════════════════════════════════════
# Group 5: Upper bound
# ═══════════════════════════════════════════════════════════════════════════════


def test_upper_bound_chain():
    for c in (_CIRCLE, _ELLIPSE):
        for eps in (0.1, 0.05, 0.02):
            d1_eps = recovery_energy_semianalytic(c, eps).d1 / eps
            terms = upper_bound_terms(c, eps).total
            bound = recovery_upper_bound(c, eps)
            assert d1_eps <= terms * (1.0 + 1e-14), f"eps={eps}: {d1_eps!r} > {terms!r}"
            assert terms <= bound * (1.0 + 1e-14), f"eps={eps}: {terms!r} > {bound!r}"


def test_upper_bound_slack_order_four():
    gaps = []
    for eps in (0.1, 0.05):
        gaps.append(recovery_upper_bound(_CIRCLE, eps) - recovery_energy_semianalytic(_CIRCLE, eps).d1 / eps)
    assert gaps[1] > 0
    ratio = gaps[0] / gaps[1]
    assert 12.0 <= ratio <= 20.0, f"slack ratio {ratio:.3f}"


def test_upper_bound_small_eps():
    bound = recovery_upper_bound(_CIRCLE, 1e-4)
    assert 0.0 < bound - 2.0 * _CIRCLE.length < 1e-6


# ═══════════════════════════════════════════════════════════════════════════════
# Group 6: Grid energy
# ═══════════════════════════════════════════════════════════════════════════════


def _grid_vs_semi(h):
    eps = 0.1
    c = circle(1.0, 1024)
    pair = build_recovery_pair(c, eps, h)
    grid = recovery_energy_grid(pair)
    semi = recovery_energy_semianalytic(c, eps)
    return grid, semi


def test_grid_energy_circle():
    grid, semi = _grid_vs_semi(0.025)
    assert grid.atoms > 1500
    rel = abs(grid.F - semi.F) / semi.F
    assert rel < 0.05, f"grid F {grid.F:.5f} vs semianalytic {semi.F:.5f}"
    assert abs(grid.G - (grid.F - 2.0 * grid.mass) / grid.epsilon**2) <= 1e-9 * abs(grid.G)


@pytest.mark.slow
def test_grid_energy_circle_fine():
    grid, semi = _grid_vs_semi(0.0125)
    rel = abs(grid.F - semi.F) / semi.F
    assert rel < 0.03, f"grid F {grid.F:.5f} vs semianalytic {semi.F:.5f}"


def _grid_G_error(eps, divisors):
    c = circle(1.0, 1024)
    semi = recovery_energy_semianalytic(c, eps).G
    return [abs(recovery_energy_grid(build_recovery_pair(c, eps, eps / k)).G - semi) for k in divisors]


def test_grid_G_approaches_semianalytic():
    errors = _grid_G_error(0.2, (4, 8))
    assert errors[1] < errors[0], f"|G_grid - G_semi| = {errors}"


@pytest.mark.slow
def test_grid_G_approaches_semianalytic_fine():
    errors = _grid_G_error(0.2, (4, 8, 16))
    assert all(a > b for a, b in zip(errors, errors[1:])), f"|G_grid - G_semi| = {errors}"
