import math

import numpy as np
import pytest

from specflow_lab.diagnostics import (
    Box,
    Slice1D,
    correlation,
    empirical_distribution,
    exp_sum,
    level_set_measure,
    rigidity_scan,
    weak_mixing_bound,
)
from specflow_lab.errors import ValidationError
from specflow_lab.roof import RoofFunction, integral
from specflow_lab.rotations import golden_pair, palindromic_pair
from specflow_lab import kernels

ROT = golden_pair(128)
SQRT2 = math.sqrt(2.0)


def std_roof():
    return RoofFunction(c0=3.0, saw_x=[(1.0, 0.0)], saw_y=[(SQRT2, 0.0)])


# -- exponential sums -------------------------------------------------------


def test_exp_sum_pure_winding():
    for K in (3, 10, 50):
        e = exp_sum(Slice1D(slope=float(K)), theta=float(K))
        assert e.value <= 1e-10
        assert e.lemma_bound == pytest.approx(1.0 / (math.pi * K))
        assert e.passes


def test_exp_sum_with_trig_against_refined_quadrature():
    sl = Slice1D(slope=50.0, trig=((1, 0.3, 0.0),))
    a = exp_sum(sl, theta=50.0 - 2 * math.pi * 0.3, quad_points=200)
    b = exp_sum(sl, theta=50.0 - 2 * math.pi * 0.3, quad_points=400)
    assert abs(a.value - b.value) < 1e-10
    assert a.passes


def test_exp_sum_three_jump_bound_formula():
    sl = Slice1D(slope=10.0, steps=((0.2, 0.5), (0.5, 0.25), (0.8, 0.1)))
    # slope+jumps do not wrap to zero, so N = 3 interior + 1 at the seam
    e = exp_sum(sl, theta=10.0)
    assert e.n_discontinuities == 4
    sl2 = Slice1D(slope=10.0, steps=((0.25, -4.0), (0.5, -3.0), (0.75, -3.0)))
    e2 = exp_sum(sl2, theta=10.0)  # jumps cancel the winding at the seam
    assert e2.n_discontinuities == 3
    assert e2.lemma_bound == pytest.approx(3.0 / (10.0 * math.pi))
    assert e2.passes


def test_exp_sum_rejects_uncertified_theta():
    with pytest.raises(ValidationError):
        exp_sum(Slice1D(slope=5.0, trig=((1, 1.0, 0.0),)), theta=5.0)


# -- twisted-integral decay -------------------------------------------------


def test_weak_mixing_bound_formula_and_scaling():
    f = std_roof()
    r1 = weak_mixing_bound(f, ROT, s=1.0, n=60)
    r2 = weak_mixing_bound(f, ROT, s=2.0, n=60)
    assert r1.bound == pytest.approx(1.0 / math.pi, rel=1e-9)
    assert r2.bound == pytest.approx(r1.bound / 2.0, rel=1e-9)
    assert r1.passes and r2.passes


def test_weak_mixing_noninteger_s_nontrivial():
    f = std_roof()
    r = weak_mixing_bound(f, ROT, s=1.3, n=50)
    assert r.numeric > 1e-12  # generic s: no exact cancellation
    assert r.passes


def test_weak_mixing_monte_carlo_agreement():
    f = std_roof()
    s, n = 1.3, 50
    r = weak_mixing_bound(f, ROT, s=s, n=n)
    rng = np.random.default_rng(1)
    m = 200000
    xs, ys = rng.random(m), rng.random(m)
    vals = kernels.birkhoff_batch(xs, ys, n, ROT.alpha_float, ROT.beta_float, *kernels.roof_args(f))
    z = np.exp(2j * np.pi * s * vals)
    est = abs(z.mean())
    stderr = math.sqrt((float(z.real.var()) + float(z.imag.var())) / m)
    assert abs(est - r.numeric) < 3 * stderr + 1e-4


def test_weak_mixing_rejects_smooth_part():
    f = RoofFunction(c0=3.0, saw_x=[(1.0, 0.0)], trig=[(1, 0, 0.05, 0.0)])
    with pytest.raises(ValidationError):
        weak_mixing_bound(f, ROT, s=1.0, n=50)


def test_weak_mixing_y_direction():
    # jumps only in y: the roles of the coordinates swap
    f = RoofFunction(c0=3.0, saw_y=[(SQRT2, 0.0), (1.0, 0.5)])
    r = weak_mixing_bound(f, ROT, s=1.7, n=40)
    assert r.direction == "y"
    assert r.n_jump == 2
    assert r.bound == pytest.approx(2.0 / (math.pi * 1.7 * r.theta), rel=1e-9)
    assert r.passes


# -- level sets -------------------------------------------------------------


def test_level_set_eps_limit_and_window():
    f = std_roof()
    big = level_set_measure(f, ROT, y=0.4, t=60.0, eps=0.02, x_grid=1024)
    small = level_set_measure(f, ROT, y=0.4, t=60.0, eps=0.002, x_grid=1024)
    assert small.estimate <= big.estimate
    assert small.estimate < 0.02
    # window matches the two-sided inclusion
    assert big.j_low > 60.0 / (2 * f.sup_bound)
    assert big.j_high < 2 * 60.0 / f.inf_bound


def test_level_set_against_dense_grid_oracle():
    f = std_roof()
    res = level_set_measure(f, ROT, y=0.37, t=50.0, eps=0.01, x_grid=1024)
    # brute force at 10x resolution
    G = 10240
    xs = (np.arange(G) + 0.5) / G
    hit = np.zeros(G, dtype=bool)
    for j in range(res.j_low, res.j_high + 1):
        vals = kernels.birkhoff_batch(
            xs, np.full(G, 0.37), j, ROT.alpha_float, ROT.beta_float, *kernels.roof_args(f)
        )
        hit |= np.abs(vals - 50.0) < 0.01
    brute = hit.mean()
    assert res.estimate <= res.bound
    assert abs(res.estimate - brute) <= 0.1 * max(brute, 1e-6)


def test_level_set_preconditions():
    f = std_roof()
    with pytest.raises(ValidationError):
        level_set_measure(f, ROT, y=0.4, t=1.0, eps=0.01)
    with pytest.raises(ValidationError):
        level_set_measure(f, ROT, y=0.4, t=60.0, eps=2.0)


# -- correlation ------------------------------------------------------------


def test_correlation_time_zero_self():
    f = std_roof()
    A = Box(0.0, 1.0, 0.0, 1.0, 0.0, 2.0)
    series = correlation(f, ROT, A, A, times=[0.0], samples=20000, seed=5)
    assert series.estimates[0] == pytest.approx(series.mu_A, abs=3 * series.stderrs[0] + 1e-9)


def test_correlation_disjoint_boxes():
    f = std_roof()
    A = Box(0.0, 0.5, 0.0, 1.0, 0.0, 1.0)
    B = Box(0.5, 1.0, 0.0, 1.0, 1.5, 2.5)
    series = correlation(f, ROT, A, B, times=[0.0], samples=10000, seed=6)
    assert series.estimates[0] == 0.0


def test_correlation_product_reference_by_quadrature():
    f = std_roof()
    A = Box(0.1, 0.6, 0.2, 0.9, 0.25, 1.75)
    series = correlation(f, ROT, A, A, times=[3.0], samples=4000, seed=7)
    g = np.linspace(0, 1, 200, endpoint=False) + 1 / 400
    gx, gy = np.meshgrid(g, g, indexing="ij")
    denom = float(f.eval_many(gx.ravel(), gy.ravel()).mean())
    mu_quad = 0.5 * 0.7 * 1.5 / denom
    assert series.mu_A == pytest.approx(mu_quad, rel=1e-6)


def test_correlation_rejects_tall_box():
    f = std_roof()
    with pytest.raises(ValidationError):
        correlation(f, ROT, Box(0, 1, 0, 1, 0, 3.5), Box(0, 1, 0, 1, 0, 1), [1.0], 100, 0)


def test_correlation_seed_deterministic():
    f = std_roof()
    A = Box(0.0, 1.0, 0.0, 1.0, 0.0, 2.0)
    a = correlation(f, ROT, A, A, times=[1.0, 5.0], samples=3000, seed=11)
    b = correlation(f, ROT, A, A, times=[1.0, 5.0], samples=3000, seed=11)
    assert a.estimates == b.estimates


# -- rigidity and distributions ---------------------------------------------


def test_rigidity_constant_roof():
    f = RoofFunction(c0=2.0)
    tab = rigidity_scan(f, ROT, [1, 5, 13], samples=50, seed=1)
    assert all(r.max_deviation == 0.0 for r in tab.rows)


def test_rigidity_threshold_value():
    f = RoofFunction(c0=3.0, saw_x=[(1.0, 0.0)], saw_y=[(2.0, 0.0)])
    tab = rigidity_scan(f, ROT, [3], samples=10, seed=1)
    assert tab.rows[0].threshold == pytest.approx(6.0)


def test_rigidity_palindromic_pair_small_denominators():
    pair = palindromic_pair(40)
    f = RoofFunction(c0=3.0, saw_x=[(1.0, 0.0)], saw_y=[(2.0, 0.0)])
    tab = rigidity_scan(f, pair.rotation, pair.common_denominators[:3], samples=200, seed=2)
    assert tab.passes
    # oracle: certified direct summation at the third denominator
    from specflow_lab.roof import birkhoff

    l = pair.common_denominators[2]
    v = birkhoff(f, pair.rotation, 0.123, 0.456, l, method="walk")
    w = birkhoff(f, pair.rotation, 0.123, 0.456, l, method="floorsum")
    assert abs(v.value - w.value) <= v.rounding_bound + w.rounding_bound + 1e-9


def test_rigidity_rejects_smooth_roof():
    f = RoofFunction(c0=3.0, saw_x=[(1.0, 0.0)], trig=[(1, 0, 0.01, 0.0)])
    with pytest.raises(ValidationError):
        rigidity_scan(f, ROT, [3], samples=5)


def test_empirical_distribution_constant_roof():
    f = RoofFunction(c0=2.0)
    h = empirical_distribution(f, ROT, 7, bins=10, samples=500, seed=3)
    assert h.outside_fraction == 0.0
    center = [m for e0, e1, m in zip(h.edges, h.edges[1:], h.masses) if e0 <= 0.0 < e1]
    assert center and center[0] == pytest.approx(1.0)


def test_empirical_distribution_support_containment():
    pair = palindromic_pair(20)
    f = RoofFunction(c0=3.0, saw_x=[(1.0, 0.0)], saw_y=[(2.0, 0.0)])
    h = empirical_distribution(f, pair.rotation, pair.common_denominators[2], samples=800, seed=4)
    assert h.outside_fraction == 0.0
    assert h.support_bound == pytest.approx(6.0)


def test_empirical_distribution_seed_stability():
    f = RoofFunction(c0=3.0, saw_x=[(1.0, 0.0)], saw_y=[(2.0, 0.0)])
    h1 = empirical_distribution(f, ROT, 13, bins=8, samples=4000, seed=5)
    h2 = empirical_distribution(f, ROT, 13, bins=8, samples=4000, seed=6)
    for m1, m2 in zip(h1.masses, h2.masses):
        se = math.sqrt(max(m1 * (1 - m1), 1e-6) / 4000)
        assert abs(m1 - m2) < 4 * se + 0.01
