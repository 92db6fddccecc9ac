import math

import numpy as np
import pytest

from specflow_lab import kernels
from specflow_lab.errors import ValidationError
from specflow_lab.ratner import (
    SparseSequence,
    build_cocycle_model,
    cocycle_identity_residual,
    crossing_sequence,
    sparse_sum_bound,
    sparseness_check,
    witness_constructive,
    witness_empirical,
)
from specflow_lab.roof import RoofFunction
from specflow_lab.rotations import golden_pair

ROT = golden_pair(128)
SQRT2 = math.sqrt(2.0)


def std_roof():
    return RoofFunction(c0=3.0, saw_x=[(1.0, 0.0)], saw_y=[(SQRT2, 0.0)])


def std_model():
    return build_cocycle_model(std_roof(), ROT)


MODEL = std_model()


# -- crossing sequences -------------------------------------------------------


def test_crossing_equal_points_all_zero():
    seq = crossing_sequence(ROT.alpha, 0.3, 0.3, 1000)
    assert seq.crossing_indices == ()


def test_crossing_values_sign():
    seq = crossing_sequence(ROT.alpha, 0.1, 0.1 + 1e-3, 50000)
    assert set(seq.values) == {1}
    seq2 = crossing_sequence(ROT.alpha, 0.1 + 1e-3, 0.1, 50000)
    assert set(seq2.values) == {-1}
    assert seq.crossing_indices == seq2.crossing_indices


def test_crossing_gaps_against_bruteforce():
    d = 1e-3
    seq = crossing_sequence(ROT.alpha, 0.1, 0.1 + d, 100000)
    # doubled-precision direct scan
    bits = 2 * ROT.bits
    one = 1 << bits
    a = ROT.alpha.rescale(bits).mantissa % one
    x0 = int(0.1 * one)
    lo = one - int(d * one)
    brute = [n for n in range(1, 100001) if (x0 + n * a) % one >= lo]
    assert list(seq.crossing_indices) == brute


def test_crossing_rejects_wide_pairs():
    with pytest.raises(ValidationError):
        crossing_sequence(ROT.alpha, 0.1, 0.7, 100)


# -- sparseness ---------------------------------------------------------------


def test_sparseness_conventions():
    empty = SparseSequence((), (), 1000)
    v = sparseness_check(empty, a=5.0, b=100.0)
    assert v.a_sparse and not v.ab_sparse

    seq = SparseSequence((10, 15, 22, 28), (1, 1, 1, 1), 40)
    v = sparseness_check(seq, a=5.0, b=7.0)
    assert v.min_gap == 5 and v.max_gap == 7
    assert v.a_sparse and not v.ab_sparse  # first gap k1 - k0 = 10 > b
    v2 = sparseness_check(seq, a=5.0, b=12.0)
    assert v2.ab_sparse
    v3 = sparseness_check(seq, a=6.0, b=12.0)
    assert not v3.a_sparse


def test_sparseness_lemma_bracket_stable_over_sweep():
    stats = []
    for d in (1e-2, 1e-3, 1e-4, 1e-5):
        horizon = int(60 / d)
        seq = crossing_sequence(ROT.alpha, 0.21, 0.21 + d, horizon)
        v = sparseness_check(seq, 0, math.inf)
        stats.append((v.min_gap * d, v.max_gap * d))
    mins = [s[0] for s in stats]
    maxs = [s[1] for s in stats]
    assert max(mins) < 2 * min(mins)
    assert max(maxs) < 2 * min(maxs)
    c1, c2 = 0.99 * min(mins), 1.01 * max(maxs)
    for d in (1e-2, 1e-3, 1e-4, 1e-5):
        horizon = int(60 / d)
        seq = crossing_sequence(ROT.alpha, 0.21, 0.21 + d, horizon)
        assert sparseness_check(seq, c1 / d, c2 / d).ab_sparse


def test_sparse_sum_bound_cases():
    assert sparse_sum_bound(SparseSequence((), (), 100), a=3.0)
    # alternating signs at exact spacing: partial sums stay in {0, +-1}
    ks = tuple(range(10, 500, 10))
    vals = tuple(1 if i % 2 == 0 else -1 for i in range(len(ks)))
    assert sparse_sum_bound(SparseSequence(ks, vals, 500), a=10.0)
    rng = np.random.default_rng(3)
    for _ in range(100):
        gaps = rng.integers(7, 30, size=20)
        ks = tuple(np.cumsum(gaps) + 5)
        vals = tuple(int(v) for v in rng.choice([-1, 1], size=20))
        seq = SparseSequence(ks, vals, int(ks[-1]) + 10)
        # direct-oracle comparison
        direct = True
        s = 0
        for k, v in zip(ks, vals):
            s += v
            if abs(s) > 1.0 * (1 + (k + 1) / 7.0):
                direct = False
        assert sparse_sum_bound(seq, a=7.0) == direct


# -- the model ----------------------------------------------------------------


def test_model_case_ii_fields():
    assert MODEL.case == "ii"
    assert MODEL.h_values == (1.0, SQRT2)
    assert MODEL.s == 2 and MODEL.B == 0.0
    assert MODEL.h_floor == pytest.approx(SQRT2 - 1.0)
    assert 0 < MODEL.C1 <= 1.0 <= MODEL.C2


def test_model_case_i_fields():
    g = math.pi / 4
    f = RoofFunction(c0=3.0, saw_x=[(1.0, 0.0)], saw_y=[(SQRT2, 0.0)], gamma=g, rotation=ROT)
    m = build_cocycle_model(f, ROT)
    assert m.case == "i" and m.s == 4
    assert m.B == pytest.approx(g)
    assert m.h_values == (1.0, SQRT2, g, g)


def test_model_c0_formula():
    # no smooth part: C0 = sum|d| + alpha + beta + 2
    expect = 1.0 + SQRT2 + ROT.alpha_float + ROT.beta_float + 2.0
    assert MODEL.C0 == pytest.approx(expect)


def test_model_rejects_dependent_jumps():
    f = RoofFunction(c0=3.0, saw_x=[(1.0, 0.0)], saw_y=[(2.0, 0.0)])
    with pytest.raises(ValidationError):
        build_cocycle_model(f, ROT)


# -- identities ---------------------------------------------------------------


def test_identity_trivial_cases():
    assert cocycle_identity_residual(MODEL, (0.3, 0.7), (0.3, 0.7), 50, "master") == 0.0
    assert cocycle_identity_residual(MODEL, (0.3, 0.7), (0.9, 0.1), 0, "master") == 0.0


@pytest.mark.parametrize("which", ["u", "h", "master"])
def test_identity_residuals_random(which):
    g = math.pi / 4
    f = RoofFunction(c0=3.0, saw_x=[(1.0, 0.0)], saw_y=[(SQRT2, 0.0)], gamma=g, rotation=ROT)
    model = build_cocycle_model(f, ROT)
    rng = np.random.default_rng(7)
    for _ in range(25):
        p = (rng.uniform(-2, 2), rng.uniform(-2, 2))
        q = (rng.uniform(-2, 2), rng.uniform(-2, 2))
        n = int(rng.integers(0, 2000))
        r = cocycle_identity_residual(model, p, q, n, which)
        assert r <= 1e-9 * (1 + n)
        # oracle at doubled precision agrees
        r2 = cocycle_identity_residual(model, p, q, n, which, bits=256)
        assert r2 <= 1e-18 * (1 + n)


# -- witnesses ----------------------------------------------------------------


def test_witness_invariants_batch():
    rng = np.random.default_rng(12)
    for _ in range(25):
        d = 10 ** rng.uniform(-5, -3)
        x, y = rng.random(), rng.random()
        th = rng.uniform(0, 2 * np.pi)
        w = witness_constructive(
            MODEL, (x, y), ((x + d * math.cos(th)) % 1.0, (y + d * math.sin(th)) % 1.0), eps=0.1
        )
        assert MODEL.C1 / w.d <= w.M <= 3 * MODEL.s * MODEL.C2 / w.d + 2
        assert w.ratio >= w.kappa
        assert w.p0 <= abs(w.p) <= w.p1
        assert w.good_fraction > 1 - w.eps
        assert w.drift_checked
        # proof-side floor on the good count
        assert w.good_fraction * w.L >= w.L - w.d * w.L / MODEL.C1 - 1


def test_witness_same_orbit_segment():
    # x' = T^k x projected, constant roof: the difference series collapses
    # to the constant shift f^(k) = k c by the cocycle identity
    f = RoofFunction(c0=2.0)
    k = 3
    al, be = ROT.alpha_float, ROT.beta_float
    x, y = 0.31, 0.64
    xp, yp = (x + k * al) % 1.0, (y + k * be) % 1.0
    w = witness_empirical(f, ROT, (x, y), (xp, yp), 0.05, (500, 2500), 200)
    assert w.good_fraction == 1.0
    # minimal lifts wrap the offsets, so the collapsed shift is k c shifted
    # by the wrapped lattice part of the roof sum; constancy is the claim
    series = kernels.diff_series(
        x, y, (xp - x + 0.5) % 1.0 - 0.5, (yp - y + 0.5) % 1.0 - 0.5, 3000,
        al, be, *kernels.roof_args(f),
    )
    assert float(np.std(series[1:])) == 0.0
    assert w.p == pytest.approx(series[1000])


def test_witness_empirical_agrees_with_constructive():
    w = witness_constructive(MODEL, (0.3, 0.6), (0.3002, 0.6001), eps=0.1)
    we = witness_empirical(
        std_roof(), ROT, (0.3, 0.6), (0.3002, 0.6001), w.eps, (w.M, w.M + 2), w.L
    )
    assert abs(we.p - w.p) < w.eps


def test_crossing_at_time_zero_kept():
    d = 1e-3
    # start inside the crossing interval: frac(base) >= 1 - d at n = 0
    x = 1.0 - d / 2
    seq = crossing_sequence(ROT.alpha, x, x + d, 10000)
    assert seq.value_at_zero == 1
    assert seq.count_upto(1) == 1
    assert seq.partial_sum(1) == 1


def test_witness_exact_delta_with_zero_crossing():
    # the pair starts inside an x-crossing window; the exact count formula
    # must match the kernel series including the n = 0 contribution
    d = 2e-4
    x, y = 1.0 - d / 2, 0.37
    w = witness_constructive(MODEL, (x % 1.0, y), ((x + d) % 1.0, (y + d / 7) % 1.0), eps=0.1)
    series = kernels.diff_series(
        x % 1.0, y, d, d / 7, w.M + 1, ROT.alpha_float, ROT.beta_float,
        *kernels.roof_args(std_roof()),
    )
    assert abs(w.p - series[w.M]) < 1e-6


def test_witness_m_scales_inversely_with_d():
    rng = np.random.default_rng(4)
    logs = []
    for d in (1e-3, 1e-4, 1e-5):
        ms = []
        for _ in range(6):
            x, y = rng.random(), rng.random()
            w = witness_constructive(MODEL, (x, y), ((x + d) % 1.0, (y + d / 3) % 1.0), eps=0.1)
            ms.append(w.M)
        logs.append((math.log10(d), math.log10(np.median(ms))))
    slope = (logs[2][1] - logs[0][1]) / (logs[2][0] - logs[0][0])
    assert -1.2 < slope < -0.8
