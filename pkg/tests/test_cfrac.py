import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specflow_lab.cfrac import (
    Convergent,
    PartialQuotients,
    approx_quality,
    bounded_pq_constant,
    convergents,
    dist_to_int,
    enclosure,
    eval_real,
    floor_sum,
)
from specflow_lab.errors import GeneratorExhausted, PrecisionError, ValidationError
from specflow_lab.fixedpoint import RealRep


def brute_convergents(terms):
    """Independent direct-recurrence oracle."""
    ps, qs = [0, 1], [1, terms[0]]
    for a in terms[1:]:
        ps.append(a * ps[-1] + ps[-2])
        qs.append(a * qs[-1] + qs[-2])
    return ps, qs


GOLDEN = PartialQuotients.constant(1)
TM = PartialQuotients.thue_morse()


def test_fibonacci_denominators():
    cs = convergents(PartialQuotients.explicit([1, 1, 1, 1, 1]), 5)
    assert [c.q for c in cs] == [1, 1, 2, 3, 5, 8]


def test_initial_conditions():
    for pq in (GOLDEN, TM, PartialQuotients.explicit([4, 2, 7])):
        cs = convergents(pq, 1)
        assert (cs[0].p, cs[0].q) == (0, 1)
        assert (cs[1].p, cs[1].q) == (1, pq.term(1))


def test_thue_morse_against_recurrence_oracle():
    terms = TM.prefix(8)
    assert terms == (1, 2, 2, 1, 2, 1, 1, 2)
    ps, qs = brute_convergents(list(terms))
    cs = convergents(TM, 8)
    assert [c.p for c in cs] == ps
    assert [c.q for c in cs] == qs


@pytest.mark.parametrize("pq", [GOLDEN, TM, PartialQuotients.constant(3)])
def test_determinant_identity_and_coprimality(pq):
    cs = convergents(pq, 40)
    for n in range(1, 41):
        det = cs[n].p * cs[n - 1].q - cs[n - 1].p * cs[n].q
        assert det == (-1) ** (n - 1)
        assert math.gcd(cs[n].p, cs[n].q) == 1


def test_q_monotone_and_growth_bound():
    cs = convergents(TM, 60)
    for n in range(2, 61):
        assert cs[n].q > cs[n - 1].q
    # a_i <= 2 for the mapped word, so q_{s+1} <= 3 q_s
    for n in range(1, 60):
        assert cs[n + 1].q <= 3 * cs[n].q


def test_generator_exhaustion_is_explicit():
    pq = PartialQuotients.explicit([1, 2])
    with pytest.raises(GeneratorExhausted):
        pq.prefix(3)
    with pytest.raises(GeneratorExhausted):
        convergents(pq, 3)


def test_quality_golden_n3():
    # |alpha - 2/3| must lie in (1/30, 1/15); check via the exact enclosure
    cs = convergents(GOLDEN, 5)
    assert (cs[3].p, cs[3].q) == (2, 3)
    lo, hi = enclosure(GOLDEN, 4)
    gap_lo = min(abs(lo - Fraction(2, 3)), abs(hi - Fraction(2, 3)))
    gap_hi = max(abs(lo - Fraction(2, 3)), abs(hi - Fraction(2, 3)))
    assert gap_lo > Fraction(1, 2 * 3 * 5) or gap_lo == Fraction(1, 2 * 3 * 5)
    assert gap_hi < Fraction(1, 3 * 5) or gap_hi == Fraction(1, 3 * 5)
    cert = approx_quality(GOLDEN, 3)
    assert cert.lower_ok and cert.upper_ok


@pytest.mark.parametrize("pq", [GOLDEN, TM])
def test_quality_range(pq):
    for n in range(1, 41):
        cert = approx_quality(pq, n)
        assert cert.lower_ok and cert.upper_ok


def test_quality_rejects_rational():
    with pytest.raises(ValidationError):
        approx_quality(PartialQuotients.explicit([1, 2, 3, 4, 5, 6]), 2)


def test_eval_real_golden():
    r = eval_real(GOLDEN, 64)
    # oracle: (sqrt(5) - 1) / 2 to 80 fractional bits via integer sqrt
    g = (math.isqrt(5 << 160) - (1 << 80))  # golden * 2**81 approximately
    golden = Fraction(g, 1 << 81)
    assert abs(r.to_fraction() - golden) <= Fraction(1, 1 << 63)
    assert r.error_bound <= 2.0**-64 * 2


def test_eval_real_rational_exact():
    r = eval_real(PartialQuotients.explicit([2]), 32)
    assert r.to_fraction() == Fraction(1, 2)
    assert r.err == 0


def test_eval_real_tm_width():
    from specflow_lab.cfrac import enclosure_for_bits

    r = eval_real(TM, 128)
    lo, hi = enclosure_for_bits(TM, 128)
    assert hi - lo < Fraction(1, 1 << 128)
    assert lo - Fraction(1, 1 << 127) <= r.to_fraction() <= hi + Fraction(1, 1 << 127)


def test_eval_real_two_precisions_agree():
    a = eval_real(TM, 80)
    b = eval_real(TM, 160)
    assert abs(a.to_fraction() - b.to_fraction()) <= Fraction(1, 1 << 79)


def test_dist_to_int_basics():
    x = RealRep.from_float(0.25, 64)
    assert dist_to_int(x).value == 0.25
    y = RealRep.from_float(0.75, 64)
    assert dist_to_int(y).value == 0.25


def test_dist_to_int_orbit_bound():
    cs = convergents(GOLDEN, 6)
    q5, q6 = cs[5].q, cs[6].q
    alpha = eval_real(GOLDEN, 64)
    d = dist_to_int(alpha.scale_int(q5))
    # exact oracle from the two-sided approximation inequality
    assert d.value < 1.0 / q6 + d.error_bound


def test_dist_to_int_rejects_garbage_bounds():
    x = RealRep(1 << 63, 64, 1 << 62)
    with pytest.raises(PrecisionError):
        dist_to_int(x)


def test_bounded_pq_constant_golden():
    c = bounded_pq_constant(GOLDEN, 100)
    assert 2.0 < c <= 3.0  # golden worst case ||q_k alpha|| ~ 1/(sqrt5 q_k)


def test_bounded_pq_constant_single():
    c = bounded_pq_constant(GOLDEN, 1)
    alpha = eval_real(GOLDEN, 96)
    assert abs(c - 1.0 / dist_to_int(alpha).value) < 1e-9


def test_bounded_pq_constant_tm_stable():
    c1 = bounded_pq_constant(TM, 5000)
    c2 = bounded_pq_constant(TM, 10000)
    assert c1 <= c2 <= 1.6 * c1


@given(st.lists(st.integers(min_value=1, max_value=9), min_size=3, max_size=12))
@settings(max_examples=60, deadline=None)
def test_determinant_identity_random(terms):
    cs = convergents(PartialQuotients.explicit(terms), len(terms))
    for n in range(1, len(terms) + 1):
        assert cs[n].p * cs[n - 1].q - cs[n - 1].p * cs[n].q == (-1) ** (n - 1)
        assert math.gcd(cs[n].p, cs[n].q) == 1


@given(
    st.integers(min_value=0, max_value=60),
    st.integers(min_value=1, max_value=50),
    st.integers(min_value=-80, max_value=80),
    st.integers(min_value=-80, max_value=80),
)
@settings(max_examples=200, deadline=None)
def test_floor_sum_matches_bruteforce(n, m, a, b):
    assert floor_sum(n, m, a, b) == sum((a * i + b) // m for i in range(n))


def test_floor_sum_bigint():
    n, m, a, b = 10**6 + 7, 2**89 + 11, 2**88 - 3, -(2**87)
    # spot value against a coarse Fraction-based identity: telescoping over halves
    s = floor_sum(n, m, a, b)
    s1 = floor_sum(n // 2, m, a, b)
    s2 = floor_sum(n - n // 2, m, a, a * (n // 2) + b)
    assert s == s1 + s2


def test_descriptor_roundtrip():
    for pq in (
        PartialQuotients.explicit([1, 2, 3]),
        GOLDEN,
        TM,
        PartialQuotients.thue_morse(shift=1),
        PartialQuotients.yoccoz_prefix([1, 127, 865], tail=1),
    ):
        assert PartialQuotients.from_descriptor(pq.to_descriptor()) == pq


def test_descriptor_rejects_unknown_fields():
    with pytest.raises(ValidationError):
        PartialQuotients.from_descriptor({"kind": "constant", "params": {}, "bogus": 1})
