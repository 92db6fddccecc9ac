"""Exact continued-fraction arithmetic.

Partial quotients come from explicit lists or deterministic generators;
convergents are computed with exact integer recurrences

    q_0 = 1,  q_1 = a_1,  q_{n+1} = a_{n+1} q_n + q_{n-1}
    p_0 = 0,  p_1 = 1,  p_{n+1} = a_{n+1} p_n + p_{n-1}.

An irrational is always enclosed between two consecutive convergents, which
gives exact rational interval arithmetic for everything downstream.  A
finite explicit list denotes the exact rational [0; a_1..a_k]; operations
that need irrationality reject it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import GeneratorExhausted, PrecisionError, ValidationError
from .fixedpoint import RealRep

__all__ = [
    "PartialQuotients",
    "Convergent",
    "QualityCertificate",
    "convergents",
    "approx_quality",
    "eval_real",
    "dist_to_int",
    "bounded_pq_constant",
    "enclosure",
    "enclosure_for_bits",
    "floor_sum",
    "thue_morse_term",
]


def thue_morse_term(k: int) -> int:
    """k-th (0-based) term of the Thue-Morse word mapped 0 -> 1, 1 -> 2."""
    return 1 + bin(k).count("1") % 2


class PartialQuotients:
    """A deterministic source of partial quotients a_1, a_2, ...

    ``kind`` is one of ``explicit`` (finite list, denotes an exact rational),
    ``constant``, ``thue-morse`` (with an optional left shift, used for the
    pair beta = [0; a_2, a_3, ...]) and ``yoccoz`` (a constructed finite
    prefix continued by a constant tail, so it stays irrational).
    """

    def __init__(self, kind: str, terms=(), value: int = 1, shift: int = 0, tail: int = 1):
        if kind not in ("explicit", "constant", "thue-morse", "yoccoz"):
            raise ValidationError(f"unknown partial-quotient kind {kind!r}")
        self.kind = kind
        self.terms = tuple(int(t) for t in terms)
        self.value = int(value)
        self.shift = int(shift)
        self.tail = int(tail)
        if kind == "explicit" and not self.terms:
            raise ValidationError("explicit partial quotients need at least one term")
        for t in self.terms + (self.value, self.tail):
            if t < 1:
                raise ValidationError("partial quotients must be positive integers")
        if self.shift < 0:
            raise ValidationError("shift must be >= 0")

    # -- constructors --------------------------------------------------

    @classmethod
    def explicit(cls, terms) -> "PartialQuotients":
        return cls("explicit", terms=terms)

    @classmethod
    def constant(cls, value: int) -> "PartialQuotients":
        return cls("constant", value=value)

    @classmethod
    def thue_morse(cls, shift: int = 0) -> "PartialQuotients":
        return cls("thue-morse", shift=shift)

    @classmethod
    def yoccoz_prefix(cls, terms, tail: int = 1) -> "PartialQuotients":
        return cls("yoccoz", terms=terms, tail=tail)

    # -- access ----------------------------------------------------------

    @property
    def is_rational(self) -> bool:
        return self.kind == "explicit"

    def term(self, i: int) -> int:
        """1-based quotient a_i."""
        if i < 1:
            raise ValidationError("quotient index is 1-based")
        if self.kind == "explicit":
            if i > len(self.terms):
                raise GeneratorExhausted(
                    f"explicit list has {len(self.terms)} terms, a_{i} requested"
                )
            return self.terms[i - 1]
        if self.kind == "constant":
            return self.value
        if self.kind == "thue-morse":
            return thue_morse_term(self.shift + i - 1)
        # yoccoz: constructed prefix then constant tail
        if i <= len(self.terms):
            return self.terms[i - 1]
        return self.tail

    def prefix(self, n: int) -> tuple[int, ...]:
        """First n quotients a_1..a_n (deterministic, repeatable)."""
        return tuple(self.term(i) for i in range(1, n + 1))

    def require_irrational(self, what: str = "this operation"):
        if self.is_rational:
            raise ValidationError(
                f"{what} requires an irrational (infinite) partial-quotient source"
            )

    # -- serialization ---------------------------------------------------

    def to_descriptor(self):
        if self.kind == "explicit":
            return list(self.terms)
        params = {}
        if self.kind == "constant":
            params["value"] = self.value
        elif self.kind == "thue-morse":
            params["shift"] = self.shift
        else:
            params["terms"] = list(self.terms)
            params["tail"] = self.tail
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_descriptor(cls, obj) -> "PartialQuotients":
        if isinstance(obj, (list, tuple)):
            return cls.explicit(obj)
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ValidationError("partial-quotient descriptor must be a list or {kind, params}")
        kind = obj["kind"]
        params = obj.get("params", {})
        extra = set(obj) - {"kind", "params"}
        if extra:
            raise ValidationError(f"unknown fields in pq descriptor: {sorted(extra)}")
        if kind == "explicit":
            return cls.explicit(params["terms"])
        if kind == "constant":
            return cls.constant(params.get("value", 1))
        if kind == "thue-morse":
            return cls.thue_morse(params.get("shift", 0))
        if kind == "yoccoz":
            return cls.yoccoz_prefix(params["terms"], params.get("tail", 1))
        raise ValidationError(f"unknown pq kind {kind!r}")

    def __eq__(self, other):
        return isinstance(other, PartialQuotients) and self._key() == other._key()

    def _key(self):
        return (self.kind, self.terms, self.value, self.shift, self.tail)

    def __hash__(self):
        return hash(self._key())


@dataclass(frozen=True)
class Convergent:
    n: int
    p: int
    q: int

    def as_fraction(self) -> Fraction:
        return Fraction(self.p, self.q)


@dataclass(frozen=True)
class QualityCertificate:
    n: int
    lower_ok: bool
    upper_ok: bool


def convergents(pq: PartialQuotients, n: int) -> list[Convergent]:
    """Convergents of index 0..n, exact integers."""
    if n < 0:
        raise ValidationError("n must be >= 0")
    out = [Convergent(0, 0, 1)]
    if n == 0:
        return out
    a1 = pq.term(1)
    out.append(Convergent(1, 1, a1))
    p2, q2 = 0, 1  # previous
    p1, q1 = 1, a1
    for i in range(2, n + 1):
        a = pq.term(i)
        p1, p2 = a * p1 + p2, p1
        q1, q2 = a * q1 + q2, q1
        out.append(Convergent(i, p1, q1))
    return out


from functools import lru_cache


@lru_cache(maxsize=4096)
def enclosure(pq: PartialQuotients, depth: int) -> tuple[Fraction, Fraction]:
    """Exact rational interval containing alpha, from convergents depth, depth+1.

    Consecutive convergents bracket the value; the interval is open for an
    irrational alpha.  Finite rational sources return the exact point.
    """
    if pq.is_rational:
        cs = convergents(pq, len(pq.terms))
        v = cs[-1].as_fraction()
        return (v, v)
    if depth < 1:
        raise ValidationError("enclosure depth must be >= 1")
    cs = convergents(pq, depth + 1)
    a = cs[depth].as_fraction()
    b = cs[depth + 1].as_fraction()
    return (a, b) if a < b else (b, a)


def enclosure_for_bits(pq: PartialQuotients, bits: int) -> tuple[Fraction, Fraction]:
    """Enclosure of width below 2**-bits (raises for rationals only on demand)."""
    if pq.is_rational:
        return enclosure(pq, 1)
    target = Fraction(1, 1 << bits)
    depth = 1
    while True:
        lo, hi = enclosure(pq, depth)
        if hi - lo < target:
            return lo, hi
        depth += max(1, depth // 2)


def approx_quality(pq: PartialQuotients, n: int) -> QualityCertificate:
    """Exact check of 1/(2 q_n q_{n+1}) < |alpha - p_n/q_n| < 1/(q_n q_{n+1}).

    alpha is enclosed strictly between convergents n+1 and n+2, so comparing
    the distances from p_n/q_n to the enclosure endpoints certifies both
    strict inequalities (the endpoint values themselves are not attained).
    """
    if n < 1:
        raise ValidationError("quality certificate needs n >= 1")
    pq.require_irrational("approx_quality")
    cs = convergents(pq, n + 2)
    cn = cs[n].as_fraction()
    e1 = cs[n + 1].as_fraction()
    e2 = cs[n + 2].as_fraction()
    near, far = (e2, e1) if abs(e2 - cn) < abs(e1 - cn) else (e1, e2)
    dmin = abs(near - cn)
    dmax = abs(far - cn)
    qn, qn1 = cs[n].q, cs[n + 1].q
    lower_ok = dmin >= Fraction(1, 2 * qn * qn1)
    upper_ok = dmax <= Fraction(1, qn * qn1)
    return QualityCertificate(n, lower_ok, upper_ok)


def eval_real(pq: PartialQuotients, bits: int) -> RealRep:
    """Certified fixed-point realization with error bound <= 2**-bits."""
    if bits < 16:
        raise ValidationError("eval_real needs bits >= 16")
    if pq.is_rational:
        v = enclosure(pq, 1)[0]
        return RealRep.from_fraction(v, bits)
    # |alpha - p_n/q_n| < 1/(q_n q_{n+1}); stop once that is below 2**-(bits+1)
    threshold = 1 << (bits + 1)
    p2, q2 = 0, 1
    p1, q1 = 1, pq.term(1)
    i = 1
    while q1 * (pq.term(i + 1) * q1 + q2) <= threshold:
        i += 1
        a = pq.term(i)
        p1, p2 = a * p1 + p2, p1
        q1, q2 = a * q1 + q2, q1
    r = RealRep.from_fraction(Fraction(p1, q1), bits)
    # rational rounding (<= 1 ulp) plus the approximation gap (< 1/2 ulp)
    return RealRep(r.mantissa, bits, r.err + 1)


def dist_to_int(x: RealRep) -> RealRep:
    """Distance to the nearest integer with the propagated error bound."""
    return x.dist_to_int()


def bounded_pq_constant(pq: PartialQuotients, n_max: int) -> float:
    """Smallest certified C with ||n alpha|| >= 1/(C n) for 1 <= n <= n_max.

    Uses the exact integer enclosure alpha in [A, A+1]/Q with Q = q_m q_{m+1}
    taken deep enough that no multiple n alpha can straddle an integer.
    """
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    pq.require_irrational("bounded_pq_constant")
    # enclosure width n/Q perturbs ||n alpha|| by at most n/Q; Q >> n_max^2 2^42
    # makes the reported constant tight to ~1e-12 as well as certified
    tight = (n_max * n_max) << 42
    depth = 4
    while True:
        lo, hi = enclosure(pq, depth)
        Q = lo.denominator * hi.denominator
        if Q <= tight:
            depth += max(2, depth // 2)
            continue
        A = min(lo.numerator * hi.denominator, hi.numerator * lo.denominator)
        # interval for n*alpha*Q is [n*A, n*A + n]
        best = Fraction(0)
        ok = True
        v = 0
        for n in range(1, n_max + 1):
            v += A
            r = v % Q
            if r + n >= Q or r == 0:
                ok = False  # certified distance collapses: deepen
                break
            dist = min(r, Q - r - n)
            if dist <= 0:
                ok = False
                break
            c_n = Fraction(Q, n * dist)
            if c_n > best:
                best = c_n
        if ok:
            return float(best)
        depth += max(2, depth // 2)
        if depth > 20000:
            raise PrecisionError("could not certify ||n alpha|| over the range", where=n)


def floor_sum(n: int, m: int, a: int, b: int) -> int:
    """Exact sum_{i=0}^{n-1} floor((a*i + b)/m) in O(log) big-integer steps."""
    if n < 0 or m <= 0:
        raise ValidationError("floor_sum needs n >= 0 and m > 0")
    total = 0
    if a < 0:
        a2 = a % m
        total -= n * (n - 1) // 2 * ((a2 - a) // m)
        a = a2
    if b < 0:
        b2 = b % m
        total -= n * ((b2 - b) // m)
        b = b2
    while True:
        if a >= m:
            total += n * (n - 1) // 2 * (a // m)
            a %= m
        if b >= m:
            total += n * (b // m)
            b %= m
        y = a * n + b
        if y < m:
            return total
        n, b, m, a = y // m, y % m, a, m


def dyadic(x: float) -> Fraction:
    """Exact rational value of a float (floats are dyadic rationals)."""
    if not math.isfinite(x):
        raise ValidationError("dyadic() needs a finite float")
    return Fraction(x)
