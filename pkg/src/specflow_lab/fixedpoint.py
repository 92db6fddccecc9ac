"""Certified fixed-point real arithmetic.

A :class:`RealRep` is a dyadic rational ``mantissa / 2**bits`` together with
an integer error radius ``err`` counted in ulps (units of ``2**-bits``).
The contract maintained by every operation is

    |mantissa / 2**bits  -  true value|  <=  err / 2**bits,

with error radii rounded outward.  Nothing here ever drops an error bound
silently; operations that would need to resolve a discontinuity (floor,
fractional part) raise :class:`~specflow_lab.errors.PrecisionError` when the
certified interval straddles the breakpoint.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import PrecisionError

__all__ = ["RealRep"]


class RealRep:
    __slots__ = ("mantissa", "bits", "err")

    def __init__(self, mantissa: int, bits: int, err: int = 0):
        if bits < 1:
            raise ValueError("bits must be >= 1")
        if err < 0:
            raise ValueError("error radius must be >= 0")
        self.mantissa = mantissa
        self.bits = bits
        self.err = err

    # -- constructors -------------------------------------------------

    @classmethod
    def exact_int(cls, n: int, bits: int) -> "RealRep":
        return cls(n << bits, bits, 0)

    @classmethod
    def from_fraction(cls, fr: Fraction, bits: int) -> "RealRep":
        num, den = fr.numerator, fr.denominator
        scaled = num << bits
        q, r = divmod(scaled, den)
        if r == 0:
            return cls(q, bits, 0)
        # round to nearest, 1 ulp error radius
        if 2 * r >= den:
            q += 1
        return cls(q, bits, 1)

    @classmethod
    def from_float(cls, x: float, bits: int) -> "RealRep":
        # floats are dyadic rationals, so this is exact whenever bits suffice
        return cls.from_fraction(Fraction(x), bits)

    # -- views ---------------------------------------------------------

    @property
    def value(self) -> float:
        return _dyadic_to_float(self.mantissa, self.bits)

    @property
    def error_bound(self) -> float:
        if self.err == 0:
            return 0.0
        return _dyadic_to_float_up(self.err, self.bits)

    def to_fraction(self) -> Fraction:
        return Fraction(self.mantissa, 1 << self.bits)

    def interval(self) -> tuple[Fraction, Fraction]:
        den = 1 << self.bits
        return (Fraction(self.mantissa - self.err, den), Fraction(self.mantissa + self.err, den))

    def __repr__(self):
        return f"RealRep({self.value!r} ± {self.error_bound:.3g} @{self.bits}b)"

    # -- rescaling -----------------------------------------------------

    def rescale(self, bits: int) -> "RealRep":
        """Change precision; scaling up is exact, scaling down rounds outward."""
        if bits == self.bits:
            return self
        if bits > self.bits:
            sh = bits - self.bits
            return RealRep(self.mantissa << sh, bits, self.err << sh)
        sh = self.bits - bits
        m = self.mantissa >> sh
        # outward error: rounding-down loss plus scaled radius, both rounded up
        err = (self.err >> sh) + 2
        return RealRep(m, bits, err)

    def _aligned(self, other: "RealRep") -> tuple["RealRep", "RealRep"]:
        bits = max(self.bits, other.bits)
        return self.rescale(bits), other.rescale(bits)

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, RealRep):
            a, b = self._aligned(other)
            return RealRep(a.mantissa + b.mantissa, a.bits, a.err + b.err)
        if isinstance(other, int):
            return RealRep(self.mantissa + (other << self.bits), self.bits, self.err)
        if isinstance(other, Fraction):
            return self + RealRep.from_fraction(other, self.bits)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return RealRep(-self.mantissa, self.bits, self.err)

    def __sub__(self, other):
        if isinstance(other, (RealRep, int, Fraction)):
            return self + (-other if isinstance(other, RealRep) else -1 * other)
        return NotImplemented

    def scale_int(self, n: int) -> "RealRep":
        return RealRep(self.mantissa * n, self.bits, self.err * abs(n))

    def __mul__(self, other):
        if isinstance(other, int):
            return self.scale_int(other)
        if isinstance(other, RealRep):
            a, b = self._aligned(other)
            bits = a.bits
            prod = a.mantissa * b.mantissa
            m = _round_shift(prod, bits)
            err = ((abs(a.mantissa) * b.err + abs(b.mantissa) * a.err + a.err * b.err) >> bits) + 2
            return RealRep(m, bits, err)
        if isinstance(other, Fraction):
            return self * RealRep.from_fraction(other, self.bits)
        return NotImplemented

    __rmul__ = __mul__

    # -- discontinuous pieces -----------------------------------------

    def floor(self) -> int:
        """Certified integer part; error if the interval straddles an integer."""
        lo = (self.mantissa - self.err) >> self.bits
        hi = (self.mantissa + self.err) >> self.bits
        if lo != hi:
            raise PrecisionError("integer part is ambiguous at this precision")
        return lo

    def frac(self) -> "RealRep":
        """Certified fractional part in [0, 1)."""
        q = self.floor()
        return RealRep(self.mantissa - (q << self.bits), self.bits, self.err)

    def dist_to_int(self) -> "RealRep":
        """Distance to the nearest integer, in [0, 1/2].

        Continuous everywhere, so no floor certification is needed, but a
        radius of 1/4 or more makes the result meaningless.
        """
        if self.err >= (1 << (self.bits - 2)):
            raise PrecisionError("error bound >= 1/4: distance to nearest integer is meaningless")
        one = 1 << self.bits
        r = self.mantissa % one
        d = min(r, one - r)
        return RealRep(d, self.bits, self.err)

    # -- certified comparisons ----------------------------------------

    def definitely_gt(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = RealRep.from_fraction(Fraction(other), self.bits)
        a, b = self._aligned(other)
        return a.mantissa - a.err > b.mantissa + b.err

    def definitely_lt(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = RealRep.from_fraction(Fraction(other), self.bits)
        a, b = self._aligned(other)
        return a.mantissa + a.err < b.mantissa - b.err


def _round_shift(n: int, sh: int) -> int:
    """Round-to-nearest right shift."""
    if sh == 0:
        return n
    half = 1 << (sh - 1)
    return (n + half) >> sh


def _dyadic_to_float(m: int, bits: int) -> float:
    sign = -1.0 if m < 0 else 1.0
    m = abs(m)
    nb = m.bit_length()
    if nb <= 53:
        return sign * math.ldexp(m, -bits)
    sh = nb - 53
    top = (m >> sh) + ((m >> (sh - 1)) & 1)
    return sign * math.ldexp(top, sh - bits)


def _dyadic_to_float_up(m: int, bits: int) -> float:
    """Upper float bound of a nonnegative dyadic, never rounding down."""
    nb = m.bit_length()
    if nb <= 53:
        return math.ldexp(m, -bits)
    sh = nb - 53
    return math.ldexp((m >> sh) + 1, sh - bits)
