"""Rotation pairs on the two-torus and their certificates.

Two constructions are provided.  The palindromic pair takes the mapped
Thue-Morse word a_1 a_2 ... and sets alpha = [0; a_1, a_2, ...] and
beta = {1/alpha} = [0; a_2, a_3, ...]; every palindromic prefix of length
k+1 forces the k-th denominators of alpha and beta to coincide, which is
verified here by running both exact recurrences.  The fast-alternating
pair picks quotients greedily and minimally so that the denominators obey

    4 g(n-1) g(n) q_n <= r_n   and   4 g(n)^2 r_n <= q_{n+1}

exactly at every constructed level (g is the growth schedule, g(0) := 1).

Ergodicity is certified by a bounded search for integer relations
k alpha + l beta = m; a clean verdict is a finite certificate, not a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from . import cfrac
from .cfrac import Convergent, PartialQuotients, convergents, eval_real
from .errors import PrecisionError, ValidationError
from .fixedpoint import RealRep

__all__ = [
    "RotationVector2",
    "PalindromicPair",
    "YoccozPair",
    "ErgodicityCertificate",
    "thue_morse_symbols",
    "palindromic_prefix_lengths",
    "palindromic_pair",
    "yoccoz_pair",
    "ergodicity_check",
    "orbit_point",
    "golden_pair",
]

DEFAULT_BITS = 128


def thue_morse_symbols(n: int) -> tuple[int, ...]:
    """First n symbols of the Thue-Morse word with 0 -> 1, 1 -> 2."""
    if n < 1:
        raise ValidationError("need n >= 1 symbols")
    return tuple(cfrac.thue_morse_term(k) for k in range(n))


def palindromic_prefix_lengths(word) -> list[int]:
    """Lengths L with word[:L] a palindrome."""
    w = list(word)
    return [L for L in range(1, len(w) + 1) if w[:L] == w[L - 1 :: -1]]


@dataclass
class ErgodicityCertificate:
    search_bound: int
    precision_bits: int
    verdict: str  # "no-relation-found" | "relation-found"
    witness: Optional[tuple[int, int, int]] = None
    residual: float = 0.0
    assumptions: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.verdict == "no-relation-found"


class RotationVector2:
    """An (alpha, beta) rotation carried as exact quotients plus certified reals."""

    def __init__(self, alpha_pq: PartialQuotients, beta_pq: PartialQuotients, bits: int = DEFAULT_BITS):
        alpha_pq.require_irrational("a torus rotation coordinate")
        beta_pq.require_irrational("a torus rotation coordinate")
        self.alpha_pq = alpha_pq
        self.beta_pq = beta_pq
        self.bits = bits
        self.alpha: RealRep = eval_real(alpha_pq, bits)
        self.beta: RealRep = eval_real(beta_pq, bits)
        self.ergodicity_certificate: Optional[ErgodicityCertificate] = None

    @property
    def alpha_float(self) -> float:
        return self.alpha.value

    @property
    def beta_float(self) -> float:
        return self.beta.value

    def alpha_denominators(self, n: int) -> list[int]:
        return [c.q for c in convergents(self.alpha_pq, n)]

    def beta_denominators(self, n: int) -> list[int]:
        return [c.q for c in convergents(self.beta_pq, n)]

    def to_descriptor(self):
        return {
            "alpha": self.alpha_pq.to_descriptor(),
            "beta": self.beta_pq.to_descriptor(),
            "precision_bits": self.bits,
        }

    @classmethod
    def from_descriptor(cls, obj) -> "RotationVector2":
        extra = set(obj) - {"alpha", "beta", "precision_bits"}
        if extra:
            raise ValidationError(f"unknown fields in rotation descriptor: {sorted(extra)}")
        return cls(
            PartialQuotients.from_descriptor(obj["alpha"]),
            PartialQuotients.from_descriptor(obj["beta"]),
            int(obj.get("precision_bits", DEFAULT_BITS)),
        )


def golden_pair(bits: int = DEFAULT_BITS) -> RotationVector2:
    """Bounded-quotient ergodic reference pair: alpha all-1, beta all-2 quotients."""
    rot = RotationVector2(PartialQuotients.constant(1), PartialQuotients.constant(2), bits)
    rot.ergodicity_certificate = ergodicity_check(rot, 50)
    return rot


@dataclass
class PalindromicPair:
    symbols: tuple[int, ...]
    palindromic_prefix_lengths: list[int]
    common_denominators: list[int]
    rotation: RotationVector2
    no_palindrome_warning: bool = False
    assumptions: tuple[str, ...] = (
        "word assumed not eventually periodic (true for Thue-Morse)",
    )


def palindromic_pair(n_terms: int, bits: int = DEFAULT_BITS) -> PalindromicPair:
    """Common-denominator pair from the mapped Thue-Morse word.

    Scans prefixes of length <= n_terms; for a palindromic prefix of length
    k+1 records l = q_k(alpha) after checking, by exact recurrence on both
    expansions, that it equals the k-th denominator of beta.
    """
    if n_terms < 3:
        raise ValidationError("need n_terms >= 3")
    word = thue_morse_symbols(n_terms)
    rot = RotationVector2(PartialQuotients.thue_morse(0), PartialQuotients.thue_morse(1), bits)
    lengths = palindromic_prefix_lengths(word)
    qa = rot.alpha_denominators(n_terms)
    qb = rot.beta_denominators(n_terms - 1)
    commons = []
    for L in lengths:
        k = L - 1
        la, lb = qa[k], (qb[k] if k <= n_terms - 1 else None)
        if lb is None or la != lb:
            raise ValidationError(f"denominator mismatch at palindromic prefix length {L}")
        commons.append(la)
    return PalindromicPair(
        symbols=word,
        palindromic_prefix_lengths=lengths,
        common_denominators=commons,
        rotation=rot,
        no_palindrome_warning=not commons,
    )


GammaSchedule = Callable[[int], Fraction]


def make_gamma(spec) -> GammaSchedule:
    """Growth schedules: g(0) = 1 always; 'linear' means g(n) = n + 1."""
    if callable(spec):
        return lambda n: Fraction(1) if n == 0 else Fraction(spec(n))
    if spec == "linear":
        return lambda n: Fraction(1) if n == 0 else Fraction(n + 1)
    if isinstance(spec, (list, tuple)):
        vals = [Fraction(v) for v in spec]
        return lambda n: Fraction(1) if n == 0 else vals[n - 1]
    raise ValidationError(f"unknown gamma schedule {spec!r}")


@dataclass
class YoccozPair:
    gamma_spec: object
    levels: int
    alpha_pq: PartialQuotients
    beta_pq: PartialQuotients
    q: list[int]  # q_0 .. q_{levels+1}
    r: list[int]  # r_0 .. r_{levels}
    rotation: RotationVector2 = field(repr=False, default=None)

    def verify(self) -> bool:
        """Exact re-check of both growth inequalities at every level."""
        g = make_gamma(self.gamma_spec)
        for n in range(1, self.levels + 1):
            if not (4 * g(n - 1) * g(n) * self.q[n] <= self.r[n]):
                return False
            if not (4 * g(n) ** 2 * self.r[n] <= self.q[n + 1]):
                return False
        return True

    def tables_csv_rows(self) -> list[tuple[str, str, str]]:
        rows = []
        for n in range(self.levels + 2):
            rows.append((str(n), str(self.q[n]), str(self.r[n]) if n < len(self.r) else ""))
        return rows


def yoccoz_pair(gamma, levels: int, seed_quotients=None, bits: int = DEFAULT_BITS) -> YoccozPair:
    """Greedy-minimal denominators meeting the alternating growth inequalities.

    At stage n the next beta quotient is the least b with
    r_n = b r_{n-1} + r_{n-2} >= ceil(4 g(n-1) g(n) q_n), then the next alpha
    quotient is the least a with q_{n+1} >= ceil(4 g(n)^2 r_n).  Minimality
    keeps the denominators as small as the inequalities allow, and makes the
    construction monotone in the schedule.
    """
    if levels < 1:
        raise ValidationError("levels must be >= 1")
    g = make_gamma(gamma)
    if g(1) < 1:
        raise ValidationError("schedule must satisfy g(1) >= 1")
    for n in range(1, levels):
        if not g(n + 1) > g(n):
            raise ValidationError("schedule must be strictly increasing")

    a = [int(seed_quotients[0]) if seed_quotients else 1]
    q = [1, a[0]]
    b: list[int] = []
    r = [0, 1]  # r_{-1}, r_0 seeds of the recurrence
    for n in range(1, levels + 1):
        target_r = _ceil_frac(4 * g(n - 1) * g(n) * q[n])
        bn = max(1, _ceil_div(target_r - r[-2], r[-1]))
        b.append(bn)
        r.append(bn * r[-1] + r[-2])
        target_q = _ceil_frac(4 * g(n) ** 2 * r[-1])
        an = max(1, _ceil_div(target_q - q[n - 1], q[n]))
        a.append(an)
        q.append(an * q[n] + q[n - 1])

    alpha_pq = PartialQuotients.yoccoz_prefix(a, tail=1)
    beta_pq = PartialQuotients.yoccoz_prefix(b, tail=1)
    pair = YoccozPair(
        gamma_spec=gamma,
        levels=levels,
        alpha_pq=alpha_pq,
        beta_pq=beta_pq,
        q=q,
        r=r[1:],
        rotation=RotationVector2(alpha_pq, beta_pq, bits),
    )
    if not pair.verify():
        raise ValidationError("greedy construction failed its own exact re-check")
    return pair


def _ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def ergodicity_check(rot: RotationVector2, K: int, bits: Optional[int] = None) -> ErgodicityCertificate:
    """Bounded search for integer relations k alpha + l beta = m, 0 < |k|,|l| <= K.

    Works on exact rational enclosures and adaptively deepens them, so a
    candidate is either certified away from zero or reported as a
    near-relation at the final residual.  |m| <= 2K covers all candidates
    since both coordinates lie in (0, 1).
    """
    if K < 1:
        raise ValidationError("K must be >= 1")
    bits = bits or rot.bits
    max_bits = 4 * bits
    p = bits
    while True:
        a = eval_real(rot.alpha_pq, p)
        bb = eval_real(rot.beta_pq, p)
        one = 1 << p
        worst = None  # (dist, k, l, m)
        for k in range(-K, K + 1):
            if k == 0:
                continue
            for l in range(-K, K + 1):
                if l == 0:
                    continue
                v = k * a.mantissa + l * bb.mantissa
                margin = abs(k) * a.err + abs(l) * bb.err
                rm = v % one
                dist = min(rm, one - rm)
                if worst is None or dist < worst[0]:
                    worst = (dist, k, l, (v + one // 2) // one, margin)
        dist, k, l, m, margin = worst
        if dist > margin:
            return ErgodicityCertificate(K, p, "no-relation-found")
        if p >= max_bits:
            return ErgodicityCertificate(
                K, p, "relation-found", witness=(k, l, m), residual=math.ldexp(float(dist + margin), -p)
            )
        p *= 2


def orbit_point(rot: RotationVector2, x0: float, y0: float, n: int) -> tuple[RealRep, RealRep]:
    """Certified ({x0 + n alpha}, {y0 + n beta}).

    Error bound |n| ulps of alpha/beta plus input rounding; raises once the
    bound degrades past 2**-20 or the fractional part becomes ambiguous.
    """
    bits = rot.bits
    out = []
    for start, coord in ((x0, rot.alpha), (y0, rot.beta)):
        base = RealRep.from_float(start, bits)
        shifted = base + coord.scale_int(n)
        if shifted.err >= (1 << max(0, bits - 20)):
            raise PrecisionError(
                f"orbit error bound {shifted.error_bound:.3g} exceeds 2^-20; raise precision_bits"
            )
        out.append(shifted.frac())
    return out[0], out[1]
