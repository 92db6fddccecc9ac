"""Sparse crossing sequences and shadowing-witness machinery.

The central objects are the integer crossing sequences
N(x + n a, x' + n a) = [x' + n a] - [x + n a] of a pair of nearby lifted
orbits.  For a bounded-quotient rotation number their nonzero times are
(c1/d, c2/d)-sparse in the gap sense, with d the pair distance.  On top of
these the witness engine follows the constructive selection argument: find
two long crossing-free gaps among the first few merged crossing times, pick
the window start M inside one of them so that the cocycle difference
exceeds the rational-independence floor h/4, and certify that the
difference stays within eps of its value p = f^(M)-difference over the
whole window [M, M + L).

For sawtooth roofs every quantity here is exact: the difference is
piecewise linear in n between crossing times with slope
(sum d1) dx + (sum d2) dy, so window counts are solved in closed form.
Smooth or nil parts fall back to the compiled difference-series kernel.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import kernels
from .cfrac import bounded_pq_constant, dyadic
from .errors import CheckFailure, PrecisionError, ValidationError
from .fixedpoint import RealRep
from .roof import RoofFunction
from .rotations import RotationVector2
from .streams import uniform_block

__all__ = [
    "SparseSequence",
    "SparsenessVerdict",
    "CocycleModel",
    "RatnerWitness",
    "crossing_sequence",
    "sparseness_check",
    "sparse_sum_bound",
    "build_cocycle_model",
    "cocycle_identity_residual",
    "witness_constructive",
    "witness_empirical",
]


# ---------------------------------------------------------------------------
# crossing sequences and sparseness


@dataclass(frozen=True)
class SparseSequence:
    """Integer sequence supported on sparse crossing times (k_0 = 0 convention).

    Stored sparsely: ``crossing_indices`` are the n >= 1 with a nonzero
    value, ``values`` the corresponding entries in [-R, R] (here always
    the constant sign of the pair offset).  A nonzero entry at n = 0 is
    allowed by the convention and kept separately.
    """

    crossing_indices: tuple
    values: tuple
    n_max: int
    R: float = 1.0
    value_at_zero: int = 0

    def value(self, n: int) -> int:
        if n == 0:
            return self.value_at_zero
        i = bisect_left(self.crossing_indices, n)
        if i < len(self.crossing_indices) and self.crossing_indices[i] == n:
            return self.values[i]
        return 0

    def count_upto(self, n: int) -> int:
        """Number of nonzero entries at times < n (the n = 0 one included)."""
        return bisect_left(self.crossing_indices, n) + (1 if n >= 1 and self.value_at_zero else 0)

    def partial_sum(self, n: int) -> int:
        i = bisect_left(self.crossing_indices, n)
        base = self.value_at_zero if n >= 1 else 0
        return base + sum(self.values[:i])


def crossing_sequence(alpha: RealRep, x: float, xp: float, n_max: int) -> SparseSequence:
    """The sequence ([x' + n a] - [x + n a]) for n = 0 .. n_max.

    Scanned in doubles, with every decision near an interval endpoint
    re-decided exactly in fixed point against the certified rotation word;
    a decision inside the certified error of the boundary is a hard error.
    """
    d = xp - x
    if d == 0.0:
        return SparseSequence((), (), n_max)
    if not abs(d) < 0.5:
        raise ValidationError("need 0 < |x - x'| < 1/2")
    sign = 1 if d > 0 else -1
    base = min(x, xp)
    width = abs(d)
    af = alpha.value
    slack = n_max * 3e-16 * max(1.0, abs(af) * 1.1) + 1e-14
    idx, flagged = kernels.crossing_scan(base % 1.0, af, 1.0 - width, 1.0, n_max + 1, slack)
    hits = set(int(v) for v in idx)
    if len(flagged):
        one = 1 << alpha.bits
        A = alpha.mantissa % one
        B0 = RealRep.from_float(base % 1.0, alpha.bits).mantissa % one
        W = RealRep.from_float(width, alpha.bits).mantissa
        lo = one - W
        for n in (int(v) for v in flagged):
            pos = (B0 + n * A) % one
            margin = n * alpha.err + 2
            if abs(pos - lo) <= margin or min(pos, one - pos) <= margin:
                raise PrecisionError(
                    "crossing decision within the certified rotation error", where=n
                )
            if pos >= lo:
                hits.add(n)
            else:
                hits.discard(n)
    times = tuple(sorted(h for h in hits if h >= 1))
    return SparseSequence(
        times, tuple(sign for _ in times), n_max, value_at_zero=sign if 0 in hits else 0
    )


@dataclass(frozen=True)
class SparsenessVerdict:
    a_sparse: bool
    ab_sparse: bool
    min_gap: Optional[int]
    max_gap: Optional[int]
    crossings: int


def sparseness_check(seq: SparseSequence, a: float, b: float) -> SparsenessVerdict:
    """Exact gap statistics against the strict (a) and two-sided (a, b) notions.

    Convention: with fewer than two crossings the inner gaps are undefined,
    so the one-sided check is vacuously true and the two-sided one is
    false.  The truncated tail counts against the upper gap bound when it
    already exceeds b.
    """
    ks = seq.crossing_indices
    if len(ks) < 2:
        return SparsenessVerdict(True, False, None, None, len(ks))
    gaps = [ks[i + 1] - ks[i] for i in range(len(ks) - 1)]
    min_gap, max_gap = min(gaps), max(gaps)
    first = ks[0]  # k_1 - k_0 with k_0 = 0, constrained only from above
    tail = seq.n_max - ks[-1]
    a_ok = min_gap >= a
    ab_ok = a_ok and max_gap <= b and first <= b and tail <= b
    return SparsenessVerdict(a_ok, ab_ok, min_gap, max_gap, len(ks))


def sparse_sum_bound(seq: SparseSequence, a: float) -> bool:
    """Check |sum_{k<n} x_k| <= R (1 + n/a) for every n up to the horizon."""
    if a <= 0:
        raise ValidationError("a must be positive")
    s = seq.value_at_zero
    if abs(s) > seq.R * (1.0 + 1.0 / a):
        return False
    for k, v in zip(seq.crossing_indices, seq.values):
        # partial sums change at n = k + 1 and stay constant until the next
        s += v
        if abs(s) > seq.R * (1.0 + (k + 1) / a):
            return False
    return True


# ---------------------------------------------------------------------------
# the cocycle model of the jump class


@dataclass(frozen=True)
class SequenceSpec:
    coord: str  # "x" | "y"
    offset: float
    shift: int = 0  # evaluate the crossing at n + shift
    weight: str = "sign"  # "sign" | "frac_y" | "self_x"
    h_index: Optional[int] = None  # position of its coefficient in H


@dataclass(frozen=True)
class CocycleModel:
    roof: RoofFunction = field(repr=False)
    rotation: RotationVector2 = field(repr=False)
    case: str
    h_values: tuple
    s: int
    sequences: tuple  # SequenceSpec for j = 1..s
    boundary: Optional[SequenceSpec]
    R: float
    B: float
    C0: float
    C1: float
    C2: float
    h_floor: float
    p0: float
    p1: float
    independence_bound: int
    independence_tol: float
    max_quotient_seen: int
    sweep: tuple = field(repr=False, default=())

    def eps_cap(self) -> float:
        return min(0.5, self.C0 * self.C1 / self.s, self.h_floor / (4 * self.s))

    def kappa(self, eps: float) -> float:
        return eps / (6 * self.s * self.C0 * self.C2)

    def delta(self, eps: float, N: int) -> float:
        return eps**3 * self.C1 / (2 * self.C0 * N)


def _lipschitz_of_trig(f: RoofFunction) -> float:
    return sum(
        2 * math.pi * math.hypot(kx, ky) * math.hypot(cc, cs) for kx, ky, cc, cs in f.trig
    )


def _independence_search(values, K: int, tol: float):
    """Smallest |integer combination| over coefficients in [-K, K]^s, brute force."""
    vals = list(values)
    s = len(vals)
    best = (math.inf, None)
    coeffs = [0] * s

    def rec(i, acc):
        nonlocal best
        if i == s:
            if any(coeffs) and abs(acc) < best[0]:
                best = (abs(acc), tuple(coeffs))
            return
        for c in range(-K, K + 1):
            coeffs[i] = c
            rec(i + 1, acc + c * vals[i])
        coeffs[i] = 0

    rec(0, 0.0)
    return best


def _nonzero_combination_floor(values) -> float:
    """min |sum r_j h_j| over r in {-1,0,1}^s with the sum itself nonzero.

    Exactly-zero combinations (possible through the repeated coefficient)
    are excluded by construction of the target set.
    """
    vals = list(values)
    best = math.inf
    s = len(vals)

    def rec(i, acc):
        nonlocal best
        if i == s:
            if acc != 0.0 and abs(acc) < best:
                best = abs(acc)
            return
        for c in (-1, 0, 1):
            rec(i + 1, acc + c * vals[i])

    rec(0, 0.0)
    return best


def build_cocycle_model(
    f: RoofFunction,
    rot: RotationVector2,
    sweep_ds=(1e-2, 1e-3, 1e-4),
    independence_bound: int = 6,
    independence_tol: float = 1e-9,
    quotient_range: int = 60,
    seed: int = 0,
) -> CocycleModel:
    """Crossing-counter model for a separated-jump roof over a bounded pair.

    Certifies (up to the bounded search) that the jump sizes (and the nil
    coefficient, when present) admit no small integer relation, estimates
    the gap constants from crossing-sequence sweeps over both coordinates,
    and assembles the drift constant

        C0 = Lip(g) + sum|d1| + sum|d2| + alpha + beta + 2.
    """
    if not f.saw_x or not f.saw_y:
        raise ValidationError("the model needs jump terms in both coordinates")
    d1 = [d for d, _ in f.saw_x]
    d2 = [d for d, _ in f.saw_y]
    case = "ii" if f.gamma == 0.0 else "i"
    hs = list(d1) + list(d2) + ([f.gamma, f.gamma] if case == "i" else [])
    core = hs[:-1] if case == "i" else hs
    gap, rel = _independence_search(core, independence_bound, independence_tol)
    if gap < independence_tol:
        raise ValidationError(f"bounded search found a near integer relation {rel}")

    # bounded-quotient certification over a finite range, with a warning flag
    max_q = max(max(rot.alpha_pq.prefix(quotient_range)), max(rot.beta_pq.prefix(quotient_range)))
    for pq in (rot.alpha_pq, rot.beta_pq):
        bounded_pq_constant(pq, 256)

    # gap-constant sweep on both coordinates
    gapstats = []
    rng = uniform_block(seed, 11, len(sweep_ds) * 2, 1)[:, 0]
    i = 0
    for coord, al in (("x", rot.alpha), ("y", rot.beta)):
        for dval in sweep_ds:
            x0 = 0.05 + 0.9 * float(rng[i])
            i += 1
            horizon = int(math.ceil(60.0 / dval))
            seq = crossing_sequence(al, x0, x0 + dval, horizon)
            v = sparseness_check(seq, 0, math.inf)
            if v.min_gap is not None:
                gapstats.append((coord, dval, v.min_gap * dval, v.max_gap * dval))
    if not gapstats:
        raise CheckFailure("gap sweep produced no crossings; enlarge the horizon")
    c1 = 0.9 * min(g[2] for g in gapstats)
    c2 = 1.1 * max(g[3] for g in gapstats)
    # the selection argument is stated under 0 < C1 <= 1 <= C0, C2
    c1 = min(c1, 1.0)
    c2 = max(c2, 1.0)

    s = len(hs)
    seqs = []
    for j, (_, delta) in enumerate(f.saw_x):
        seqs.append(SequenceSpec("x", delta, 0, "sign", j))
    for j, (_, delta) in enumerate(f.saw_y):
        seqs.append(SequenceSpec("y", delta, 0, "sign", len(d1) + j))
    boundary = None
    if case == "i":
        seqs.append(SequenceSpec("x", 0.0, 0, "frac_y", s - 2))
        seqs.append(SequenceSpec("y", 0.0, 1, "self_x", s - 1))
        boundary = SequenceSpec("y", 0.0, 0, "sign", None)

    C0 = max(
        1.0,
        _lipschitz_of_trig(f)
        + sum(abs(v) for v in d1)
        + sum(abs(v) for v in d2)
        + rot.alpha_float
        + rot.beta_float
        + 2.0,
    )
    B = abs(f.gamma)
    h_floor = _nonzero_combination_floor(hs)
    p1 = 1.0 * ((3 * s * c2 / c1 + 2) * sum(abs(v) for v in hs) + B + 3 * s * C0 * c2 + 2)
    return CocycleModel(
        roof=f,
        rotation=rot,
        case=case,
        h_values=tuple(hs),
        s=s,
        sequences=tuple(seqs),
        boundary=boundary,
        R=1.0,
        B=B,
        C0=C0,
        C1=c1,
        C2=c2,
        h_floor=h_floor,
        p0=h_floor / 4.0,
        p1=p1,
        independence_bound=independence_bound,
        independence_tol=independence_tol,
        max_quotient_seen=max_q,
        sweep=tuple(gapstats),
    )


# ---------------------------------------------------------------------------
# exact identity residuals (fixed point on lifts)


def _fp(v, bits: int) -> int:
    r = RealRep.from_fraction(v, bits) if isinstance(v, Fraction) else RealRep.from_float(v, bits)
    return r.mantissa


def _floor_fp(m: int, bits: int) -> int:
    return m >> bits


def _frac_fp(m: int, bits: int) -> int:
    return m - ((m >> bits) << bits)


def cocycle_identity_residual(
    model: CocycleModel, p: tuple, pp: tuple, n: int, which: str = "master", bits: int = 128
) -> float:
    """|LHS - RHS| of the lift identities, evaluated in fixed point.

    which = "u":      plain-sawtooth telescoping
            sum({x'+ka} - {x+ka}) = n (x'-x) + sum([x'+ka] - [x+ka])
    which = "h":      the nil-term telescoped form
    which = "master": the full decomposition of the roof difference into
            jump counters, linear drift and the nil part.

    The identities are exact for the truncated rotation word itself, so
    the residual is pure accumulated product rounding.
    """
    rot = model.rotation
    f = model.roof
    one = 1 << bits
    half = one >> 1
    A = rot.alpha.rescale(bits).mantissa
    Bb = rot.beta.rescale(bits).mantissa
    x, y = (_fp(v, bits) for v in p)
    xp, yp = (_fp(v, bits) for v in pp)

    def fracv(m):
        return m - ((m >> bits) << bits)

    def floorv(m):
        return m >> bits

    def mulf(a, b):  # fixed * fixed -> fixed, round to nearest
        return (a * b + half) >> bits

    def u_lhs(z0, rate):
        return sum(fracv(z0 + k * rate) for k in range(n))

    def u_rhs(z0, zp0, rate):
        # {t} = t - [t] makes the crossing sum enter with a minus sign
        lin = n * (zp0 - z0)
        cross = sum(floorv(zp0 + k * rate) - floorv(z0 + k * rate) for k in range(n))
        return lin - (cross << bits)

    def h_at(X, Y):
        return mulf(A, fracv(Y)) - mulf(fracv(X) + A, floorv(fracv(Y) + Bb) << bits)

    def h_lhs(X0, Y0):
        return sum(h_at(X0 + k * A, Y0 + k * Bb) for k in range(n))

    def h_rhs(X0, Y0):
        lin = mulf(A, n * Y0 + ((n * (n - 1)) // 2) * Bb)
        tele = mulf(X0, floorv(Y0) << bits) - mulf(X0 + n * A, floorv(Y0 + n * Bb) << bits)
        cross = sum(
            (floorv(X0 + k * A)) * (floorv(Y0 + (k + 1) * Bb) - floorv(Y0 + k * Bb))
            for k in range(n)
        )
        return lin + tele + (cross << bits)

    if which == "u":
        lhs = u_lhs(xp, A) - u_lhs(x, A)
        rhs = u_rhs(x, xp, A)
    elif which == "h":
        lhs = h_lhs(xp, yp) - h_lhs(x, y)
        rhs = h_rhs(xp, yp) - h_rhs(x, y)
    elif which == "master":
        lhs = 0
        for d, delta in f.saw_x:
            D = _fp(d, bits)
            off = _fp(delta, bits)
            lhs += mulf(D, u_lhs(xp - off, A) - u_lhs(x - off, A))
        for d, delta in f.saw_y:
            D = _fp(d, bits)
            off = _fp(delta, bits)
            lhs += mulf(D, u_lhs(yp - off, Bb) - u_lhs(y - off, Bb))
        g = _fp(f.gamma, bits)
        if f.gamma != 0.0:
            lhs += mulf(g, h_lhs(xp, yp) - h_lhs(x, y))
        rhs = 0
        for d, delta in f.saw_x:
            D = _fp(d, bits)
            off = _fp(delta, bits)
            rhs += mulf(D, u_rhs(x - off, xp - off, A))
        for d, delta in f.saw_y:
            D = _fp(d, bits)
            off = _fp(delta, bits)
            rhs += mulf(D, u_rhs(y - off, yp - off, Bb))
        if f.gamma != 0.0:
            rhs += mulf(g, h_rhs(xp, yp) - h_rhs(x, y))
    else:
        raise ValidationError(f"unknown identity {which!r}")
    return abs(math.ldexp(float(lhs - rhs), -bits))


# ---------------------------------------------------------------------------
# shadowing witnesses


@dataclass(frozen=True)
class RatnerWitness:
    M: int
    L: int
    p: float
    good_fraction: float
    eps: float
    eps_requested: float
    d: float
    kappa: float
    p0: float
    p1: float
    delta_satisfied: bool
    drift_checked: bool

    @property
    def ratio(self) -> float:
        return self.L / self.M

    @property
    def passes(self) -> bool:
        return (
            self.ratio >= self.kappa
            and self.p0 <= abs(self.p) <= self.p1
            and self.good_fraction > 1.0 - self.eps
        )


def _lift_offsets(p: tuple, pp: tuple) -> tuple[float, float]:
    """Coordinate offsets of the minimal-displacement lift, in (-1/2, 1/2]."""
    out = []
    for a, b in zip(p, pp):
        d = (b - a) % 1.0
        if d > 0.5:
            d -= 1.0
        out.append(d)
    return tuple(out)


def _spec_times(model: CocycleModel, spec: SequenceSpec, p, dx, dy, horizon):
    """Nonzero times of one crossing counter, with its constant sign."""
    rot = model.rotation
    if spec.coord == "x":
        delta_c, base, rate = dx, p[0] - spec.offset, rot.alpha
    else:
        delta_c, base, rate = dy, p[1] - spec.offset, rot.beta
    if delta_c == 0.0:
        return (), 0
    start = base + spec.shift * rate.value
    seq = crossing_sequence(rate, start, start + delta_c, horizon)
    times = seq.crossing_indices
    if seq.value_at_zero:
        times = (0,) + times
    if spec.weight == "self_x":
        # keep only times where the x-orbit itself steps across the integer
        al = rot.alpha_float
        xs = np.mod((p[0] + dx if dx != 0 else p[0]) + np.array(times, dtype=float) * al, 1.0)
        keep = xs >= 1.0 - al
        times = tuple(t for t, k in zip(times, keep) if k)
    return times, (1 if delta_c > 0 else -1)


def witness_constructive(
    model: CocycleModel,
    p: tuple,
    pp: tuple,
    eps: float,
    N: int = 1,
) -> RatnerWitness:
    """Run the window-selection argument and return a verified witness.

    Follows the constructive proof: merge the crossing times of all model
    sequences, locate the first two long crossing-free gaps (with the
    smallest index spread), take M at the end of one so that the
    difference-of-cocycles exceeds the independence floor h/4, and count
    the window times whose difference stays within eps of p.
    """
    dx, dy = _lift_offsets(p, pp)
    d = max(abs(dx), abs(dy))
    if d == 0.0:
        raise ValidationError("the two points coincide")
    cap = model.eps_cap()
    eps_eff = min(eps, 0.999 * cap)
    L = int(math.ceil(eps_eff / (model.C0 * d)))
    if L < N:
        raise ValidationError(
            f"window length {L} below the requested floor N={N}; shrink d or raise eps"
        )
    s = model.s
    horizon = int(math.ceil(3 * s * model.C2 / d)) + 4 * L + 64

    merged = set()
    seq_data = []
    for spec in model.sequences:
        times, sign = _spec_times(model, spec, p, dx, dy, horizon)
        seq_data.append((spec, times, sign))
        merged.update(times)
    ks = sorted({0} | merged)
    if len(ks) < 3 * s + 2:
        raise CheckFailure(
            f"only {len(ks) - 1} merged crossings within the horizon; "
            "pair too close to a lattice configuration"
        )

    # candidate gap pairs: s < m1 <= 2s, m1 < m2 <= m1 + s, both gaps > L
    best = None
    for m1 in range(s + 1, 2 * s + 1):
        if ks[m1 + 1] - ks[m1] <= L:
            continue
        for m2 in range(m1 + 1, m1 + s + 1):
            if ks[m2 + 1] - ks[m2] <= L:
                continue
            if best is None or m2 - m1 < best[1] - best[0]:
                best = (m1, m2)
            break
    if best is None:
        raise CheckFailure("no admissible pair of long gaps; model constants likely off")
    m1, m2 = best

    boundary_times = ()
    if model.boundary is not None:
        boundary_times, _ = _spec_times(model, model.boundary, p, dx, dy, horizon)
    bset = set(boundary_times)

    def pick(cands):
        for cand in cands:
            if cand not in bset and cand >= 1:
                return cand
        return None

    M1 = pick((ks[m1 + 1] - L, ks[m1 + 1] - L + 1))
    M2 = pick((ks[m2] + 1, ks[m2] + 2))
    if M1 is None or M2 is None:
        raise CheckFailure("both boundary-free window anchors are occupied")

    exact = model.roof.is_sawtooth_only
    if exact:
        drift = dyadic(model.roof.saw_slope_x) * dyadic(dx) + dyadic(
            model.roof.saw_slope_y
        ) * dyadic(dy)

        def delta_at(M: int) -> Fraction:
            # {t} = t - [t]: crossing counters enter the difference negatively
            total = M * drift
            for spec, times, sign in seq_data:
                if spec.weight != "sign" or spec.h_index is None:
                    continue
                hval = dyadic(model.h_values[spec.h_index])
                total -= hval * sign * bisect_left(times, M)
            return total

        dM1, dM2 = delta_at(M1), delta_at(M2)
    else:
        top = max(M1, M2) + L + 1
        series = kernels.diff_series(
            p[0], p[1], dx, dy, top,
            model.rotation.alpha_float, model.rotation.beta_float,
            *kernels.roof_args(model.roof),
        )
        dM1, dM2 = Fraction(series[M1]), Fraction(series[M2])

    floor = Fraction(model.h_floor) / 4
    if abs(dM1) > floor:
        M, pval = M1, dM1
    elif abs(dM2) > floor:
        M, pval = M2, dM2
    else:
        raise CheckFailure(
            "both window anchors fail the independence floor h/4; "
            "the model assumptions (independence, gap constants) look broken"
        )

    # the selected window must be free of merged crossings (steps M..M+L-2)
    i0 = bisect_left(ks, M)
    if i0 < len(ks) and ks[i0] <= M + L - 2:
        raise CheckFailure("selected window is contaminated by a crossing; selection bug")

    # drift structure check at merged crossing checkpoints up to M
    drift_ok = True
    if exact:
        for k in ks[1 : min(len(ks), 3 * s + 2)]:
            if k > M:
                break
            lhs = abs(k * drift)
            if not lhs <= Fraction(model.C0) * k * Fraction(d) + 2 * Fraction(model.B):
                drift_ok = False
                break

    # good-step count over [M, M + L)
    if exact:
        good = 0
        eps_q = Fraction(eps_eff)
        for j in range(L):
            # window is crossing-free, so Delta_(M+j) = p + j * drift exactly
            if abs(j * drift) < eps_q:
                good += 1
    else:
        window = series[M : M + L]
        good = int(np.sum(np.abs(window - float(pval)) < eps_eff))

    return RatnerWitness(
        M=M,
        L=L,
        p=float(pval),
        good_fraction=good / L,
        eps=eps_eff,
        eps_requested=eps,
        d=d,
        kappa=model.kappa(eps_eff),
        p0=model.p0,
        p1=model.p1,
        delta_satisfied=d < model.delta(eps_eff, N),
        drift_checked=drift_ok,
    )


def witness_empirical(
    f: RoofFunction,
    rot: RotationVector2,
    p: tuple,
    pp: tuple,
    eps: float,
    M_range: tuple,
    L_min: int,
) -> RatnerWitness:
    """Brute-force window search: best (M, L_min) window by shadowing score.

    The shift p of a window is the median of the cocycle differences over
    the window, which ignores the few crossing-contaminated steps the
    constructive route excludes by design.
    """
    dx, dy = _lift_offsets(p, pp)
    d = max(abs(dx), abs(dy))
    lo, hi = int(M_range[0]), int(M_range[1])
    if not (1 <= lo < hi):
        raise ValidationError("need 1 <= M_lo < M_hi")
    series = kernels.diff_series(
        p[0], p[1], dx, dy, hi + L_min + 1,
        rot.alpha_float, rot.beta_float, *kernels.roof_args(f),
    )
    best = None
    step = max(1, (hi - lo) // 4096)
    for M in range(lo, hi, step):
        window = series[M : M + L_min]
        pv = float(np.median(window))
        score = float(np.mean(np.abs(window - pv) < eps))
        if best is None or score > best[0]:
            best = (score, M, pv)
    score, M, pv = best
    return RatnerWitness(
        M=M,
        L=L_min,
        p=pv,
        good_fraction=score,
        eps=eps,
        eps_requested=eps,
        d=d,
        kappa=0.0,
        p0=0.0,
        p1=math.inf,
        delta_satisfied=False,
        drift_checked=False,
    )
