"""Roof functions over the two-torus and their Birkhoff cocycles.

A roof is

    f(x, y) = c0 + sum_j d1_j {x - D1_j} + sum_j d2_j {y - D2_j}
            + g(x, y) + gamma * h(x, y),

with g a finite trigonometric polynomial and h the nil-rotation term

    h(x, y) = alpha {y} - ({x} + alpha) [{y} + beta].

Evaluation is right-continuous in each coordinate.  Discontinuities live on
the vertical lines x = D1_j (plus x = 0 when gamma != 0) and the horizontal
lines y = D2_j (plus y = 0 and y = 1 - beta when gamma != 0).

Two Birkhoff engines are provided.  The certified walk advances fixed-point
torus coordinates step by step, refuses to step across a discontinuity line
closer than the accumulated coordinate error, and reports the rounding
budget.  For roofs without smooth or nil parts an exact route evaluates the
sum through floor sums over a rational enclosure of the rotation number,
which costs O(log m) big-integer steps and is what makes common-denominator
scans at astronomically large times possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .cfrac import dyadic, enclosure, floor_sum
from .errors import CheckFailure, PrecisionError, ValidationError
from .fixedpoint import RealRep
from .rotations import RotationVector2

__all__ = [
    "RoofFunction",
    "BirkhoffValue",
    "DerivativeBounds",
    "IntegralResult",
    "VonNeumannReport",
    "integral",
    "von_neumann_integrals",
    "birkhoff",
    "birkhoff_exact_interval",
    "birkhoff_dx",
    "birkhoff_dy",
    "birkhoff_dxx",
    "birkhoff_dyy",
    "derivative_bounds",
    "centered",
    "variation_slice_x",
    "variation_slice_y",
]

TWO_PI = 2.0 * math.pi
TRIG_STEP_BUDGET = 2.0**-48  # per trig term per step, generous cover for libm


def _frac(t: float) -> float:
    return t - math.floor(t)


class RoofFunction:
    """Immutable roof descriptor with a certified positive infimum.

    ``saw_x`` and ``saw_y`` are sequences of (jump, breakpoint) pairs;
    ``trig`` holds (kx, ky, c_cos, c_sin) rows for
    c_cos cos(2 pi (kx x + ky y)) + c_sin sin(...); ``gamma`` scales the
    nil-rotation term and requires ``rotation``.
    """

    def __init__(
        self,
        c0: float = 0.0,
        saw_x=(),
        saw_y=(),
        trig=(),
        gamma: float = 0.0,
        rotation: Optional[RotationVector2] = None,
        check_positive: bool = True,
    ):
        self.c0 = float(c0)
        self.saw_x = tuple((float(d), float(delta)) for d, delta in saw_x)
        self.saw_y = tuple((float(d), float(delta)) for d, delta in saw_y)
        self.trig = tuple((int(kx), int(ky), float(cc), float(cs)) for kx, ky, cc, cs in trig)
        self.gamma = float(gamma)
        self.rotation = rotation
        if self.gamma != 0.0 and rotation is None:
            raise ValidationError("the nil term needs the rotation (it depends on alpha, beta)")
        for _, delta in self.saw_x + self.saw_y:
            if not (0.0 <= delta < 1.0):
                raise ValidationError("breakpoints must lie in [0, 1)")
        self._check_positive = check_positive
        self.inf_bound, self.sup_bound = self._certify_range()
        if check_positive and not self.inf_bound > 0.0:
            raise ValidationError(
                f"roof is not certified positive (certified lower bound {self.inf_bound:.3g})"
            )

    # -- structure ------------------------------------------------------

    @property
    def saw_slope_x(self) -> float:
        return sum(d for d, _ in self.saw_x)

    @property
    def saw_slope_y(self) -> float:
        return sum(d for d, _ in self.saw_y)

    @property
    def is_sawtooth_only(self) -> bool:
        return not self.trig and self.gamma == 0.0

    def x_breakpoints(self) -> tuple[float, ...]:
        pts = {delta for d, delta in self.saw_x if d != 0.0}
        if self.gamma != 0.0:
            pts.add(0.0)
        return tuple(sorted(pts))

    def y_breakpoints(self) -> tuple[float, ...]:
        pts = {delta for d, delta in self.saw_y if d != 0.0}
        if self.gamma != 0.0:
            pts.add(0.0)
            pts.add(_frac(1.0 - self.rotation.beta_float))
        return tuple(sorted(pts))

    # -- evaluation -------------------------------------------------------

    def eval(self, x: float, y: float) -> float:
        x, y = _frac(x), _frac(y)
        v = self.c0
        for d, delta in self.saw_x:
            v += d * _frac(x - delta)
        for d, delta in self.saw_y:
            v += d * _frac(y - delta)
        for kx, ky, cc, cs in self.trig:
            ph = TWO_PI * (kx * x + ky * y)
            v += cc * math.cos(ph) + cs * math.sin(ph)
        if self.gamma != 0.0:
            al, be = self.rotation.alpha_float, self.rotation.beta_float
            v += self.gamma * (al * y - (x + al) * math.floor(y + be))
        return v

    __call__ = eval

    def eval_many(self, xs, ys):
        xs = np.mod(np.asarray(xs, dtype=float), 1.0)
        ys = np.mod(np.asarray(ys, dtype=float), 1.0)
        v = np.full(np.broadcast(xs, ys).shape, self.c0)
        for d, delta in self.saw_x:
            v += d * np.mod(xs - delta, 1.0)
        for d, delta in self.saw_y:
            v += d * np.mod(ys - delta, 1.0)
        for kx, ky, cc, cs in self.trig:
            ph = TWO_PI * (kx * xs + ky * ys)
            v += cc * np.cos(ph) + cs * np.sin(ph)
        if self.gamma != 0.0:
            al, be = self.rotation.alpha_float, self.rotation.beta_float
            v += self.gamma * (al * ys - (xs + al) * np.floor(ys + be))
        return v

    # piecewise first and second partials on smooth pieces

    def fx(self, x: float, y: float) -> float:
        v = self.saw_slope_x
        for kx, ky, cc, cs in self.trig:
            ph = TWO_PI * (kx * _frac(x) + ky * _frac(y))
            v += TWO_PI * kx * (-cc * math.sin(ph) + cs * math.cos(ph))
        if self.gamma != 0.0:
            v += self.gamma * (-math.floor(_frac(y) + self.rotation.beta_float))
        return v

    def fy(self, x: float, y: float) -> float:
        v = self.saw_slope_y
        for kx, ky, cc, cs in self.trig:
            ph = TWO_PI * (kx * _frac(x) + ky * _frac(y))
            v += TWO_PI * ky * (-cc * math.sin(ph) + cs * math.cos(ph))
        if self.gamma != 0.0:
            v += self.gamma * self.rotation.alpha_float
        return v

    def fxx(self, x: float, y: float) -> float:
        v = 0.0
        for kx, ky, cc, cs in self.trig:
            ph = TWO_PI * (kx * _frac(x) + ky * _frac(y))
            v -= (TWO_PI * kx) ** 2 * (cc * math.cos(ph) + cs * math.sin(ph))
        return v

    def fyy(self, x: float, y: float) -> float:
        v = 0.0
        for kx, ky, cc, cs in self.trig:
            ph = TWO_PI * (kx * _frac(x) + ky * _frac(y))
            v -= (TWO_PI * ky) ** 2 * (cc * math.cos(ph) + cs * math.sin(ph))
        return v

    # closed-form sups over smooth pieces (triangle-inequality bounds)

    def sup_abs_fxx(self) -> float:
        return sum((TWO_PI * kx) ** 2 * math.hypot(cc, cs) for kx, _, cc, cs in self.trig)

    def sup_abs_fyy(self) -> float:
        return sum((TWO_PI * ky) ** 2 * math.hypot(cc, cs) for _, ky, cc, cs in self.trig)

    def sup_abs_fxy(self) -> float:
        return sum(
            abs(TWO_PI * kx) * abs(TWO_PI * ky) * math.hypot(cc, cs) for kx, ky, cc, cs in self.trig
        )

    def slope_sup_x(self) -> float:
        v = abs(self.saw_slope_x) + abs(self.gamma)
        v += sum(TWO_PI * abs(kx) * math.hypot(cc, cs) for kx, _, cc, cs in self.trig)
        return v

    def slope_sup_y(self) -> float:
        v = abs(self.saw_slope_y) + abs(self.gamma)
        v += sum(TWO_PI * abs(ky) * math.hypot(cc, cs) for _, ky, cc, cs in self.trig)
        return v

    # -- certification -----------------------------------------------------

    def _certify_range(self) -> tuple[float, float]:
        """Grid plus Lipschitz-margin bounds for inf f and sup f."""
        lip = math.hypot(self.slope_sup_x(), self.slope_sup_y())
        xb = list(self.x_breakpoints()) or [0.0]
        yb = list(self.y_breakpoints()) or [0.0]
        npts = 24
        for _ in range(6):
            xsebs = _piece_grid(xb, npts)
            ysebs = _piece_grid(yb, npts)
            xs, ys = np.meshgrid(xsebs[0], ysebs[0], indexing="ij")
            vals = self.eval_many(xs.ravel(), ys.ravel())
            mesh = math.hypot(xsebs[1], ysebs[1])
            margin = lip * mesh * math.sqrt(2.0)
            gmin, gmax = float(vals.min()), float(vals.max())
            if margin <= 0.0 or margin < abs(gmin) / 2.0 or not self._check_positive:
                return gmin - margin, gmax + margin
            npts *= 2
        return gmin - margin, gmax + margin

    # -- serialization ---------------------------------------------------

    def to_descriptor(self):
        return {
            "c0": self.c0,
            "saw_x": [list(t) for t in self.saw_x],
            "saw_y": [list(t) for t in self.saw_y],
            "trig": [list(t) for t in self.trig],
            "gamma": self.gamma,
            "rotation": self.rotation.to_descriptor() if self.rotation else None,
        }

    @classmethod
    def from_descriptor(cls, obj, rotation: Optional[RotationVector2] = None) -> "RoofFunction":
        extra = set(obj) - {"c0", "saw_x", "saw_y", "trig", "gamma", "rotation"}
        if extra:
            raise ValidationError(f"unknown fields in roof descriptor: {sorted(extra)}")
        rot = rotation
        if rot is None and obj.get("rotation"):
            rot = RotationVector2.from_descriptor(obj["rotation"])
        return cls(
            c0=obj.get("c0", 0.0),
            saw_x=obj.get("saw_x", ()),
            saw_y=obj.get("saw_y", ()),
            trig=obj.get("trig", ()),
            gamma=obj.get("gamma", 0.0),
            rotation=rot,
        )

    def kernel_params(self):
        """Flat float arrays consumed by the batch kernels."""
        sx = np.array(self.saw_x, dtype=float).reshape(-1, 2)
        sy = np.array(self.saw_y, dtype=float).reshape(-1, 2)
        tr = np.array(self.trig, dtype=float).reshape(-1, 4)
        al = self.rotation.alpha_float if self.rotation else 0.0
        be = self.rotation.beta_float if self.rotation else 0.0
        return {
            "c0": self.c0,
            "d1": np.ascontiguousarray(sx[:, 0]),
            "delta1": np.ascontiguousarray(sx[:, 1]),
            "d2": np.ascontiguousarray(sy[:, 0]),
            "delta2": np.ascontiguousarray(sy[:, 1]),
            "trig": np.ascontiguousarray(tr),
            "gamma": self.gamma,
            "h_alpha": al,
            "h_beta": be,
        }


def _piece_grid(breaks, npts):
    """Grid covering [0,1) piece by piece, right-continuous at breakpoints."""
    pts = []
    b = sorted(breaks)
    worst = 0.0
    for i, lo in enumerate(b):
        hi = b[i + 1] if i + 1 < len(b) else b[0] + 1.0
        if hi <= lo:
            hi = lo + 1.0
        k = max(2, int(math.ceil((hi - lo) * npts)))
        step = (hi - lo) / k
        worst = max(worst, step)
        pts.extend(lo + j * step for j in range(k))
    return np.mod(np.array(pts), 1.0), worst


# ---------------------------------------------------------------------------
# integrals


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error_bound: float
    quadrature_used: bool


def integral(f: RoofFunction, tol: float = 1e-10) -> IntegralResult:
    """Mean of f over the torus.

    The constant, sawtooth and trigonometric parts have closed forms; the
    nil term is integrated by a breakpoint-aligned tensor Gauss rule at two
    refinements and the disagreement is reported as the error bound.
    """
    v = f.c0 + 0.5 * (f.saw_slope_x + f.saw_slope_y)
    for kx, ky, cc, cs in f.trig:
        if kx == 0 and ky == 0:
            v += cc
    if f.gamma == 0.0:
        return IntegralResult(v, 0.0, False)
    al, be = f.rotation.alpha_float, f.rotation.beta_float
    ih1 = _quad_h(al, be, 24)
    ih2 = _quad_h(al, be, 48)
    err = abs(ih2 - ih1) + 1e-14
    if err > tol:
        raise PrecisionError(f"nil-term quadrature error {err:.2e} exceeds tolerance {tol:.2e}")
    return IntegralResult(v + f.gamma * ih2, abs(f.gamma) * err, True)


def _quad_h(al: float, be: float, n: int) -> float:
    """Tensor Gauss-Legendre of h over [0,1)^2 split at the y-line 1 - beta."""
    nodes, weights = np.polynomial.legendre.leggauss(4)
    total = 0.0
    ysplits = [0.0, _frac(1.0 - be), 1.0]
    ysplits = sorted(set(ysplits))
    for yi in range(len(ysplits) - 1):
        ylo, yhi = ysplits[yi], ysplits[yi + 1]
        for j in range(n):
            a2 = ylo + (yhi - ylo) * j / n
            b2 = ylo + (yhi - ylo) * (j + 1) / n
            ys = 0.5 * (a2 + b2) + 0.5 * (b2 - a2) * nodes
            wy = 0.5 * (b2 - a2) * weights
            # inner x integral of h is linear in x; do it in closed form per y
            # int_0^1 (al*y - (x+al)*floor(y+be)) dx = al*y - (0.5+al)*floor(y+be)
            fl = np.floor(ys + be)
            total += np.sum(wy * (al * ys - (0.5 + al) * fl))
    return float(total)


@dataclass(frozen=True)
class VonNeumannReport:
    int_fx: float
    int_fy: float
    weak: bool
    strong: bool


def von_neumann_integrals(f: RoofFunction) -> VonNeumannReport:
    """Mean partial derivatives: (sum d1_j - beta gamma, sum d2_j + alpha gamma)."""
    bx = f.rotation.beta_float if f.rotation else 0.0
    ax = f.rotation.alpha_float if f.rotation else 0.0
    ix = f.saw_slope_x - bx * f.gamma
    iy = f.saw_slope_y + ax * f.gamma
    return VonNeumannReport(ix, iy, weak=(ix != 0.0 or iy != 0.0), strong=(ix != 0.0 and iy != 0.0))


# ---------------------------------------------------------------------------
# certified Birkhoff sums


@dataclass(frozen=True)
class BirkhoffValue:
    n: int
    value: float
    rounding_bound: float


class _FixedEval:
    """Fixed-point per-step roof evaluator with discontinuity certification."""

    def __init__(self, f: RoofFunction, rot: RotationVector2, bits: Optional[int] = None):
        self.f = f
        self.rot = rot
        self.bits = bits or rot.bits
        P = self.bits
        self.one = 1 << P
        a = rot.alpha.rescale(P)
        b = rot.beta.rescale(P)
        self.A, self.Aerr = a.mantissa % self.one, a.err
        self.B, self.Berr = b.mantissa % self.one, b.err
        scale = lambda v: RealRep.from_float(v, P).mantissa
        self.c0 = scale(f.c0)
        self.sawx = [(scale(d), scale(delta) % self.one) for d, delta in f.saw_x]
        self.sawy = [(scale(d), scale(delta) % self.one) for d, delta in f.saw_y]
        self.gam = scale(f.gamma)
        self.has_gamma = f.gamma != 0.0
        self.trig = f.trig
        self.xbreaks = [scale(t) % self.one for t in f.x_breakpoints()]
        self.ybreaks = [scale(t) % self.one for t in f.y_breakpoints()]
        # per-step fixed-point rounding in ulps (one per product)
        self.step_ulps = len(self.sawx) + len(self.sawy) + (4 if self.has_gamma else 0) + 2
        self.slope_ulps = int(math.ceil(f.slope_sup_x() + f.slope_sup_y())) + 1

    def to_fixed(self, v) -> int:
        return self.to_fixed2(v)[0]

    def to_fixed2(self, v) -> tuple[int, int]:
        """Fixed-point mantissa in [0, one) and its conversion error in ulps."""
        r = RealRep.from_fraction(v, self.bits) if isinstance(v, Fraction) else RealRep.from_float(v, self.bits)
        return r.mantissa % self.one, r.err

    def check_breaks(self, X: int, Y: int, cerr: int, k: int):
        one = self.one
        for br in self.xbreaks:
            d = (X - br) % one
            if min(d, one - d) <= cerr:
                raise PrecisionError("step lands on a vertical discontinuity line", where=k)
        for br in self.ybreaks:
            d = (Y - br) % one
            if min(d, one - d) <= cerr:
                raise PrecisionError("step lands on a horizontal discontinuity line", where=k)

    def value_fp(self, X: int, Y: int) -> tuple[int, float, int]:
        """Fixed-point value, float trig part, and rounding in ulps.

        The ulp count is zero exactly when every fixed-point product was
        exact, which certifies exact-boundary decisions downstream.
        """
        one, P = self.one, self.bits
        half = one >> 1
        mask = one - 1
        v = self.c0
        inexact = 0
        for d, delta in self.sawx:
            t = (X - delta) % one
            prod = d * t
            if prod & mask:
                inexact += 1
            v += (prod + half) >> P
        for d, delta in self.sawy:
            t = (Y - delta) % one
            prod = d * t
            if prod & mask:
                inexact += 1
            v += (prod + half) >> P
        if self.has_gamma:
            fl = (Y + self.B) >> P  # 0 or 1 for Y in [0,one)
            prod = self.A * Y
            if prod & mask:
                inexact += 1
            h = ((prod + half) >> P) - (X + self.A) * fl
            prod = self.gam * h
            if prod & mask:
                inexact += 1
            v += (prod + half) >> P
        tv = 0.0
        if self.trig:
            xf = math.ldexp(X, -P) if X.bit_length() <= 53 else X / one
            yf = math.ldexp(Y, -P) if Y.bit_length() <= 53 else Y / one
            for kx, ky, cc, cs in self.trig:
                ph = TWO_PI * (kx * xf + ky * yf)
                tv += cc * math.cos(ph) + cs * math.sin(ph)
        return v, tv, inexact

    def walk(self, x: float, y: float, m: int) -> BirkhoffValue:
        """Exact-stepping Birkhoff sum with the three-case convention."""
        one = self.one
        X, in_x = self.to_fixed2(x)
        Y, in_y = self.to_fixed2(y)
        in_err = max(in_x, in_y)
        total_fp = 0
        total_tr = 0.0
        comp = 0.0
        err_ulps = 0
        if m >= 0:
            rng = range(m)
            forward = True
        else:
            rng = range(-m)
            forward = False
            X = (X - self.A * (-m)) % one
            Y = (Y - self.B * (-m)) % one
        for k in rng:
            step = k if forward else m + k
            cerr = abs(step) * max(self.Aerr, self.Berr) + in_err
            self.check_breaks(X, Y, cerr + self.step_ulps, step)
            v, tv, inexact = self.value_fp(X, Y)
            total_fp += v
            t = total_tr + (tv - comp)
            comp = (t - total_tr) - (tv - comp)
            total_tr = t
            err_ulps += inexact + cerr * self.slope_ulps
            X = (X + self.A) % one
            Y = (Y + self.B) % one
        value = math.ldexp(float(total_fp), -self.bits) if abs(total_fp).bit_length() <= 53 \
            else float(Fraction(total_fp, one))
        value += total_tr
        sign = 1.0 if m >= 0 else -1.0
        bound = math.ldexp(float(err_ulps + 4), -self.bits) + abs(m) * len(self.trig) * TRIG_STEP_BUDGET
        return BirkhoffValue(m, sign * value, bound)


def birkhoff(
    f: RoofFunction,
    rot: RotationVector2,
    x: float,
    y: float,
    m: int,
    method: str = "auto",
    bits: Optional[int] = None,
) -> BirkhoffValue:
    """Birkhoff sum f^(m)(x, y) with a reported rounding bound.

    ``method`` is "walk" (certified fixed-point stepping), "floorsum"
    (exact big-integer route, sawtooth-plus-constant roofs only) or "auto".
    """
    if m == 0:
        return BirkhoffValue(0, 0.0, 0.0)
    if method == "auto":
        method = "floorsum" if (f.is_sawtooth_only and abs(m) > 512) else "walk"
    if method == "walk":
        return _FixedEval(f, rot, bits).walk(x, y, m)
    if method != "floorsum":
        raise ValidationError(f"unknown birkhoff method {method!r}")
    lo, hi = birkhoff_exact_interval(f, rot, x, y, m)
    mid = (lo + hi) / 2
    return BirkhoffValue(m, float(mid), float(hi - lo) / 2 + abs(float(mid)) * 2**-50)


def _u_floor_part(z: Fraction, a: Fraction, m: int) -> int:
    """sum_{k=0}^{m-1} floor(z + k a) for exact rationals, any sign of a."""
    den = z.denominator * a.denominator
    b = z.numerator * a.denominator
    aa = a.numerator * z.denominator
    return floor_sum(m, den, aa, b)


def _sawtooth_u_interval(z: Fraction, alo: Fraction, ahi: Fraction, m: int):
    """Interval for sum_{k<m} {z + k alpha} with alpha in [alo, ahi], m != 0."""
    if m > 0:
        rng_lin = Fraction(m * (m - 1), 2)
        flo = _u_floor_part(z, alo, m)
        fhi = _u_floor_part(z, ahi, m)
        if flo != fhi:
            return None
        base = m * z - flo
        return (base + alo * rng_lin, base + ahi * rng_lin)
    # m < 0: -(sum over k = m..-1) = -(sum_{j=1..|m|} {z - j alpha})
    mm = -m
    rng_lin = Fraction(mm * (mm + 1), 2)
    flo = _u_floor_part(z - alo, -alo, mm)
    fhi = _u_floor_part(z - ahi, -ahi, mm)
    if flo != fhi:
        return None
    # sum_{j=1..mm} (z - j a) = mm z - a mm(mm+1)/2 ; floor part subtracted
    lo = -(mm * z - ahi * rng_lin - flo)
    hi = -(mm * z - alo * rng_lin - flo)
    return (lo, hi)


def birkhoff_exact_interval(
    f: RoofFunction, rot: RotationVector2, x, y, m: int
) -> tuple[Fraction, Fraction]:
    """Exact rational interval for f^(m)(x, y), sawtooth-plus-constant roofs.

    Uses floor sums over a convergent enclosure of each rotation coordinate;
    the enclosure is deepened until the floor sums at both endpoints agree,
    so the returned interval is exact up to the linear-term width.
    """
    if not f.is_sawtooth_only:
        raise ValidationError("the exact route needs a sawtooth-plus-constant roof")
    if m == 0:
        return (Fraction(0), Fraction(0))
    xq = x if isinstance(x, Fraction) else dyadic(float(x))
    yq = y if isinstance(y, Fraction) else dyadic(float(y))
    lo_total = Fraction(m) * dyadic(f.c0)
    hi_total = lo_total
    for coord, pq, terms in ((xq, rot.alpha_pq, f.saw_x), (yq, rot.beta_pq, f.saw_y)):
        if not terms:
            continue
        depth = 8
        tight = (abs(m) * abs(m)) << 44
        while True:
            alo, ahi = enclosure(pq, depth)
            if ahi.denominator * alo.denominator <= tight:
                depth += max(2, depth // 2)
                continue
            parts = [
                _sawtooth_u_interval(coord - dyadic(delta), alo, ahi, m) for _, delta in terms
            ]
            if all(p is not None for p in parts):
                break
            depth += max(2, depth // 2)
            if depth > 100000:
                raise PrecisionError("floor sums failed to stabilize over the enclosure")
        for (d, _), (ulo, uhi) in zip(terms, parts):
            dq = dyadic(d)
            if dq >= 0:
                lo_total += dq * ulo
                hi_total += dq * uhi
            else:
                lo_total += dq * uhi
                hi_total += dq * ulo
    return lo_total, hi_total


# ---------------------------------------------------------------------------
# derivative cocycles


def _check_x_line(f: RoofFunction, rot: RotationVector2, x: float, m: int):
    ev = _FixedEval(f, rot)
    one = ev.one
    X = ev.to_fixed(x)
    step = ev.A if m >= 0 else -ev.A
    for k in range(abs(m)):
        cerr = (k + 1) * max(ev.Aerr, 1) + ev.step_ulps
        for br in ev.xbreaks:
            d = (X - br) % one
            if min(d, one - d) <= cerr:
                raise PrecisionError("x-derivative line hits a discontinuity abscissa", where=k)
        X = (X + step) % one


def _trig_partial_sum(f, rot, x, y, m, which: str) -> float:
    if not f.trig:
        return 0.0
    ks = np.arange(abs(m))
    if m < 0:
        ks = -ks - 1
    xs = np.mod(x + ks * rot.alpha_float, 1.0)
    ys = np.mod(y + ks * rot.beta_float, 1.0)
    total = 0.0
    for kx, ky, cc, cs in f.trig:
        ph = TWO_PI * (kx * xs + ky * ys)
        if which == "x":
            total += float(np.sum(TWO_PI * kx * (-cc * np.sin(ph) + cs * np.cos(ph))))
        elif which == "y":
            total += float(np.sum(TWO_PI * ky * (-cc * np.sin(ph) + cs * np.cos(ph))))
        elif which == "xx":
            total += float(np.sum(-((TWO_PI * kx) ** 2) * (cc * np.cos(ph) + cs * np.sin(ph))))
        else:
            total += float(np.sum(-((TWO_PI * ky) ** 2) * (cc * np.cos(ph) + cs * np.sin(ph))))
    return total if m > 0 else -total


def _gamma_x_crossings(f, rot, y: float, m: int) -> int:
    """sum_{k<m} [{y + k beta} + beta]  =  floor(y + m beta) - floor(y), exact."""
    yq = dyadic(float(y))
    depth = 8
    tight = (abs(m) * abs(m)) << 40
    while True:
        blo, bhi = enclosure(rot.beta_pq, depth)
        if bhi.denominator * blo.denominator <= tight:
            depth += max(2, depth // 2)
            continue
        flo = (yq + m * blo).numerator // (yq + m * blo).denominator
        fhi = (yq + m * bhi).numerator // (yq + m * bhi).denominator
        if flo == fhi:
            return flo - (yq.numerator // yq.denominator)
        depth += max(2, depth // 2)


def birkhoff_dx(f: RoofFunction, rot: RotationVector2, x: float, y: float, m: int) -> float:
    """(f_x)^(m)(x, y); the x-line through the orbit must avoid jump lines."""
    _check_x_line(f, rot, x, m)
    v = m * f.saw_slope_x + _trig_partial_sum(f, rot, x, y, m, "x")
    if f.gamma != 0.0:
        v -= f.gamma * _gamma_x_crossings(f, rot, y, m)
    return v


def birkhoff_dy(f: RoofFunction, rot: RotationVector2, x: float, y: float, m: int) -> float:
    v = m * f.saw_slope_y + _trig_partial_sum(f, rot, x, y, m, "y")
    if f.gamma != 0.0:
        v += m * f.gamma * rot.alpha_float
    return v


def birkhoff_dxx(f: RoofFunction, rot: RotationVector2, x: float, y: float, m: int) -> float:
    return _trig_partial_sum(f, rot, x, y, m, "xx")


def birkhoff_dyy(f: RoofFunction, rot: RotationVector2, x: float, y: float, m: int) -> float:
    return _trig_partial_sum(f, rot, x, y, m, "yy")


# ---------------------------------------------------------------------------
# empirical derivative bounds


@dataclass(frozen=True)
class DerivativeBounds:
    theta: float
    Theta: float
    m0: int
    c: float
    C: float
    N_jump: int
    M_jump: int
    theta_x: float = 0.0
    theta_y: float = 0.0
    slope_sup_x: float = 0.0
    slope_sup_y: float = 0.0
    margin: float = 0.0
    probes: tuple = field(default=(), repr=False)


def derivative_bounds(
    f: RoofFunction, rot: RotationVector2, m_probe: int = 1000, grid: int = 16
) -> DerivativeBounds:
    """Empirical stretch constants for the derivative cocycles.

    theta is the grid-and-probe minimum of |(f_x)^(m)| / m (and the y
    analogue) minus a Lipschitz safety margin; Theta is the closed-form sup
    of the pure second partials; m0 is the least probed m at which the
    linear lower bound holds grid-wide.
    """
    vn = von_neumann_integrals(f)
    if not vn.weak:
        raise CheckFailure("mean of f_x and of f_y both vanish: no direction to probe")
    ms = sorted({1, m_probe, (5 * m_probe) // 4, (3 * m_probe) // 2, (7 * m_probe) // 4, 2 * m_probe})
    pts = (np.arange(grid) + 0.5) / grid
    xs, ys = np.meshgrid(pts, pts, indexing="ij")
    xs, ys = xs.ravel(), ys.ravel()
    # nearest grid point is within mesh/2 per coordinate on smooth pieces
    mesh = 1.0 / grid
    margin_x = 0.5 * mesh * (f.sup_abs_fxx() + f.sup_abs_fxy())
    margin_y = 0.5 * mesh * (f.sup_abs_fyy() + f.sup_abs_fxy())

    def probe_dir(which: str, margin: float):
        mins = {}
        for m in ms:
            if which == "x":
                base = m * f.saw_slope_x
                tr = np.array(
                    [_trig_partial_sum(f, rot, float(a), float(b), m, "x") for a, b in zip(xs, ys)]
                ) if f.trig else 0.0
                gam = (
                    -f.gamma
                    * np.array([_gamma_x_crossings(f, rot, float(b), m) for b in ys])
                    if f.gamma != 0.0
                    else 0.0
                )
                vals = base + tr + gam
            else:
                base = m * f.saw_slope_y + m * (f.gamma * rot.alpha_float if f.gamma else 0.0)
                tr = np.array(
                    [_trig_partial_sum(f, rot, float(a), float(b), m, "y") for a, b in zip(xs, ys)]
                ) if f.trig else 0.0
                vals = base + tr
            mins[m] = float(np.min(np.abs(vals))) / m
        return mins

    mins_x = probe_dir("x", margin_x) if vn.int_fx != 0.0 else None
    mins_y = probe_dir("y", margin_y) if vn.int_fy != 0.0 else None

    # theta reflects the stretch floor over the probe window, not tiny m
    window = [m for m in ms if m >= m_probe]
    theta_x = min(mins_x[m] for m in window) - margin_x if mins_x else 0.0
    theta_y = min(mins_y[m] for m in window) - margin_y if mins_y else 0.0
    candidates = [t for t in (theta_x if mins_x else None, theta_y if mins_y else None) if t is not None]
    theta = min(candidates)
    if theta <= 0.0:
        raise CheckFailure(
            f"certified theta is not positive ({theta:.3g}); increase m_probe or grid"
        )
    m0 = None
    for m in ms:
        ok = True
        if mins_x is not None:
            ok = ok and (mins_x[m] - margin_x) >= theta
        if mins_y is not None:
            ok = ok and (mins_y[m] - margin_y) >= theta
        if ok:
            m0 = m
            break
    probes = tuple(
        (m, mins_x[m] if mins_x else None, mins_y[m] if mins_y else None) for m in ms
    )
    return DerivativeBounds(
        theta=theta,
        Theta=max(f.sup_abs_fxx(), f.sup_abs_fyy()),
        m0=m0 if m0 is not None else ms[-1],
        c=f.inf_bound,
        C=f.sup_bound,
        N_jump=max(1, len(f.x_breakpoints())),
        M_jump=max(1, len(f.y_breakpoints())),
        theta_x=theta_x,
        theta_y=theta_y,
        slope_sup_x=f.slope_sup_x(),
        slope_sup_y=f.slope_sup_y(),
        margin=max(margin_x, margin_y),
        probes=probes,
    )


def centered(f: RoofFunction) -> RoofFunction:
    """f0 = f - mean(f); evaluable but no longer positive."""
    mean = integral(f).value
    return RoofFunction(
        c0=f.c0 - mean,
        saw_x=f.saw_x,
        saw_y=f.saw_y,
        trig=f.trig,
        gamma=f.gamma,
        rotation=f.rotation,
        check_positive=False,
    )


def variation_slice_x(f: RoofFunction, y: float = 0.0) -> float:
    """Total variation bound of x -> f(x, y) over the circle."""
    c = math.floor(_frac(y) + f.rotation.beta_float) if f.gamma != 0.0 else 0
    slope = f.saw_slope_x - f.gamma * c
    smooth = sum(TWO_PI * abs(kx) * math.hypot(cc, cs) for kx, _, cc, cs in f.trig)
    jumps = sum(abs(d) for d, _ in f.saw_x) + abs(f.gamma * c)
    return abs(slope) + smooth + jumps


def variation_slice_y(f: RoofFunction, x: float = 0.0) -> float:
    gpart = 0.0
    if f.gamma != 0.0:
        al = f.rotation.alpha_float
        # y-slice of h: piecewise slope alpha with a unit jump of size ({x}+alpha)
        gpart = abs(f.gamma) * (al + (_frac(x) + al))
    slope = abs(f.saw_slope_y)
    smooth = sum(TWO_PI * abs(ky) * math.hypot(cc, cs) for _, ky, cc, cs in f.trig)
    jumps = sum(abs(d) for d, _ in f.saw_y)
    return slope + smooth + jumps + gpart
