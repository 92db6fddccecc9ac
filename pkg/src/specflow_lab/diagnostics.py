"""Quantitative mixing, rigidity and decay diagnostics.

Everything here is an executable inequality or a seed-deterministic
estimator: oscillatory integrals against their piecewise-smooth bound,
slice-wise decay of exp(2 pi i s f^(n)) against the derivative-stretch
bound, level-set measures against the no-partial-rigidity bound, Monte
Carlo correlation series, Denjoy-Koksma deviation scans along common
denominators, and empirical distributions of centered cocycles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad

from . import kernels
from .cfrac import dyadic, enclosure
from .errors import CheckFailure, PrecisionError, ValidationError
from .roof import (
    DerivativeBounds,
    RoofFunction,
    birkhoff_exact_interval,
    derivative_bounds,
    integral,
    variation_slice_x,
    variation_slice_y,
)
from .rotations import RotationVector2
from .specflow import uniform_sample_arrays
from .streams import uniform_block

__all__ = [
    "Slice1D",
    "ExpSumEstimate",
    "exp_sum",
    "WeakMixingResult",
    "weak_mixing_bound",
    "LevelSetResult",
    "level_set_measure",
    "Box",
    "CorrelationSeries",
    "correlation",
    "RigidityTable",
    "rigidity_scan",
    "Histogram",
    "empirical_distribution",
]

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# oscillatory integrals on the circle


@dataclass(frozen=True)
class Slice1D:
    """A 1D piecewise-C2 phase h(x) = slope x + steps + trig poly on [0, 1).

    ``steps`` are (position, size) with positions in (0, 1); ``trig`` rows
    are (k, c_cos, c_sin).  The derivative lower bound is certifiable as
    |slope| - sum 2 pi k hypot(c_cos, c_sin) since steps do not move h'.
    """

    slope: float
    steps: tuple = ()
    trig: tuple = ()

    def __post_init__(self):
        for pos, _ in self.steps:
            if not (0.0 < pos < 1.0):
                raise ValidationError("step positions must lie strictly inside (0, 1)")

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        v = self.slope * x
        for pos, size in self.steps:
            v = v + size * (x >= pos)
        for k, cc, cs in self.trig:
            v = v + cc * np.cos(TWO_PI * k * x) + cs * np.sin(TWO_PI * k * x)
        return v

    def deriv_min_certified(self) -> float:
        return abs(self.slope) - sum(TWO_PI * k * math.hypot(cc, cs) for k, cc, cs in self.trig)

    def discontinuities(self) -> list[float]:
        pts = [pos for pos, size in self.steps if size != 0.0]
        wrap = self.slope + sum(size for _, size in self.steps)
        if wrap != 0.0:
            pts.append(0.0)
        return sorted(pts)

    def var_deriv(self) -> tuple[float, float]:
        """(total variation of h' summed over pieces, quadrature error)."""
        if not self.trig:
            return 0.0, 0.0

        def dd(x):
            v = 0.0
            for k, cc, cs in self.trig:
                v += -((TWO_PI * k) ** 2) * (cc * math.cos(TWO_PI * k * x) + cs * math.sin(TWO_PI * k * x))
            return abs(v)

        val, err = quad(dd, 0.0, 1.0, limit=200)
        return val, err


@dataclass(frozen=True)
class ExpSumEstimate:
    value: float
    quad_error: float
    lemma_bound: float
    theta: float
    n_discontinuities: int
    var_deriv: float

    @property
    def passes(self) -> bool:
        return self.value - self.quad_error <= self.lemma_bound


def exp_sum(h_slice: Slice1D, theta: float, quad_points: int = 200) -> ExpSumEstimate:
    """|integral of exp(2 pi i h)| against N/(pi theta) + Var h'/(2 pi theta^2).

    ``theta`` must be certified by the slice descriptor: it may not exceed
    the closed-form lower bound for |h'| on smooth pieces.
    """
    cert = h_slice.deriv_min_certified()
    if theta <= 0.0 or theta > cert + 1e-12:
        raise ValidationError(
            f"theta = {theta} is not certified by the descriptor (bound {cert:.6g})"
        )
    disc = h_slice.discontinuities()
    n_disc = len(disc)
    pieces = []
    if disc:
        for i, lo in enumerate(disc):
            hi = disc[i + 1] if i + 1 < len(disc) else disc[0] + 1.0
            pieces.append((lo, hi))
    else:
        pieces.append((0.0, 1.0))
    re = im = 0.0
    err = 0.0
    limit = max(60, quad_points)
    for lo, hi in pieces:
        fr = lambda x: math.cos(TWO_PI * float(h_slice.eval(x % 1.0)))
        fi = lambda x: math.sin(TWO_PI * float(h_slice.eval(x % 1.0)))
        vr, er = quad(fr, lo, hi, limit=limit)
        vi, ei = quad(fi, lo, hi, limit=limit)
        re += vr
        im += vi
        err += er + ei
    var, var_err = h_slice.var_deriv()
    bound = n_disc / (math.pi * theta) + (var + var_err) / (2 * math.pi * theta * theta)
    return ExpSumEstimate(math.hypot(re, im), err, bound, theta, n_disc, var)


# ---------------------------------------------------------------------------
# slice-wise decay of the twisted Birkhoff integral


@dataclass(frozen=True)
class WeakMixingResult:
    numeric: float
    quad_error: float
    bound: float
    theta: float
    n_jump: int
    fxx_sup: float
    n: int
    s: float
    direction: str

    @property
    def passes(self) -> bool:
        return self.numeric - self.quad_error <= self.bound


def _pw_linear_phase_integral(values, slopes, widths, s):
    """Sum of closed-form integrals of exp(2 pi i s (v + sigma (x - x0)))."""
    a = TWO_PI * s * slopes
    phase = np.exp(2j * math.pi * s * values)
    small = np.abs(a) < 1e-14
    with np.errstate(divide="ignore", invalid="ignore"):
        seg = (np.exp(1j * a * widths) - 1.0) / (1j * a)
    seg = np.where(small, widths, seg)
    return complex(np.sum(phase * seg))


def _x_slice_breaks(f: RoofFunction, rot: RotationVector2, n: int) -> np.ndarray:
    al = rot.alpha_float
    brs = []
    for delta in f.x_breakpoints():
        brs.append(np.mod(delta - np.arange(n) * al, 1.0))
    return np.unique(np.concatenate(brs)) if brs else np.array([0.0])


def _y_slice_breaks(f: RoofFunction, rot: RotationVector2, n: int) -> np.ndarray:
    be = rot.beta_float
    brs = []
    for delta in f.y_breakpoints():
        brs.append(np.mod(delta - np.arange(n) * be, 1.0))
    return np.unique(np.concatenate(brs)) if brs else np.array([0.0])


def _gamma_crossings_float(f, rot, ys, n):
    # sum_k [{y + k beta} + beta] = floor(y + n beta) - floor(y) for y in [0,1)
    return np.floor(ys + n * rot.beta_float)


def weak_mixing_bound(
    f: RoofFunction,
    rot: RotationVector2,
    s: float,
    n: int,
    quad_order: int = 8,
    db: Optional[DerivativeBounds] = None,
) -> WeakMixingResult:
    """Numeric |double integral of exp(2 pi i s f^(n))| and its decay bound.

    The inner x integral is evaluated in closed form on the slices where
    f^(n)(., y) is piecewise linear (roofs without a smooth part), and the
    outer y integral by breakpoint-aligned composite Gauss with one
    refinement for the error estimate.  The bound is

        N / (pi |s| theta) + sup|f_xx| / (2 pi |s| theta^2 n)

    with theta the certified stretch constant in the probed direction.
    """
    if s == 0.0:
        raise ValidationError("s must be nonzero")
    if f.trig:
        raise ValidationError("the closed-form slice route needs a roof without a smooth part")
    if db is None:
        db = derivative_bounds(f, rot, m_probe=max(2, n // 2), grid=12)
    if n < db.m0:
        raise ValidationError(f"n = {n} is below the certified onset m0 = {db.m0}")
    vn_x_nonzero = db.theta_x > 0.0
    direction = "x" if vn_x_nonzero else "y"
    theta = db.theta_x if direction == "x" else db.theta_y
    if theta <= 0.0:
        raise CheckFailure("no certified stretch direction")

    if direction == "y":
        f = _transpose_roof(f)
        rot = _transpose_rotation(rot)

    al, be = rot.alpha_float, rot.beta_float
    xbr = _x_slice_breaks(f, rot, n)
    widths = np.diff(np.concatenate([xbr, [xbr[0] + 1.0]]))
    mids = np.mod(xbr + widths / 2.0, 1.0)

    ybr = _y_slice_breaks(f, rot, n)
    ywid = np.diff(np.concatenate([ybr, [ybr[0] + 1.0]]))

    def inner_at(ys: np.ndarray) -> np.ndarray:
        gx, gy = np.meshgrid(mids, ys, indexing="ij")
        vals = kernels.birkhoff_batch(
            gx.ravel(), gy.ravel(), n, al, be, *kernels.roof_args(f)
        ).reshape(len(mids), len(ys))
        out = np.empty(len(ys), dtype=complex)
        slopes_base = n * f.saw_slope_x
        if f.gamma != 0.0:
            slopes = slopes_base - f.gamma * _gamma_crossings_float(f, rot, ys, n)
        else:
            slopes = np.full(len(ys), slopes_base)
        for i in range(len(ys)):
            v_start = vals[:, i] - slopes[i] * (widths / 2.0)
            out[i] = _pw_linear_phase_integral(v_start, np.full(len(mids), slopes[i]), widths, s)
        return out

    def outer(order: int) -> complex:
        nodes, wts = np.polynomial.legendre.leggauss(order)
        ys = []
        ws = []
        for lo, w in zip(ybr, ywid):
            ys.append(np.mod(lo + (nodes + 1.0) * w / 2.0, 1.0))
            ws.append(wts * w / 2.0)
        ys = np.concatenate(ys)
        ws = np.concatenate(ws)
        return complex(np.sum(ws * inner_at(ys)))

    v1 = outer(quad_order)
    v2 = outer(2 * quad_order)
    numeric = abs(v2)
    quad_err = abs(v2 - v1) + 1e-13 * n
    n_lines = db.N_jump if direction == "x" else db.M_jump
    bound = n_lines / (math.pi * abs(s) * theta) + db.Theta / (
        2 * math.pi * abs(s) * theta * theta * n
    )
    # for roofs without smooth part f_xx = 0 identically
    return WeakMixingResult(numeric, quad_err, bound, theta, n_lines, db.Theta, n, s, direction)


def _transpose_roof(f: RoofFunction) -> RoofFunction:
    if f.gamma != 0.0:
        raise ValidationError("cannot transpose a roof with the nil term")
    return RoofFunction(
        c0=f.c0,
        saw_x=f.saw_y,
        saw_y=f.saw_x,
        trig=tuple((ky, kx, cc, cs) for kx, ky, cc, cs in f.trig),
        check_positive=False,
    )


def _transpose_rotation(rot: RotationVector2) -> RotationVector2:
    return RotationVector2(rot.beta_pq, rot.alpha_pq, rot.bits)


# ---------------------------------------------------------------------------
# level sets of the whole forward cocycle (no-partial-rigidity bound)


@dataclass(frozen=True)
class LevelSetResult:
    estimate: float
    bound: float
    j_low: int
    j_high: int
    t: float
    eps: float
    grid: int
    refined_cells: int
    flagged: bool

    @property
    def passes(self) -> bool:
        return self.estimate <= self.bound


def level_set_measure(
    f: RoofFunction,
    rot: RotationVector2,
    y: float,
    t: float,
    eps: float,
    x_grid: int = 2048,
    db: Optional[DerivativeBounds] = None,
) -> LevelSetResult:
    """Measure of {x : some f^(j)(x, y) lands within eps of t}.

    Scans the finite window of j that can contribute, marks coarse cells by
    their centers, then refines marked cells (and their neighbors) tenfold.
    Compared against 16 C (N c + Theta_slope) eps / (theta c^2) with
    Theta_slope = sup|f_x| as the linear upper-stretch constant.
    """
    if db is None:
        db = derivative_bounds(f, rot, m_probe=64, grid=12)
    c, C = db.c, db.C
    if db.theta_x <= 0.0:
        raise ValidationError("level-set bound needs the x-direction stretch")
    if not t >= 2 * C * db.m0:
        raise ValidationError(f"need t >= 2 C m0 = {2 * C * db.m0:.3g}")
    if not 0.0 < eps < c / 4:
        raise ValidationError(f"need 0 < eps < c/4 = {c / 4:.3g}")
    j_low = int(math.floor((t - eps) / C)) + 1
    j_high = int(math.ceil((t + eps) / c)) - 1
    al, be = rot.alpha_float, rot.beta_float

    xs = (np.arange(x_grid) + 0.5) / x_grid
    hit = np.zeros(x_grid, dtype=bool)
    js = list(range(max(1, j_low), j_high + 1))
    for j in js:
        vals = kernels.birkhoff_batch(xs, np.full(x_grid, y), j, al, be, *kernels.roof_args(f))
        hit |= np.abs(vals - t) < eps
    marked = hit.copy()
    marked[:-1] |= hit[1:]
    marked[1:] |= hit[:-1]
    cells = np.where(marked)[0]
    cellset = set(int(c) for c in cells)
    hitset = set(int(c) for c in np.where(hit)[0])
    sub = 10
    count = 0
    flagged = False
    for start in range(0, len(cells), 256):
        batch = cells[start : start + 256]
        fx = (batch[:, None] + (np.arange(sub)[None, :] + 0.5) / sub).ravel() / x_grid
        inner = np.zeros(len(fx), dtype=bool)
        for j in js:
            vals = kernels.birkhoff_batch(fx, np.full(len(fx), y), j, al, be, *kernels.roof_args(f))
            inner |= np.abs(vals - t) < eps
        count += int(inner.sum())
        # a hit in the outer subcell of a neighbor-only cell whose outward
        # neighbor was never refined means the 10x local budget ran out
        inner2 = inner.reshape(len(batch), sub)
        for bi, cell in enumerate(batch):
            cell = int(cell)
            if cell in hitset:
                continue
            if inner2[bi, 0] and (cell - 1) % x_grid not in cellset:
                flagged = True
            if inner2[bi, -1] and (cell + 1) % x_grid not in cellset:
                flagged = True
    estimate = count / (x_grid * sub)
    theta = db.theta_x
    bound = 16.0 * C / (theta * c * c) * (db.N_jump * c + db.slope_sup_x) * eps
    return LevelSetResult(
        estimate, bound, max(1, j_low), j_high, t, eps, x_grid, len(cells), flagged
    )


# ---------------------------------------------------------------------------
# correlation series


@dataclass(frozen=True)
class Box:
    """A base rectangle with a height interval, fully below the roof."""

    x0: float
    x1: float
    y0: float
    y1: float
    s0: float
    s1: float

    def __post_init__(self):
        if not (0.0 <= self.x0 < self.x1 <= 1.0 and 0.0 <= self.y0 < self.y1 <= 1.0):
            raise ValidationError("box base must be a rectangle inside the unit square")
        if not 0.0 <= self.s0 < self.s1:
            raise ValidationError("height interval must satisfy 0 <= s0 < s1")

    def validate_under(self, f: RoofFunction):
        lip = math.hypot(f.slope_sup_x(), f.slope_sup_y())
        gx = np.linspace(self.x0, self.x1, 64)
        gy = np.linspace(self.y0, self.y1, 64)
        xs, ys = np.meshgrid(gx, gy, indexing="ij")
        vals = f.eval_many(xs.ravel(), ys.ravel())
        mesh = math.hypot((self.x1 - self.x0) / 63, (self.y1 - self.y0) / 63)
        inf_cert = float(vals.min()) - lip * mesh * math.sqrt(2.0)
        if self.s1 > inf_cert:
            raise ValidationError(
                f"box height {self.s1} exceeds the certified roof minimum {inf_cert:.6g} over its base"
            )
        return self

    def volume(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0) * (self.s1 - self.s0)

    def contains(self, xs, ys, ss):
        return (
            (xs >= self.x0)
            & (xs < self.x1)
            & (ys >= self.y0)
            & (ys < self.y1)
            & (ss >= self.s0)
            & (ss < self.s1)
        )


@dataclass(frozen=True)
class CorrelationSeries:
    times: tuple
    estimates: tuple
    stderrs: tuple
    samples: int
    seed: int
    mu_A: float
    mu_B: float

    @property
    def product(self) -> float:
        return self.mu_A * self.mu_B


def correlation(
    f: RoofFunction,
    rot: RotationVector2,
    A: Box,
    B: Box,
    times: Sequence[float],
    samples: int,
    seed: int,
) -> CorrelationSeries:
    """Monte Carlo estimates of mu(flow_t A intersect B) over the time list.

    Estimator: draw from the invariant measure, test p in A and flow_t(p)
    in B.  The reference measures are exact since boxes sit under the roof.
    """
    A.validate_under(f)
    B.validate_under(f)
    total = integral(f).value
    xs, ys, ss, _ = uniform_sample_arrays(f, rot, samples, seed)
    in_a = A.contains(xs, ys, ss)
    al, be = rot.alpha_float, rot.beta_float
    ests = []
    errs = []
    for t in times:
        x2, y2, s2, _ = kernels.flow_batch(xs, ys, ss, float(t), al, be, *kernels.roof_args(f))
        joint = in_a & B.contains(x2, y2, s2)
        p = float(joint.mean())
        ests.append(p)
        errs.append(math.sqrt(max(p * (1 - p), 1e-12) / samples))
    return CorrelationSeries(
        tuple(float(t) for t in times),
        tuple(ests),
        tuple(errs),
        samples,
        seed,
        A.volume() / total,
        B.volume() / total,
    )


# ---------------------------------------------------------------------------
# Denjoy-Koksma rigidity scan


@dataclass(frozen=True)
class RigidityRow:
    denominator: int
    max_deviation: float
    threshold: float
    passes: bool


@dataclass(frozen=True)
class RigidityTable:
    rows: tuple[RigidityRow, ...]
    samples: int
    seed: int

    @property
    def passes(self) -> bool:
        return all(r.passes for r in self.rows)


def rigidity_scan(
    f: RoofFunction,
    rot: RotationVector2,
    denominators: Sequence[int],
    samples: int = 1000,
    seed: int = 0,
) -> RigidityTable:
    """Deviation |f^(l) - l mean(f)| along common denominators, exactly.

    Requires a sawtooth-plus-constant roof (the bounded-variation class the
    deviation bound is stated for).  Each deviation is evaluated through
    exact floor sums, so denominators far beyond direct-summation range
    cost only O(log l) big-integer work per sample.
    """
    if not f.is_sawtooth_only:
        raise ValidationError("rigidity scan needs a sawtooth-plus-constant roof")
    mean = dyadic(f.c0) + sum(dyadic(d) for d, _ in f.saw_x) / 2 + sum(
        dyadic(d) for d, _ in f.saw_y
    ) / 2
    threshold = variation_slice_x(f) + variation_slice_y(f)
    pts = uniform_block(seed, 0, samples, 2)
    rows = []
    for l in denominators:
        l = int(l)
        worst = Fraction(0)
        for x, y in pts:
            lo, hi = birkhoff_exact_interval(f, rot, float(x), float(y), l)
            dev = max(abs(lo - l * mean), abs(hi - l * mean))
            if dev > worst:
                worst = dev
        rows.append(
            RigidityRow(l, float(worst), threshold, float(worst) <= threshold + 1e-9)
        )
    return RigidityTable(tuple(rows), samples, seed)


# ---------------------------------------------------------------------------
# empirical distribution of the centered cocycle


@dataclass(frozen=True)
class Histogram:
    edges: tuple
    masses: tuple
    outside_fraction: float
    support_bound: float
    samples: int
    seed: int
    denominator: int


def empirical_distribution(
    f: RoofFunction,
    rot: RotationVector2,
    l_k: int,
    bins: int = 40,
    samples: int = 4000,
    seed: int = 0,
) -> Histogram:
    """Histogram of the centered cocycle f0^(l_k) over uniform base points.

    Needs a coordinate-separated roof f1(x) + f2(y); reports the mass found
    outside [-(Var f1 + Var f2), +: the same], which should vanish along
    common denominators of the rotation pair.
    """
    separable = all(kx == 0 or ky == 0 for kx, ky, _, _ in f.trig) and f.gamma == 0.0
    if not separable:
        raise ValidationError("empirical distribution needs a roof of the form f1(x) + f2(y)")
    pts = uniform_block(seed, 1, samples, 2)
    mean_exact = f.is_sawtooth_only
    if mean_exact:
        mean = dyadic(f.c0) + sum(dyadic(d) for d, _ in f.saw_x) / 2 + sum(
            dyadic(d) for d, _ in f.saw_y
        ) / 2
        vals = np.empty(samples)
        for i, (x, y) in enumerate(pts):
            lo, hi = birkhoff_exact_interval(f, rot, float(x), float(y), l_k)
            vals[i] = float((lo + hi) / 2 - l_k * mean)
    else:
        if l_k > 10**6:
            raise ValidationError("direct summation limited to l_k <= 1e6 for smooth parts")
        vals = kernels.birkhoff_batch(
            pts[:, 0], pts[:, 1], l_k, rot.alpha_float, rot.beta_float, *kernels.roof_args(f)
        ) - l_k * integral(f).value
    bound = variation_slice_x(f) + variation_slice_y(f)
    lo_edge = min(-bound, float(vals.min())) - 1e-9
    hi_edge = max(bound, float(vals.max())) + 1e-9
    counts, edges = np.histogram(vals, bins=bins, range=(lo_edge, hi_edge))
    outside = float(np.mean((vals < -bound - 1e-9) | (vals > bound + 1e-9)))
    return Histogram(
        tuple(float(e) for e in edges),
        tuple(float(c) / samples for c in counts),
        outside,
        bound,
        samples,
        seed,
        int(l_k),
    )
