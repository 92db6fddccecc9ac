"""The suspension (special) flow under a roof function.

Points live in X^f = {(x, y, s) : 0 <= s < f(x, y)}; the flow moves at unit
vertical speed and (x, y, f(x, y)) is glued to (T(x, y), 0).  Advancing by
time t means locating the unique n with f^(n) <= s + t < f^(n+1) and
returning (T^n(x, y), s + t - f^(n)).

The single-point route here is certified: torus coordinates are exact
fixed-point words, the Birkhoff partial sums carry rounding budgets, and a
step whose residual height is within budget of a roof boundary raises
``BoundaryAmbiguityError`` rather than guessing a side (an exactly-zero
residual is fine: that is the glue point itself, and the base index is
determined by the defining inequalities).  Batch Monte Carlo work goes
through ``kernels.flow_batch`` instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import BoundaryAmbiguityError, ValidationError
from .roof import RoofFunction, _FixedEval, integral
from .rotations import RotationVector2, orbit_point
from .streams import uniform_block

__all__ = ["FlowPoint", "SampleInfo", "flow", "flow_indexed", "metric_df", "uniform_sample", "uniform_sample_arrays"]


@dataclass(frozen=True)
class FlowPoint:
    x: float
    y: float
    s: float
    s_err: float = 0.0

    def validate(self, f: RoofFunction):
        if not (0.0 <= self.s < f.eval(self.x, self.y)):
            raise ValidationError("height must satisfy 0 <= s < f(x, y)")
        return self


def flow(f: RoofFunction, rot: RotationVector2, p: FlowPoint, t: float) -> FlowPoint:
    """Certified time-t map; see flow_indexed for the base index."""
    return flow_indexed(f, rot, p, t)[0]


def flow_indexed(f: RoofFunction, rot: RotationVector2, p: FlowPoint, t: float):
    """Certified time-t map, returning (point, base index n).

    The base index is bracketed by the roof bounds,
    n in [floor((s+t)/C) - 1, ceil((s+t)/c) + 1], and located by monotone
    search.  For sawtooth roofs over a long bracket the search is binary
    with exact floor-sum evaluations (O(log) big-integer work per probe),
    so large |t| stays cheap; otherwise the increasing partial sums are
    walked in fixed point.  A comparison that cannot be separated from the
    roof boundary within its budget is a hard error; an exactly-zero
    residual is the glue point itself.
    """
    total_exact_q = Fraction(p.s) + Fraction(t)
    if f.is_sawtooth_only:
        c, C = f.inf_bound, f.sup_bound
        n_lo = math.floor(min(float(total_exact_q) / c, float(total_exact_q) / C)) - 1
        n_hi = math.ceil(max(float(total_exact_q) / c, float(total_exact_q) / C)) + 1
        if n_hi - n_lo > 64:
            return _flow_bisect(f, rot, p, total_exact_q, n_lo, n_hi)
    return _flow_walk(f, rot, p, t)


def _flow_bisect(f, rot, p, total: Fraction, n_lo: int, n_hi: int):
    """Binary search on the exact interval enclosures of f^(n)."""
    from .roof import birkhoff_exact_interval

    x, y = p.x, p.y

    def at_most_total(n: int):
        if n == 0:
            return 0 <= total
        lo, hi = birkhoff_exact_interval(f, rot, x, y, n)
        if hi <= total:
            return True
        if lo > total:
            return False
        if lo == hi == total:
            return True  # the glue point: f^(n) equals s + t exactly
        raise BoundaryAmbiguityError(
            "flow lands within the enclosure width of a roof boundary", where=n
        )

    if not at_most_total(n_lo):
        raise BoundaryAmbiguityError("bracket failed below; roof bounds inconsistent", where=n_lo)
    lo_n, hi_n = n_lo, n_hi
    while hi_n - lo_n > 1:  # invariant: f^(lo_n) <= total, f^(hi_n) > total (or hi_n untested top)
        mid = (lo_n + hi_n) // 2
        if at_most_total(mid):
            lo_n = mid
        else:
            hi_n = mid
    n = lo_n
    vlo, vhi = birkhoff_exact_interval(f, rot, x, y, n) if n != 0 else (Fraction(0), Fraction(0))
    s_mid = float(total - (vlo + vhi) / 2)
    s_err = p.s_err + float(vhi - vlo) / 2 + 1e-15
    if s_mid < 0 and abs(s_mid) <= s_err:
        s_mid = 0.0
    px, py = orbit_point(rot, x, y, n)
    return FlowPoint(px.value, py.value, s_mid, s_err + px.error_bound + py.error_bound), n


def _flow_walk(f: RoofFunction, rot: RotationVector2, p: FlowPoint, t: float):
    ev = _FixedEval(f, rot)
    one, bits = ev.one, ev.bits
    X, in_x = ev.to_fixed2(p.x)
    Y, in_y = ev.to_fixed2(p.y)
    in_err = max(in_x, in_y)
    total = Fraction(p.s) + Fraction(t)
    total_fp = int(total * one)
    total_exact = total == Fraction(total_fp, one)
    fsum = 0  # fixed-point f^(n)
    trig_sum = 0.0
    n = 0
    err_ulps = 0 if total_exact else 1
    budget_f = p.s_err
    trig_step = len(f.trig) * 2.0**-48

    def classify(gap_fp: int, gap_float: float, slack_ulps: int, slack_float: float) -> int:
        """+1 if gap certainly positive, -1 if certainly negative, 0 on boundary."""
        if not f.trig and slack_float == 0.0:
            if gap_fp > slack_ulps:
                return 1
            if gap_fp < -slack_ulps:
                return -1
            return 0 if gap_fp == 0 and slack_ulps == 0 else 2
        g = math.ldexp(float(gap_fp), -bits) + gap_float
        s = math.ldexp(float(slack_ulps), -bits) + slack_float + abs(g) * 2.0**-50
        if g > s:
            return 1
        if g < -s:
            return -1
        return 2

    while True:  # forward while f^(n+1) <= total
        cerr = n * max(ev.Aerr, ev.Berr) + in_err
        ev.check_breaks(X, Y, cerr + ev.step_ulps, n)
        v, tv, inexact = ev.value_fp(X, Y)
        step_ulps = inexact + cerr * ev.slope_ulps
        side = classify(
            total_fp - (fsum + v),
            -(trig_sum + tv),
            err_ulps + step_ulps,
            budget_f + trig_step,
        )
        if side == 2:
            raise BoundaryAmbiguityError(
                "flow lands within the rounding budget of a roof boundary", where=n
            )
        if side >= 0:  # f^(n+1) <= total (boundary = glue point, advance)
            fsum += v
            trig_sum += tv
            err_ulps += step_ulps
            budget_f += trig_step
            n += 1
            X = (X + ev.A) % one
            Y = (Y + ev.B) % one
            continue
        break
    while True:  # backward while f^(n) > total
        side = classify(fsum - total_fp, trig_sum, err_ulps, budget_f)
        if side == 2:
            raise BoundaryAmbiguityError(
                "flow lands within the rounding budget of a roof boundary", where=n
            )
        if side <= 0:
            break
        X = (X - ev.A) % one
        Y = (Y - ev.B) % one
        n -= 1
        cerr = abs(n) * max(ev.Aerr, ev.Berr) + in_err
        ev.check_breaks(X, Y, cerr + ev.step_ulps, n)
        v, tv, inexact = ev.value_fp(X, Y)
        fsum -= v
        trig_sum -= tv
        err_ulps += inexact + cerr * ev.slope_ulps
        budget_f += trig_step

    s_new = float(total - Fraction(fsum, one)) - trig_sum
    err_new = math.ldexp(float(err_ulps + 8), -bits) + budget_f
    xf = math.ldexp(X, -bits) if X.bit_length() <= 53 else X / one
    yf = math.ldexp(Y, -bits) if Y.bit_length() <= 53 else Y / one
    pt = FlowPoint(xf, yf, max(s_new, 0.0) if abs(s_new) <= err_new else s_new, err_new)
    return pt, n


def metric_df(p1: FlowPoint, p2: FlowPoint) -> float:
    """d((x1,y1),(x2,y2)) + |s1 - s2| with the max metric on the torus."""
    dx = abs(p1.x - p2.x)
    dx = min(dx, 1.0 - dx)
    dy = abs(p1.y - p2.y)
    dy = min(dy, 1.0 - dy)
    return max(dx, dy) + abs(p1.s - p2.s)


@dataclass(frozen=True)
class SampleInfo:
    count: int
    seed: int
    acceptance_rate: float
    expected_acceptance: float
    rounds: int


def uniform_sample_arrays(f: RoofFunction, rot: RotationVector2, count: int, seed: int):
    """Vectorized rejection sampler from the flow-invariant measure.

    Round r draws one candidate block addressed by (seed, r); sample i only
    ever consumes slot i of a block, so the output is schedule independent.
    """
    if count < 1:
        raise ValidationError("count must be >= 1")
    sup = f.sup_bound
    xs = np.empty(count)
    ys = np.empty(count)
    ss = np.empty(count)
    pending = np.ones(count, dtype=bool)
    attempts = 0
    rounds = 0
    for r in range(10000):
        if not pending.any():
            break
        block = uniform_block(seed, r, count, 3)
        cand_s = block[:, 2] * sup
        accept = pending & (cand_s < f.eval_many(block[:, 0], block[:, 1]))
        xs[accept] = block[accept, 0]
        ys[accept] = block[accept, 1]
        ss[accept] = cand_s[accept]
        attempts += int(pending.sum())
        pending &= ~accept
        rounds = r + 1
    if pending.any():
        raise ValidationError("rejection sampling failed to converge (roof nearly degenerate?)")
    info = SampleInfo(
        count=count,
        seed=seed,
        acceptance_rate=count / attempts,
        expected_acceptance=integral(f).value / sup,
        rounds=rounds,
    )
    return xs, ys, ss, info


def uniform_sample(f: RoofFunction, rot: RotationVector2, count: int, seed: int):
    xs, ys, ss, info = uniform_sample_arrays(f, rot, count, seed)
    pts = [FlowPoint(float(a), float(b), float(c)) for a, b, c in zip(xs, ys, ss)]
    return pts, info
