"""Alternating-stretch partitions and the mixing-criterion checker.

For a level n of a fast-alternating rotation pair, the x-side partition is
built from the translates breakpoint - j alpha for
0 <= j < q_n ceil(q_{n+1} / (g(n) q_n)), keeping the intervals longer than
1 / (q_n sqrt(g(n))); the y-side mirrors this with beta and r_n.  The
checker then samples times m from the alternating windows

    even:  [g(n) q_n, 4 g(n) r_n]      odd:  [g(n) r_n, 4 g(n+1) q_{n+1}]

and tests the two stretch inequalities

    k <= inf |f_x^(m)| |C|     and     sup |f_xx^(m)| |C| <= eps inf |f_x^(m)|

with k = theta sqrt(g(n)), eps = 2 Theta / (theta q_n) (r_n on the odd
side), plus the window certificate that every discontinuity of the slice
x -> f^(m)(x, y) is already a partition breakpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .cfrac import convergents, dyadic
from .errors import PrecisionError, ValidationError
from .roof import DerivativeBounds, RoofFunction, derivative_bounds
from .rotations import RotationVector2, make_gamma
from .streams import uniform_block

__all__ = ["PartialPartition", "FayadReport", "fayad_partitions", "fayad_check"]


@dataclass(frozen=True)
class PartialPartition:
    level: int  # paper-style index: 2n for the x side, 2n+1 for the y side
    axis: str
    intervals: tuple  # ((lo, hi) floats, sorted, pairwise disjoint)
    endpoint_mantissas: tuple  # exact fixed-point endpoints, matching order
    bits: int
    threshold: float
    total_mass: float
    max_length: float
    mass_lower_bound: float
    max_length_bound: float

    @property
    def count(self) -> int:
        return len(self.intervals)

    @property
    def passes(self) -> bool:
        return self.total_mass >= self.mass_lower_bound and self.max_length < self.max_length_bound


def _build_side(
    lines: tuple,
    rate_mantissa: int,
    rate_float: float,
    bits: int,
    count: int,
    qn: int,
    gamma_n: Fraction,
    n_lines_bound: int,
    level: int,
    axis: str,
) -> PartialPartition:
    from .fixedpoint import RealRep

    one = 1 << bits
    js = np.arange(count, dtype=float)
    pos_parts = []
    prov = []  # line mantissas for exact endpoint recovery
    for line in lines:
        pos_parts.append(np.mod(line - js * rate_float, 1.0))
        prov.append(RealRep.from_float(line, bits).mantissa % one)
    pos = np.concatenate(pos_parts)
    order = np.argsort(pos, kind="stable")
    pos_sorted = pos[order]
    line_idx = order // count
    j_idx = order % count

    def exact_pos(i: int) -> int:
        return (prov[int(line_idx[i])] - int(j_idx[i]) * rate_mantissa) % one

    gaps = np.diff(np.concatenate([pos_sorted, [pos_sorted[0] + 1.0]]))
    thr = 1.0 / (qn * math.sqrt(float(gamma_n)))
    thr_sq = Fraction(1, qn * qn) / gamma_n  # exact square of the filter length
    total = len(pos_sorted)
    band = 1e-8 + count * 4e-16
    keep = gaps > thr - band
    intervals = []
    mantissas = []
    mass = 0.0
    max_len = 0.0
    max_pair = None
    for i in np.where(keep)[0]:
        lo_m = exact_pos(i)
        hi_m = exact_pos((i + 1) % total)
        w_m = (hi_m - lo_m) % one
        # exact filter: |I|^2 > 1/(q_n^2 g(n))
        if Fraction(w_m * w_m, one * one) <= thr_sq:
            continue
        lo = pos_sorted[i]
        w = math.ldexp(float(w_m), -bits)
        intervals.append((float(lo), float(lo + w)))
        mantissas.append((lo_m, hi_m))
        mass += w
        if w > max_len:
            max_len = w
            max_pair = w_m
    # exact max-length certificate: w * q_n < 2
    if max_pair is not None and not max_pair * qn < 2 * one:
        raise PrecisionError("a kept interval violates the exact diameter bound")
    return PartialPartition(
        level=level,
        axis=axis,
        intervals=tuple(intervals),
        endpoint_mantissas=tuple(mantissas),
        bits=bits,
        threshold=thr,
        total_mass=mass,
        max_length=max_len,
        mass_lower_bound=1.0 - 2.0 * n_lines_bound / math.sqrt(float(gamma_n)),
        max_length_bound=2.0 / qn,
    )


def fayad_partitions(
    f: RoofFunction, rot: RotationVector2, n: int, gamma
) -> tuple[PartialPartition, PartialPartition]:
    """The level-n pair of partial partitions (x side, y side)."""
    if n < 1:
        raise ValidationError("level must be >= 1")
    g = make_gamma(gamma)
    q = [c.q for c in convergents(rot.alpha_pq, n + 1)]
    r = [c.q for c in convergents(rot.beta_pq, n + 1)]
    xlines = f.x_breakpoints()
    ylines = f.y_breakpoints()
    if not xlines or not ylines:
        raise ValidationError("the construction needs at least one jump line per coordinate")
    count_x = q[n] * _ceil(Fraction(q[n + 1]) / (g(n) * q[n]))
    count_y = r[n] * _ceil(Fraction(r[n + 1]) / (g(n) * r[n]))
    one = 1 << rot.bits
    eta_even = _build_side(
        xlines, rot.alpha.rescale(rot.bits).mantissa % one, rot.alpha_float, rot.bits,
        count_x, q[n], g(n), len(xlines), 2 * n, "x",
    )
    eta_odd = _build_side(
        ylines, rot.beta.rescale(rot.bits).mantissa % one, rot.beta_float, rot.bits,
        count_y, r[n], g(n), len(ylines), 2 * n + 1, "y",
    )
    return eta_even, eta_odd


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


@dataclass(frozen=True)
class FayadReport:
    level: int
    tau_even: float
    tau_odd: float
    eps_even: float
    eps_odd: float
    k_even: float
    k_odd: float
    theta: float
    Theta: float
    mass_even: float
    mass_odd: float
    max_len_even: float
    max_len_odd: float
    window_certified_even: bool
    window_certified_odd: bool
    m_values_even: tuple
    m_values_odd: tuple
    probes_pass: int
    probes_fail: int
    worst_margin_stretch: float
    worst_margin_second: float
    seed: int

    @property
    def passes(self) -> bool:
        return (
            self.probes_fail == 0 and self.window_certified_even and self.window_certified_odd
        )


def _log_uniform_ints(lo: int, hi: int, count: int, seed: int, tag: int) -> tuple:
    if lo > hi:
        raise ValidationError(f"empty m-window [{lo}, {hi}]")
    u = uniform_block(seed, 7000 + tag, count, 1)[:, 0]
    vals = np.exp(np.log(lo) + u * (np.log(hi) - np.log(lo)))
    out = sorted({int(round(v)) for v in vals} | {lo, hi})
    return tuple(min(max(v, lo), hi) for v in out)


def fayad_check(
    f: RoofFunction,
    rot: RotationVector2,
    n: int,
    gamma,
    m_samples: int = 20,
    cell_samples: int = 10,
    transverse_samples: int = 10,
    seed: int = 0,
    db: Optional[DerivativeBounds] = None,
    partitions: Optional[tuple] = None,
) -> FayadReport:
    """Sampled verification of the two stretch inequalities at level n.

    Probes are (time m, cell, transverse coordinate) triples drawn
    log-uniformly in m from each alternating window.  For roofs without a
    smooth part the slice derivative is constant on cells and the checks
    are evaluated exactly; otherwise cell grids with a curvature margin are
    used.  The window certificate re-verifies, by exact integer
    inequalities, that every slice discontinuity in the window is one of
    the partition breakpoints.
    """
    g = make_gamma(gamma)
    q = [c.q for c in convergents(rot.alpha_pq, n + 2)]
    r = [c.q for c in convergents(rot.beta_pq, n + 2)]
    if db is None:
        db = derivative_bounds(f, rot, m_probe=max(64, min(q[n], 512)), grid=12)
    if not (q[n] >= db.m0 and r[n] >= db.m0):
        raise ValidationError(f"level too low: need q_n, r_n >= m0 = {db.m0}")
    if partitions is None:
        partitions = fayad_partitions(f, rot, n, gamma)
    eta_even, eta_odd = partitions

    theta, Theta = db.theta, db.Theta
    tau_even = 2.0 * float(g(n)) * q[n]
    tau_odd = 2.0 * float(g(n)) * r[n]
    eps_even = 2.0 * Theta / (theta * q[n])
    eps_odd = 2.0 * Theta / (theta * r[n])
    k_val = theta * math.sqrt(float(g(n)))

    # exact window certificates: m0 < g(n) q_n and 4 g(n) r_n <= q_{n+1}/g(n)
    # <= q_n ceil(q_{n+1}/(g(n) q_n)), mirrored on the odd side at n+1
    cert_even = (
        db.m0 < g(n) * q[n]
        and 4 * g(n) * r[n] <= Fraction(q[n + 1]) / g(n)
        and Fraction(q[n + 1]) / g(n) <= q[n] * _ceil(Fraction(q[n + 1]) / (g(n) * q[n]))
    )
    cert_odd = (
        db.m0 < g(n) * r[n]
        and 4 * g(n + 1) * q[n + 1] <= Fraction(r[n + 1]) / g(n)
        and Fraction(r[n + 1]) / g(n) <= r[n] * _ceil(Fraction(r[n + 1]) / (g(n) * r[n]))
    )

    ms_even = _log_uniform_ints(_ceil(g(n) * q[n]), int(4 * g(n) * r[n]), m_samples, seed, 0)
    ms_odd = _log_uniform_ints(_ceil(g(n) * r[n]), int(4 * g(n + 1) * q[n + 1]), m_samples, seed, 1)

    probes_pass = probes_fail = 0
    worst1 = math.inf
    worst2 = math.inf

    def run_side(part: PartialPartition, ms: tuple, axis: str, eps_n: float, tag: int):
        nonlocal probes_pass, probes_fail, worst1, worst2
        if part.count == 0:
            raise ValidationError(
                f"level-{n} {axis}-side partition is empty; the level is too low for this pair"
            )
        sel = uniform_block(seed, 7100 + tag, cell_samples, 1)[:, 0]
        cells = [part.intervals[int(u * part.count)] for u in sel]
        tr = uniform_block(seed, 7200 + tag, transverse_samples, 1)[:, 0]
        slope = f.saw_slope_x if axis == "x" else f.saw_slope_y
        for m in ms:
            for lo, hi in cells:
                width = hi - lo
                for y in tr:
                    if f.trig:
                        gridn = 8
                        xs = np.linspace(lo, hi, gridn)
                        if axis == "x":
                            fx = np.array([_fx_m(f, rot, float(a), float(y), m) for a in xs])
                            fxx = np.array([_fxx_m(f, rot, float(a), float(y), m) for a in xs])
                        else:
                            fx = np.array([_fy_m(f, rot, float(y), float(a), m) for a in xs])
                            fxx = np.array([_fyy_m(f, rot, float(y), float(a), m) for a in xs])
                        curv = m * (f.sup_abs_fxx() + f.sup_abs_fxy()) * width / gridn
                        inf_fx = float(np.min(np.abs(fx))) - curv
                        sup_fxx = float(np.max(np.abs(fxx))) + curv
                    else:
                        # slice derivative is constant on cells
                        if axis == "x":
                            val = m * slope
                            if f.gamma != 0.0:
                                val -= f.gamma * (math.floor(y + m * rot.beta_float) - math.floor(y))
                        else:
                            val = m * slope + m * f.gamma * rot.alpha_float
                        inf_fx = abs(val)
                        sup_fxx = 0.0
                    m1 = inf_fx * width - k_val
                    m2 = eps_n * inf_fx - sup_fxx * width
                    worst1 = min(worst1, m1)
                    worst2 = min(worst2, m2)
                    if m1 >= 0.0 and m2 >= 0.0:
                        probes_pass += 1
                    else:
                        probes_fail += 1

    run_side(eta_even, ms_even, "x", eps_even, 0)
    run_side(eta_odd, ms_odd, "y", eps_odd, 1)

    return FayadReport(
        level=n,
        tau_even=tau_even,
        tau_odd=tau_odd,
        eps_even=eps_even,
        eps_odd=eps_odd,
        k_even=k_val,
        k_odd=k_val,
        theta=theta,
        Theta=Theta,
        mass_even=eta_even.total_mass,
        mass_odd=eta_odd.total_mass,
        max_len_even=eta_even.max_length,
        max_len_odd=eta_odd.max_length,
        window_certified_even=bool(cert_even),
        window_certified_odd=bool(cert_odd),
        m_values_even=ms_even,
        m_values_odd=ms_odd,
        probes_pass=probes_pass,
        probes_fail=probes_fail,
        worst_margin_stretch=worst1,
        worst_margin_second=worst2,
        seed=seed,
    )


def _fx_m(f, rot, x, y, m):
    from .roof import birkhoff_dx

    return birkhoff_dx(f, rot, x, y, m)


def _fy_m(f, rot, x, y, m):
    from .roof import birkhoff_dy

    return birkhoff_dy(f, rot, x, y, m)


def _fxx_m(f, rot, x, y, m):
    from .roof import birkhoff_dxx

    return birkhoff_dxx(f, rot, x, y, m)


def _fyy_m(f, rot, x, y, m):
    from .roof import birkhoff_dyy

    return birkhoff_dyy(f, rot, x, y, m)
