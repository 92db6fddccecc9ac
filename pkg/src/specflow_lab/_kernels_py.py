"""Pure-numpy batch kernels (fallback backend).

Signatures mirror the compiled module ``specflow_lab._kernels`` exactly.
All arithmetic is double precision; these paths back Monte Carlo and
scanning estimators where per-step slack is tracked by the caller, not the
certified fixed-point routes.
"""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi
_CHUNK = 1 << 19


def _roof_eval(xs, ys, c0, d1, delta1, d2, delta2, trig, gamma, alpha, beta):
    v = np.full(xs.shape, c0)
    for j in range(d1.shape[0]):
        t = xs - delta1[j]
        v += d1[j] * np.where(t < 0.0, t + 1.0, t)
    for j in range(d2.shape[0]):
        t = ys - delta2[j]
        v += d2[j] * np.where(t < 0.0, t + 1.0, t)
    for j in range(trig.shape[0]):
        ph = TWO_PI * (trig[j, 0] * xs + trig[j, 1] * ys)
        v += trig[j, 2] * np.cos(ph) + trig[j, 3] * np.sin(ph)
    if gamma != 0.0:
        v += gamma * (alpha * ys - (xs + alpha) * np.floor(ys + beta))
    return v


def birkhoff_batch(xs, ys, m, alpha, beta, c0, d1, delta1, d2, delta2, trig, gamma):
    """f^(m) at each point, m >= 0."""
    xs = np.mod(np.asarray(xs, dtype=float), 1.0)
    ys = np.mod(np.asarray(ys, dtype=float), 1.0)
    acc = np.zeros(xs.shape)
    for k in range(m):
        xk = np.mod(xs + (k * alpha) % 1.0, 1.0)
        yk = np.mod(ys + (k * beta) % 1.0, 1.0)
        acc += _roof_eval(xk, yk, c0, d1, delta1, d2, delta2, trig, gamma, alpha, beta)
    return acc


def flow_batch(xs, ys, ss, t, alpha, beta, c0, d1, delta1, d2, delta2, trig, gamma):
    """Advance suspension-flow points by time t; returns (x, y, s, n)."""
    x = np.mod(np.asarray(xs, dtype=float), 1.0).copy()
    y = np.mod(np.asarray(ys, dtype=float), 1.0).copy()
    tot = np.asarray(ss, dtype=float) + t
    n = np.zeros(x.shape, dtype=np.int64)
    fn = np.zeros(x.shape)

    def roof(a, b):
        return _roof_eval(a, b, c0, d1, delta1, d2, delta2, trig, gamma, alpha, beta)

    active = np.ones(x.shape, dtype=bool)
    while True:  # forward sweep
        idx = np.where(active)[0]
        if idx.size == 0:
            break
        fv = roof(x[idx], y[idx])
        adv = fn[idx] + fv <= tot[idx]
        ai = idx[adv]
        if ai.size == 0:
            break
        fn[ai] += fv[adv]
        x[ai] = np.mod(x[ai] + alpha, 1.0)
        y[ai] = np.mod(y[ai] + beta, 1.0)
        n[ai] += 1
        active[idx[~adv]] = False
    active = fn > tot
    while True:  # backward sweep for negative remainders
        idx = np.where(active)[0]
        if idx.size == 0:
            break
        x[idx] = np.mod(x[idx] - alpha, 1.0)
        y[idx] = np.mod(y[idx] - beta, 1.0)
        fn[idx] -= roof(x[idx], y[idx])
        n[idx] -= 1
        active[idx] = fn[idx] > tot[idx]
    return x, y, tot - fn, n


def crossing_scan(x0, alpha, lo, hi, n_max, slack):
    """Indices n in [0, n_max) with frac(x0 + n alpha) in [lo, hi).

    Also returns the subset whose distance to either endpoint is at most
    ``slack`` (candidates for exact recheck by the caller).
    """
    hits = []
    flagged = []
    for start in range(0, n_max, _CHUNK):
        stop = min(start + _CHUNK, n_max)
        ns = np.arange(start, stop, dtype=np.int64)
        pos = np.mod(x0 + ns * alpha, 1.0)
        inside = (pos >= lo) & (pos < hi)
        hits.append(ns[inside])
        near = (np.abs(pos - lo) <= slack) | (np.abs(pos - hi) <= slack)
        flagged.append(ns[near])
    return (
        np.concatenate(hits) if hits else np.empty(0, np.int64),
        np.concatenate(flagged) if flagged else np.empty(0, np.int64),
    )


def diff_series(x, y, dx, dy, n_max, alpha, beta, c0, d1, delta1, d2, delta2, trig, gamma):
    """Delta_n = f^(n)(x + dx, y + dy) - f^(n)(x, y) for n = 0..n_max."""
    out = np.empty(n_max + 1)
    out[0] = 0.0
    acc = 0.0
    for start in range(0, n_max, _CHUNK):
        stop = min(start + _CHUNK, n_max)
        ns = np.arange(start, stop, dtype=np.int64)
        ax = np.mod(x + ns * alpha, 1.0)
        ay = np.mod(y + ns * beta, 1.0)
        bx = np.mod(x + dx + ns * alpha, 1.0)
        by = np.mod(y + dy + ns * beta, 1.0)
        d = _roof_eval(bx, by, c0, d1, delta1, d2, delta2, trig, gamma, alpha, beta) - _roof_eval(
            ax, ay, c0, d1, delta1, d2, delta2, trig, gamma, alpha, beta
        )
        cs = np.cumsum(d) + acc
        out[start + 1 : stop + 1] = cs
        acc = cs[-1]
    return out
