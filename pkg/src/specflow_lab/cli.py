"""Batch command-line front end.

One subcommand per diagnostic, each driven by an ExperimentConfig that can
come from ``--config file.json`` and/or per-subcommand flags.  Every run
writes CSV tables plus a JSON summary embedding the config hash, seed and
all certified constants.  Re-running a config with the same seed
reproduces byte-identical CSV bodies (timestamps only ever appear in
comment lines).

Exit codes: 0 all asserted certificates pass, 1 an assertion failed,
2 invalid configuration, 3 a certified computation hit its precision wall.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .cfrac import PartialQuotients, convergents
from .diagnostics import (
    Box,
    Slice1D,
    correlation,
    empirical_distribution,
    exp_sum,
    level_set_measure,
    rigidity_scan,
    weak_mixing_bound,
)
from .errors import CheckFailure, PrecisionError, ValidationError
from .fayad import fayad_check, fayad_partitions
from .ratner import (
    build_cocycle_model,
    cocycle_identity_residual,
    crossing_sequence,
    sparseness_check,
    witness_constructive,
    witness_empirical,
)
from .roof import RoofFunction, birkhoff, derivative_bounds, integral, von_neumann_integrals
from .rotations import (
    RotationVector2,
    ergodicity_check,
    golden_pair,
    palindromic_pair,
    yoccoz_pair,
)
from .specflow import FlowPoint, flow_indexed, uniform_sample_arrays
from .streams import uniform_block

CONFIG_FIELDS = {"operation", "rotation", "roof", "params", "seed", "precision_bits", "out", "threads"}


@dataclass
class ExperimentConfig:
    operation: str
    rotation: dict | None = None
    roof: dict | None = None
    params: dict = field(default_factory=dict)
    seed: int = 0
    precision_bits: int = 128
    out: str = "specflow-out"
    threads: int = 1

    @classmethod
    def from_dict(cls, obj) -> "ExperimentConfig":
        extra = set(obj) - CONFIG_FIELDS
        if extra:
            raise ValidationError(f"unknown config fields: {sorted(extra)}")
        if "operation" not in obj:
            raise ValidationError("config needs an 'operation'")
        return cls(**obj)

    def canonical_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def build_rotation(self) -> RotationVector2:
        if self.rotation is None:
            return golden_pair(self.precision_bits)
        return RotationVector2.from_descriptor(
            {**self.rotation, "precision_bits": self.rotation.get("precision_bits", self.precision_bits)}
        )

    def build_roof(self, rot) -> RoofFunction:
        if self.roof is None:
            return RoofFunction(c0=3.0, saw_x=[(1.0, 0.0)], saw_y=[(math.sqrt(2.0), 0.0)])
        return RoofFunction.from_descriptor(self.roof, rotation=rot)


def _fmt(v) -> str:
    if isinstance(v, np.floating):
        return repr(float(v))
    if isinstance(v, (np.integer, np.bool_)):
        return str(v.item())
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_outputs(cfg: ExperimentConfig, summary: dict, tables: dict, plot_script: bool):
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, (columns, rows) in tables.items():
        path = outdir / f"{name}.csv"
        with open(path, "w") as fh:
            fh.write(f"# generated: {time.strftime('%Y-%m-%dT%H:%M:%S')}\n")
            fh.write(f"# operation: {cfg.operation}\n")
            fh.write(f"# seed: {cfg.seed}\n")
            fh.write(f"# config_sha256: {cfg.sha256()}\n")
            fh.write(f"# kernel_backend: {kernels.BACKEND}\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        paths[name] = str(path)
    summary_full = {
        "tool_version": __version__,
        "operation": cfg.operation,
        "seed": cfg.seed,
        "precision_bits": cfg.precision_bits,
        "threads": cfg.threads,
        "config": json.loads(cfg.canonical_json()),
        "config_sha256": cfg.sha256(),
        "kernel_backend": kernels.BACKEND,
        "csv": paths,
        **summary,
    }
    spath = Path(cfg.out) / f"{cfg.operation}_summary.json"
    with open(spath, "w") as fh:
        json.dump(summary_full, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    if plot_script:
        ppath = outdir / f"plot_{cfg.operation}.py"
        with open(ppath, "w") as fh:
            fh.write("import matplotlib.pyplot as plt\nimport numpy as np\n\n")
            for name, path in paths.items():
                fh.write(
                    f"data = np.genfromtxt({Path(path).name!r}, delimiter=',', names=True, comments='#')\n"
                    f"plt.figure()\n"
                    f"cols = data.dtype.names\n"
                    f"plt.plot(data[cols[0]], data[cols[1]], marker='.')\n"
                    f"plt.xlabel(cols[0]); plt.ylabel(cols[1]); plt.title({name!r})\n\n"
                )
            fh.write("plt.show()\n")
    return summary_full


# ---------------------------------------------------------------------------
# operation handlers: each returns (summary_dict, tables_dict, ok_flag)


def op_convergents(cfg):
    n = int(cfg.params.get("n", 20))
    pq = (
        PartialQuotients.from_descriptor(cfg.params["pq"])
        if "pq" in cfg.params
        else cfg.build_rotation().alpha_pq
    )
    cs = convergents(pq, n)
    ok = all(
        cs[i].p * cs[i - 1].q - cs[i - 1].p * cs[i].q == (-1) ** (i - 1) for i in range(1, n + 1)
    )
    rows = [(c.n, str(c.p), str(c.q)) for c in cs]
    return {"determinant_identity": ok, "n": n}, {"convergents": (("n", "p", "q"), rows)}, ok


def op_palindromic_pair(cfg):
    n_terms = int(cfg.params.get("n_terms", 64))
    pair = palindromic_pair(n_terms, cfg.precision_bits)
    rows = [
        (L, str(l)) for L, l in zip(pair.palindromic_prefix_lengths, pair.common_denominators)
    ]
    summary = {
        "n_terms": n_terms,
        "palindromic_prefix_lengths": pair.palindromic_prefix_lengths,
        "assumptions": list(pair.assumptions),
        "warning_no_palindrome": pair.no_palindrome_warning,
    }
    return summary, {"common_denominators": (("prefix_length", "denominator"), rows)}, True


def op_yoccoz(cfg):
    gamma = cfg.params.get("gamma", "linear")
    levels = int(cfg.params.get("levels", 4))
    pair = yoccoz_pair(gamma, levels, bits=cfg.precision_bits)
    ok = pair.verify()
    rows = pair.tables_csv_rows()
    summary = {"gamma": str(gamma), "levels": levels, "inequalities_exact": ok}
    return summary, {"denominators": (("n", "q", "r"), rows)}, ok


def op_ergodicity(cfg):
    K = int(cfg.params.get("K", 50))
    rot = cfg.build_rotation()
    cert = ergodicity_check(rot, K)
    summary = {
        "K": K,
        "verdict": cert.verdict,
        "witness": cert.witness,
        "residual": cert.residual,
        "certificate_bits": cert.precision_bits,
    }
    rows = [(K, cert.verdict, str(cert.witness), repr(cert.residual))]
    return summary, {"ergodicity": (("K", "verdict", "witness", "residual"), rows)}, cert.ok


def op_birkhoff(cfg):
    rot = cfg.build_rotation()
    f = cfg.build_roof(rot)
    x = float(cfg.params.get("x", 0.2))
    y = float(cfg.params.get("y", 0.7))
    ns = cfg.params.get("n_list", [1, 10, 100, 1000])
    method = cfg.params.get("method", "auto")
    rows = []
    for n in ns:
        v = birkhoff(f, rot, x, y, int(n), method=method)
        rows.append((v.n, v.value, v.rounding_bound))
    return {"x": x, "y": y, "method": method}, {"birkhoff": (("n", "value", "rounding_bound"), rows)}, True


def op_flow(cfg):
    rot = cfg.build_rotation()
    f = cfg.build_roof(rot)
    x = float(cfg.params.get("x", 0.2))
    y = float(cfg.params.get("y", 0.7))
    s = float(cfg.params.get("s", 0.5))
    ts = cfg.params.get("t_list", [1.0, 10.0, 100.0])
    rows = []
    p = FlowPoint(x, y, s)
    for t in ts:
        q, n = flow_indexed(f, rot, p, float(t))
        rows.append((float(t), q.x, q.y, q.s, n))
    return {"start": [x, y, s]}, {"trajectory": (("t", "x", "y", "s", "n"), rows)}, True


def op_exp_sum(cfg):
    p = cfg.params
    sl = Slice1D(
        slope=float(p.get("slope", 50.0)),
        steps=tuple((float(a), float(b)) for a, b in p.get("steps", [])),
        trig=tuple((int(k), float(a), float(b)) for k, a, b in p.get("trig", [])),
    )
    theta = float(p.get("theta", sl.deriv_min_certified()))
    est = exp_sum(sl, theta, int(p.get("quad_points", 200)))
    rows = [(est.value, est.quad_error, est.lemma_bound, est.theta, est.n_discontinuities)]
    summary = {
        "passes": est.passes,
        "theta": est.theta,
        "n_discontinuities": est.n_discontinuities,
        "var_deriv": est.var_deriv,
    }
    return summary, {"exp_sum": (("value", "quad_error", "bound", "theta", "n_disc"), rows)}, est.passes


def op_weak_mixing(cfg):
    rot = cfg.build_rotation()
    f = cfg.build_roof(rot)
    s_list = cfg.params.get("s_list", [1.0, 2.0, 5.0, 10.0])
    n_list = cfg.params.get("n_list", [50, 100, 200])
    db = derivative_bounds(f, rot, m_probe=max(2, min(int(min(n_list)), 512)), grid=12)
    rows = []
    ok = True
    for n in n_list:
        for s in s_list:
            r = weak_mixing_bound(f, rot, float(s), int(n), db=db)
            rows.append((r.n, r.s, r.numeric, r.quad_error, r.bound, r.passes))
            ok &= r.passes
    summary = {"theta": db.theta, "N_jump": db.N_jump, "fxx_sup": db.Theta, "all_pass": ok}
    return summary, {"weak_mixing": (("n", "s", "numeric", "quad_error", "bound", "pass"), rows)}, ok


def op_level_set(cfg):
    rot = cfg.build_rotation()
    f = cfg.build_roof(rot)
    p = cfg.params
    res = level_set_measure(
        f,
        rot,
        y=float(p.get("y", 0.37)),
        t=float(p.get("t", 50.0)),
        eps=float(p.get("eps", 0.01)),
        x_grid=int(p.get("x_grid", 2048)),
    )
    rows = [(res.t, res.eps, res.estimate, res.bound, res.j_low, res.j_high, res.passes)]
    summary = {"passes": res.passes, "estimate": res.estimate, "bound": res.bound}
    return summary, {"level_set": (("t", "eps", "estimate", "bound", "j_low", "j_high", "pass"), rows)}, res.passes


def op_correlate(cfg):
    rot = cfg.build_rotation()
    f = cfg.build_roof(rot)
    p = cfg.params
    A = Box(*p.get("A", [0.0, 1.0, 0.0, 1.0, 0.0, 2.0]))
    B = Box(*p.get("B", p.get("A", [0.0, 1.0, 0.0, 1.0, 0.0, 2.0])))
    times = p.get("times", [1.0, 10.0, 100.0])
    series = correlation(f, rot, A, B, times, int(p.get("samples", 10000)), cfg.seed)
    rows = [
        (t, e, se, series.product)
        for t, e, se in zip(series.times, series.estimates, series.stderrs)
    ]
    ok = all(
        e <= min(series.mu_A, series.mu_B) + 3 * se + 1e-9
        for e, se in zip(series.estimates, series.stderrs)
    )
    summary = {"mu_A": series.mu_A, "mu_B": series.mu_B, "samples": series.samples, "range_ok": ok}
    tables = {"correlation": (("t", "estimate", "stderr", "product"), rows)}
    if p.get("dump_samples"):
        xs, ys, ss, _ = uniform_sample_arrays(f, rot, series.samples, cfg.seed)
        tables["samples"] = (("x", "y", "s"), list(zip(xs, ys, ss)))
    return summary, tables, ok


def op_rigidity(cfg):
    rot_desc = cfg.rotation
    if rot_desc is None:
        pair = palindromic_pair(int(cfg.params.get("n_terms", 64)), cfg.precision_bits)
        rot = pair.rotation
        denoms = cfg.params.get("denominators", pair.common_denominators)
    else:
        rot = cfg.build_rotation()
        denoms = cfg.params["denominators"]
    f = cfg.build_roof(rot)
    if cfg.roof is None:
        f = RoofFunction(c0=3.0, saw_x=[(1.0, 0.0)], saw_y=[(2.0, 0.0)])
    tab = rigidity_scan(f, rot, [int(d) for d in denoms], int(cfg.params.get("samples", 1000)), cfg.seed)
    rows = [(str(r.denominator), r.max_deviation, r.threshold, r.passes) for r in tab.rows]
    summary = {"passes": tab.passes, "samples": tab.samples}
    return summary, {"rigidity": (("denominator", "max_deviation", "threshold", "pass"), rows)}, tab.passes


def op_distribution(cfg):
    rot_desc = cfg.rotation
    if rot_desc is None:
        pair = palindromic_pair(int(cfg.params.get("n_terms", 64)), cfg.precision_bits)
        rot = pair.rotation
        l = int(cfg.params.get("l", pair.common_denominators[2]))
    else:
        rot = cfg.build_rotation()
        l = int(cfg.params["l"])
    f = cfg.build_roof(rot)
    if cfg.roof is None:
        f = RoofFunction(c0=3.0, saw_x=[(1.0, 0.0)], saw_y=[(2.0, 0.0)])
    h = empirical_distribution(
        f, rot, l, int(cfg.params.get("bins", 40)), int(cfg.params.get("samples", 4000)), cfg.seed
    )
    rows = [(h.edges[i], h.edges[i + 1], h.masses[i]) for i in range(len(h.masses))]
    ok = h.outside_fraction == 0.0
    summary = {
        "l": h.denominator,
        "outside_fraction": h.outside_fraction,
        "support_bound": h.support_bound,
        "containment": ok,
    }
    return summary, {"distribution": (("edge_lo", "edge_hi", "mass"), rows)}, ok


def op_fayad(cfg):
    p = cfg.params
    gamma = p.get("gamma", "linear")
    levels = int(p.get("levels", max(3, int(p.get("level", 2)) + 1)))
    level = int(p.get("level", 2))
    pair = yoccoz_pair(gamma, levels, bits=cfg.precision_bits)
    f = cfg.build_roof(pair.rotation)
    parts = fayad_partitions(f, pair.rotation, level, gamma)
    rep = fayad_check(
        f,
        pair.rotation,
        level,
        gamma,
        m_samples=int(p.get("m_samples", 20)),
        cell_samples=int(p.get("cell_samples", 10)),
        transverse_samples=int(p.get("transverse_samples", 10)),
        seed=cfg.seed,
        partitions=parts,
    )
    even, odd = parts
    rows = [
        ("even", even.count, even.total_mass, even.max_length, even.threshold, even.passes),
        ("odd", odd.count, odd.total_mass, odd.max_length, odd.threshold, odd.passes),
    ]
    probe_rows = [
        (rep.probes_pass, rep.probes_fail, rep.worst_margin_stretch, rep.worst_margin_second)
    ]
    ok = rep.passes and even.passes and odd.passes
    summary = {
        "level": level,
        "tau": [rep.tau_even, rep.tau_odd],
        "eps": [rep.eps_even, rep.eps_odd],
        "k": [rep.k_even, rep.k_odd],
        "theta": rep.theta,
        "Theta": rep.Theta,
        "window_certified": [rep.window_certified_even, rep.window_certified_odd],
        "probes_pass": rep.probes_pass,
        "probes_fail": rep.probes_fail,
        "passes": ok,
    }
    return summary, {
        "fayad_partitions": (("side", "cells", "mass", "max_length", "threshold", "pass"), rows),
        "fayad_probes": (("pass", "fail", "worst_margin_stretch", "worst_margin_second"), probe_rows),
    }, ok


def op_crossings(cfg):
    rot = cfg.build_rotation()
    p = cfg.params
    x = float(p.get("x", 0.1))
    d = float(p.get("d", 1e-3))
    n_max = int(p.get("n_max", 100000))
    coord = p.get("coordinate", "x")
    rate = rot.alpha if coord == "x" else rot.beta
    seq = crossing_sequence(rate, x, x + d, n_max)
    verdict = sparseness_check(seq, 0.0, math.inf)
    rows = list(zip(seq.crossing_indices, seq.values))
    summary = {
        "d": d,
        "crossings": len(seq.crossing_indices),
        "min_gap": verdict.min_gap,
        "max_gap": verdict.max_gap,
    }
    return summary, {"crossings": (("n", "value"), rows)}, True


def op_identity(cfg):
    rot = cfg.build_rotation()
    f = cfg.build_roof(rot)
    p = cfg.params
    which = p.get("which", "master")
    trials = int(p.get("trials", 100))
    n_max = int(p.get("n_max", 2000))
    tol_scale = float(p.get("tolerance_scale", 1e-9))
    model = build_cocycle_model(f, rot)
    rng = uniform_block(cfg.seed, 3, trials, 5)
    rows = []
    ok = True
    for i in range(trials):
        u = rng[i]
        pt = (4 * u[0] - 2, 4 * u[1] - 2)
        qt = (4 * u[2] - 2, 4 * u[3] - 2)
        n = int(u[4] * n_max)
        r = cocycle_identity_residual(model, pt, qt, n, which, bits=cfg.precision_bits)
        good = r <= tol_scale * (1 + n)
        ok &= good
        rows.append((i, n, r, tol_scale * (1 + n), good))
    summary = {"which": which, "trials": trials, "all_pass": ok}
    return summary, {"identity": (("trial", "n", "residual", "bound", "pass"), rows)}, ok


def op_ratner_witness(cfg):
    rot = cfg.build_rotation()
    f = cfg.build_roof(rot)
    p = cfg.params
    pairs = int(p.get("pairs", 100))
    eps = float(p.get("eps", 0.1))
    d_lo = float(p.get("d_min", 1e-5))
    d_hi = float(p.get("d_max", 1e-3))
    model = build_cocycle_model(f, rot, seed=cfg.seed)
    u = uniform_block(cfg.seed, 5, pairs, 4)
    rows = []
    ok = True
    for i in range(pairs):
        d = 10 ** (math.log10(d_lo) + u[i, 0] * (math.log10(d_hi) - math.log10(d_lo)))
        x, y = u[i, 1], u[i, 2]
        th = 2 * math.pi * u[i, 3]
        w = witness_constructive(
            model, (x, y), ((x + d * math.cos(th)) % 1.0, (y + d * math.sin(th)) % 1.0), eps
        )
        good = (
            w.passes
            and model.C1 / w.d <= w.M <= 3 * model.s * model.C2 / w.d + 2
        )
        ok &= good
        rows.append((w.d, w.M, w.L, w.p, w.good_fraction, good))
    summary = {
        "pairs": pairs,
        "eps_requested": eps,
        "eps_cap": model.eps_cap(),
        "constants": {
            "C0": model.C0, "C1": model.C1, "C2": model.C2,
            "p0": model.p0, "p1": model.p1, "h": model.h_floor, "s": model.s,
        },
        "all_pass": ok,
    }
    return summary, {"witnesses": (("d", "M", "L", "p", "good_fraction", "pass"), rows)}, ok


HANDLERS = {
    "convergents": op_convergents,
    "palindromic-pair": op_palindromic_pair,
    "yoccoz": op_yoccoz,
    "ergodicity": op_ergodicity,
    "birkhoff": op_birkhoff,
    "flow": op_flow,
    "exp-sum": op_exp_sum,
    "weak-mixing": op_weak_mixing,
    "level-set": op_level_set,
    "correlate": op_correlate,
    "rigidity": op_rigidity,
    "distribution": op_distribution,
    "fayad": op_fayad,
    "crossings": op_crossings,
    "identity": op_identity,
    "ratner-witness": op_ratner_witness,
}


def run(cfg: ExperimentConfig, plot_script: bool = False) -> int:
    """Dispatch a validated config; returns the process exit code."""
    if cfg.operation not in HANDLERS:
        raise ValidationError(f"unknown operation {cfg.operation!r}")
    t0 = time.time()
    summary, tables, ok = HANDLERS[cfg.operation](cfg)
    summary["runtime_s"] = round(time.time() - t0, 3)
    summary["pass"] = bool(ok)
    write_outputs(cfg, summary, tables, plot_script)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# argument parsing


PARAM_FLAGS = {
    "convergents": [("--n", int)],
    "palindromic-pair": [("--n-terms", int)],
    "yoccoz": [("--gamma", str), ("--levels", int)],
    "ergodicity": [("--K", int)],
    "birkhoff": [("--x", float), ("--y", float), ("--method", str)],
    "flow": [("--x", float), ("--y", float), ("--s", float)],
    "exp-sum": [("--slope", float), ("--theta", float), ("--quad-points", int)],
    "weak-mixing": [],
    "level-set": [("--y", float), ("--t", float), ("--eps", float), ("--x-grid", int)],
    "correlate": [("--samples", int)],
    "rigidity": [("--samples", int), ("--n-terms", int)],
    "distribution": [("--l", int), ("--bins", int), ("--samples", int)],
    "fayad": [("--level", int), ("--gamma", str), ("--m-samples", int),
              ("--cell-samples", int), ("--transverse-samples", int)],
    "crossings": [("--x", float), ("--d", float), ("--n-max", int), ("--coordinate", str)],
    "identity": [("--which", str), ("--trials", int), ("--n-max", int)],
    "ratner-witness": [("--pairs", int), ("--eps", float), ("--d-min", float), ("--d-max", float)],
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="specflow-lab",
        description="Special flows over two-torus rotations: constructions and diagnostics",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="operation", required=True)
    for name in HANDLERS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=str, default=None, help="JSON config file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--precision-bits", type=int, default=None)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--plot-script", action="store_true")
        for flag, typ in PARAM_FLAGS.get(name, []):
            sp.add_argument(flag, type=typ, default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        base = {}
        if args.config:
            with open(args.config) as fh:
                base = json.load(fh)
        base.setdefault("operation", args.operation)
        if base["operation"] != args.operation:
            raise ValidationError(
                f"config operation {base['operation']!r} does not match subcommand {args.operation!r}"
            )
        cfg = ExperimentConfig.from_dict(base)
        for key in ("seed", "precision_bits", "out", "threads"):
            v = getattr(args, key, None)
            if v is not None:
                setattr(cfg, key, v)
        for flag, _ in PARAM_FLAGS.get(args.operation, []):
            key = flag.lstrip("-").replace("-", "_")
            v = getattr(args, key, None)
            if v is not None:
                cfg.params[key] = v
        code = run(cfg, plot_script=args.plot_script)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PrecisionError as exc:
        print(f"precision error: {exc}", file=sys.stderr)
        return 3
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
