"""Command line experiment runner.

    python -m polydense [options] conjugate
    python -m polydense [options] kernel check
    python -m polydense [options] approx run [--weight power:a=2] [--f bump] ...
    python -m polydense [options] flt
    python -m polydense [options] seq
    python -m polydense [options] suite

Every command writes CSV files (header row, numbers with 17 significant
digits) and a ``summary.csv`` with one row per check.
"""

import argparse
import csv
import logging
import math
import os
import sys
import time
import warnings

import numpy as np

from . import approx as A
from . import conjugate as C
from . import kernel as K
from .config import ExperimentConfig, load, validate
from .errors import BudgetError, DivergenceWarning, PolyDenseError
from .fleet import make_function
from .flt import (DIVERGENT, FINITE, DiscreteFunctional, Rectangle, ZERO, flt_transform,
                  functional_fleet, growth_norm, hermitian_residual, moment_check,
                  p_space_norm)
from .oracles import conjugate_oracle
from .seqspace import (FnSequence, functional_bound, km_sum, make_seq_weights,
                       p_seminorm, split_functional)
from .smoothfn import certified_seminorm
from .weights import make_weight_family

log = logging.getLogger("polydense")

SUMMARY_HEADER = ["name", "value", "bound", "status"]


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if isinstance(v, complex):
        return "%.17g%+.17gj" % (v.real, v.imag)
    return str(v)


class Output:
    """Writes CSV files (and optional gnuplot .dat twins) into one directory."""

    def __init__(self, directory, plot_data=False):
        self.dir = directory
        self.plot_data = plot_data
        os.makedirs(directory, exist_ok=True)

    def table(self, name, header, rows):
        path = os.path.join(self.dir, name + ".csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
        if self.plot_data:
            with open(os.path.join(self.dir, name + ".dat"), "w") as fh:
                fh.write("# " + " ".join(header) + "\n")
                for row in rows:
                    fh.write(" ".join(fmt(v) for v in row) + "\n")
        return path


class Summary:
    def __init__(self):
        self.rows = []

    def check(self, name, value, bound, ok):
        self.rows.append((name, value, bound, "PASS" if ok else "FAIL"))

    def upper(self, name, value, bound):
        self.check(name, value, bound, bool(value <= bound))

    def lower(self, name, value, bound):
        self.check(name, value, bound, bool(value >= bound))


def _seconds(cfg, t0):
    return time.perf_counter() - t0 if cfg.record_timings else math.nan


# ---------------------------------------------------------------- experiments

def run_conjugate(cfg, out, summary):
    cc = cfg.conjugate
    xs = np.linspace(cc.x_min, cc.x_max, cc.oracle_points)
    rows = []
    for name in cc.functions:
        fn = C.catalogue_function(name)
        u = C.sample_for_conjugate(fn, cc.x_max, step=cc.step / 50, ratio=cc.step / 10)
        star = C.young_conjugate(u, xs).values
        ref = conjugate_oracle(name, xs)
        rel = np.abs(star - ref) / np.maximum(np.abs(ref), 1e-300)
        rows += [(name, x, s, r, e) for x, s, r, e in zip(xs, star, ref, rel)]
        summary.upper(f"conjugate_oracle_{name}", float(np.max(rel)), 1e-6)
    out.table("conjugate", ["function", "x", "u_star", "oracle", "rel_err"], rows)

    u = C.sample_for_conjugate(C.catalogue_function("exp"), 2.0)
    v = float(C.young_conjugate(u, [2.0]).values[0])
    summary.upper("conjugate_exp_at_2", abs(v - (2 * math.log(2) - 2)), 1e-6)

    xg = np.linspace(cc.x_min, cc.x_max, cc.points)
    rows = []
    for name in cc.functions:
        fn = C.catalogue_function(name)
        gap = C.lemma_gap(fn, xg, step=cc.step, t_step=cc.step)
        fine = C.lemma_gap(fn, xg, step=cc.step / 2, t_step=cc.step / 2)
        rows += [(name, x, g, h) for x, g, h in zip(xg, gap, fine)]
        summary.lower(f"lemma_gap_{name}", float(np.min(gap)), -1e-8)
        summary.upper(f"lemma_refine_{name}", float(np.max(np.abs(gap - fine))), 1e-6)
    out.table("lemma_gap", ["function", "x", "gap", "gap_refined"], rows)

    xb = np.linspace(0, 40, 40001)
    sq = C.catalogue_function("square")
    u = C.sample_for_conjugate(sq, 40.0, step=1e-3)
    yi = np.linspace(0.5, 9.5, 91)
    bb = C.biconjugate(u, yi, xb).values
    summary.upper("biconjugate_convex", float(np.max(np.abs(bb - sq(yi)))), 1e-4)
    wg = C.catalogue_function("wiggle")
    u = C.sample_for_conjugate(wg, 40.0, step=1e-3)
    yn = u.nodes[u.nodes <= 9.5]
    bb = C.biconjugate(u, yn, xb).values
    summary.upper("biconjugate_nonconvex", float(np.max(bb - wg(yn))), 1e-12)


def run_kernel(cfg, out, summary):
    kc = cfg.kernel
    rows = []

    def add(check, n, N, value, bound, ok):
        rows.append((check, n, N, value, bound, "PASS" if ok else "FAIL"))

    a1 = K.kernel_mass(1)
    add("mass", 1, "", a1, math.pi / 2, abs(a1 - math.pi / 2) <= 1e-6)
    summary.upper("kernel_mass_n1", abs(a1 - math.pi / 2), 1e-6)
    a2 = K.kernel_mass(2)
    summary.upper("kernel_mass_n2", abs(a2 - math.pi ** 2 / 4), 1e-6)
    add("mass", 2, "", a2, math.pi ** 2 / 4, abs(a2 - math.pi ** 2 / 4) <= 1e-6)
    for R in (1e2, 1e3, 1e4):
        lo, hi = K.kernel_mass_bracket(R)
        ok = lo <= math.pi / 2 <= hi
        add(f"bracket_R{R:g}", 1, "", lo, hi, ok)
        summary.check(f"kernel_bracket_R{R:g}", lo, hi, ok)

    grid = np.linspace(-100, 100, kc.grid_points)
    for k in range(kc.ch_order + 1):
        meas = float(np.max(np.abs(K.fejer_h_deriv(k, grid))))
        ch = K.estimate_CH(k)
        add("C_H", 1, k, meas, ch, meas <= ch)
        summary.upper(f"kernel_CH_order{k}", meas, ch)

    hv = K.fejer_h(np.linspace(-100, 100, 200001))
    ok = bool(hv.min() >= 0 and hv.max() <= 0.25)
    add("h_range", 1, "", float(hv.max()), 0.25, ok)
    summary.check("kernel_h_range", float(hv.max()), 0.25, ok)

    rng = np.random.default_rng(cfg.seed)
    for n in kc.dims:
        d = rng.standard_normal((kc.samples, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        x = d * (kc.radius * rng.uniform(0, 1, kc.samples) ** (1 / n))[:, None]
        ch = K.estimate_CH(0, n)
        total = 0
        for N in range(kc.n_max + 1):
            err = np.abs(K.remainder_series(N, x, n))
            b = K.remainder_bound(N, x, ch, n)
            viol = int(np.sum(err > b))
            total += viol
            ratio = float(np.max(np.where(b > 0, err / np.where(b > 0, b, 1), 0)))
            add("remainder", n, N, ratio, 1.0, viol == 0)
        summary.upper(f"kernel_remainder_violations_n{n}", total, 0)

    ok_even = ok_nest = True
    for n in kc.dims:
        for N in range(kc.n_max):
            U, V = K.taylor_U(N, n), K.taylor_U(N + 1, n)
            ok_even &= all(a % 2 == 0 for al in U.terms for a in al)
            ok_nest &= all(V.coefficient(al) == c for al, c in U.terms.items())
            ok_nest &= all(sum(al) > N for al in V.terms if al not in U.terms)
    summary.check("kernel_taylor_even", float(ok_even), 1.0, ok_even)
    summary.check("kernel_taylor_nested", float(ok_nest), 1.0, ok_nest)
    out.table("kernel", ["check", "n", "N", "value", "bound", "status"], rows)


def run_approx(cfg, out, summary, pipeline=True):
    ac = cfg.approx
    W = make_weight_family(cfg.weight.as_spec(), 1)
    m = cfg.m

    f1 = make_function(ac.stage1_f, 1)
    rows, vals = [], []
    for nu in ac.nus:
        t0 = time.perf_counter()
        res, tail, _ = A.stage1_error(f1, W, m, nu)
        cert = A.stage1_certificate(f1, W, m, nu)
        vals.append(res.value + tail)
        rows.append((nu, res.value + tail, cert, _seconds(cfg, t0)))
    out.table("stage1", ["parameter", "measured_error", "bound", "seconds"], rows)
    mono = all(b <= a for a, b in zip(vals, vals[1:]))
    summary.check("stage1_nonincreasing", float(mono), 1.0, mono)
    if 6 in ac.nus:
        summary.upper("stage1_nu6", vals[list(ac.nus).index(6)], 1e-6)

    f = make_function(ac.f, 1)
    f_nu = A.stage1_cutoff(f, ac.nu)
    pts = np.linspace(-3, 3, 601)
    probes = [-0.9, -0.5, 0.0, 0.3, 0.77, 1.2]
    rows, errs, worst1, worst2, ident = [], [], 0.0, 0.0, 0.0
    K_num = A.k_num(f_nu, m)
    for lam in ac.lambdas:
        t0 = time.perf_counter()
        g = A.stage2_mollify(f_nu, lam)
        e = A.stage2_error(f_nu, g, m, pts)
        b1, b2 = A.split_bounds(f_nu, lam, m, K_num=K_num)
        i1 = i2 = 0.0
        for x in probes:
            for alpha in [(k,) for k in range(m + 1)]:
                I1, I2 = A.split_error(f_nu, lam, alpha, x)
                d = float(g.deriv(alpha, x)[0] - f_nu.deriv(alpha, x)[0])
                ident = max(ident, abs(I1 + I2 - d))
                i1, i2 = max(i1, abs(I1)), max(i2, abs(I2))
        worst1, worst2 = max(worst1, i1 / b1), max(worst2, i2 / b2)
        errs.append(e)
        rows.append((lam, e, b1 + b2, _seconds(cfg, t0), i1, b1, i2, b2))
    out.table("stage2", ["parameter", "measured_error", "bound", "seconds",
                         "I1", "I1_bound", "I2", "I2_bound"], rows)
    if len(ac.lambdas) >= 2:
        slope = -float(np.polyfit(np.log(ac.lambdas), np.log(errs), 1)[0])
        dec = all(b < a for a, b in zip(errs, errs[1:]))
        summary.check("stage2_rate_exponent", slope, 1 / 3, dec and slope >= 1 / 3)
    summary.upper("stage2_I1_over_bound", worst1, 1.0)
    summary.upper("stage2_I2_over_bound", worst2, 1.0)
    summary.upper("stage2_split_identity", ident, 1e-8)

    t0 = time.perf_counter()
    curve = A.stage3_error_curve(f_nu, ac.lam, m, range(ac.n_min, ac.n_max + 1), W)
    errs = [r.measured for r in curve.reports]
    Ns = [int(r.parameter) for r in curve.reports]
    rows = [(r.parameter, r.measured, r.bound, _seconds(cfg, t0)) for r in curve.reports]
    out.table("stage3", ["parameter", "measured_error", "bound", "seconds"], rows)
    reach = min((N for N, e in zip(Ns, errs) if e <= 1e-4), default=None)
    summary.check("stage3_reaches_1e-4", min(errs), 1e-4, reach is not None and reach <= 30)
    sig = A.ratio_signature(Ns, errs)
    summary.upper("stage3_ratio_loglog_slope", sig.slope, A.RATIO_SLOPE_TOL)
    summary.check("stage3_fitted_C2", curve.C2, math.inf, bool(np.isfinite(curve.C2)))

    if pipeline:
        rows = []
        t0 = time.perf_counter()
        try:
            res = A.pipeline_approximate(f, W, m, ac.eps, nmax=ac.pipeline_nmax)
            reps, final, ok = res.reports, res.final_error, res.final_error <= ac.eps
        except BudgetError as exc:
            reps, final, ok = exc.reports, math.inf, False
        for r in reps:
            rows.append((r.stage, r.parameter, r.measured, r.bound, _seconds(cfg, t0)))
        out.table("pipeline", ["stage", "parameter", "measured_error", "bound", "seconds"], rows)
        summary.check(f"pipeline_{ac.f}_eps{ac.eps:g}", final, ac.eps, ok)


def _functional(spec):
    return DiscreteFunctional(tuple((c, k, a) for c, k, a in spec))


def run_flt(cfg, out, summary):
    fc = cfg.flt
    W = make_weight_family(cfg.weight.as_spec(), 1)
    rect = Rectangle(fc.R, fc.Y, fc.points)
    rows = []
    for i, spec in enumerate(fc.functionals):
        g = flt_transform(_functional(spec))
        for m in fc.m_values:
            r = growth_norm(g, m, W, rect)
            rows.append((i, m, r.value, r.argmax.real, r.argmax.imag, r.verdict))
    out.table("flt", ["functional", "m", "N_m", "attained_re", "attained_im", "verdict"], rows)

    fleet = functional_fleet()
    worst_cf = worst_ct = 0.0
    for F in fleet.values():
        for k in range(7):
            mc = moment_check(F, k)
            worst_cf = max(worst_cf, mc.residual_closed)
            worst_ct = max(worst_ct, mc.residual_contour)
    summary.upper("flt_moment_closed_form", worst_cf, 1e-10)
    summary.upper("flt_moment_contour", worst_ct, 1e-9)

    d0 = growth_norm(flt_transform(fleet["delta0"]), 1, W, rect)
    summary.upper("flt_delta0_norm", abs(d0.value - 1.0), 1e-9)
    grid = np.linspace(-5, 5, 64)
    herm = max(hermitian_residual(flt_transform(F), grid, grid)
               for F in fleet.values() if F.is_real)
    summary.upper("flt_hermitian", herm, 1e-12)
    dv = growth_norm(flt_transform(fleet["d1_at0"]), 0, W, rect)
    summary.check("flt_derivative_m0_divergent", dv.boundary, math.inf, dv.verdict == DIVERGENT)
    d1 = growth_norm(flt_transform(fleet["d1_at0"]), 1, W, rect)
    summary.check("flt_derivative_m1_finite", d1.value, 1.0, d1.verdict == FINITE and d1.value <= 1.0)
    pn = p_space_norm([flt_transform(fleet["delta0"])], 1, make_seq_weights(), W, rect)
    summary.upper("flt_p_norm_delta0", abs(pn - 0.5), 1e-9)


def run_seq(cfg, out, summary):
    sc = cfg.seq
    W = make_weight_family(cfg.weight.as_spec(), 1)
    c = make_seq_weights(sc.kind)
    m = cfg.m
    geo = make_seq_weights("geometric")
    for mm in range(1, 7):
        r = km_sum(geo, mm)
        summary.upper(f"seq_K{mm}", abs(r.value - 1.0), 1e-12)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        km_sum(make_seq_weights("power"), 1)
    flagged = any(issubclass(w.category, DivergenceWarning) for w in caught)
    summary.check("seq_power_weights_flagged", float(flagged), 1.0, flagged)

    rows, running = [], 0.0
    entries = {}
    for k in range(1, sc.depth + 1):
        for name in sc.functions:
            fk = make_function(name, 1)
            q = certified_seminorm(fk, m, m, W)[0].value
            running += c(k, m) * q
            rows.append((k, name, c(k, m), q, c(k, m) * q, running))
        entries[k] = make_function(sc.functions[(k - 1) % len(sc.functions)], 1)
    out.table("seq", ["k", "function", "c_k", "q_m", "product", "running_p_m"], rows)

    worst = 0.0
    for F in functional_fleet().values():
        if F.order > m:
            continue
        for name in cfg.functions:
            u = make_function(name, 1)
            val = abs(F(u))
            b = functional_bound(F, u, m, W)
            if b > 0:
                worst = max(worst, val / b)
            elif val > 0:
                worst = math.inf
    summary.upper("seq_functional_bound_ratio", worst, 1.0)

    seq = FnSequence(entries)
    Fs = {k: functional_fleet()["delta0"] for k in entries}
    full = split_functional(Fs, seq)
    top = max(entries)
    drift = max(abs(split_functional(Fs, seq.truncation(j)) - full) for j in range(top, top + 4))
    summary.upper("seq_truncation_consistency", drift, 0.0)


RUNNERS = {
    "conjugate": run_conjugate,
    "kernel": run_kernel,
    "approx": run_approx,
    "flt": run_flt,
    "seq": run_seq,
}


def run(cfg, out_dir=None, plot_data=False):
    """Run the configured experiments; returns the summary rows."""
    validate(cfg)
    out = Output(out_dir or cfg.output_dir, plot_data)
    summary = Summary()
    for name in cfg.experiments:
        log.info("running %s", name)
        RUNNERS[name](cfg, out, summary)
    out.table("summary", SUMMARY_HEADER, summary.rows)
    return summary.rows


# ---------------------------------------------------------------- argument parsing

def parse_weight(text):
    """``power:a=2`` or ``log_penalty:a=2,coeff=1`` -> mapping."""
    kind, _, rest = text.partition(":")
    spec = {"kind": kind}
    for item in filter(None, rest.split(",")):
        key, _, val = item.partition("=")
        spec[key.strip()] = float(val)
    return spec


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML experiment configuration")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, help="random seed for sample points")
    common.add_argument("--plot-data", action="store_true", help="also write gnuplot .dat files")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="polydense", description=__doc__.splitlines()[0],
                                parents=[common])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("conjugate", parents=[common], help="conjugate oracles and lemma gaps")
    kp = sub.add_parser("kernel", parents=[common], help="kernel invariants")
    kp.add_argument("action", choices=["check"])
    ap = sub.add_parser("approx", parents=[common], help="three-stage approximation")
    ap.add_argument("action", choices=["run"])
    ap.add_argument("--weight", help="weight family, e.g. power:a=2")
    ap.add_argument("--f", help="fleet function")
    ap.add_argument("--m", type=int, help="seminorm index")
    ap.add_argument("--eps", type=float, help="pipeline target")
    ap.add_argument("--nu", type=float, help="cutoff index for stages 2 and 3")
    ap.add_argument("--lambda", dest="lam", type=float, help="kernel scale for stage 3")
    ap.add_argument("--nmax", type=int, help="largest degree")
    sub.add_parser("flt", parents=[common], help="Fourier-Laplace transforms and growth norms")
    sub.add_parser("seq", parents=[common], help="sequence-space seminorms")
    sub.add_parser("suite", parents=[common], help="run every experiment")
    return p


def config_from_args(args):
    cfg = load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.command == "approx":
        if args.weight:
            spec = parse_weight(args.weight)
            cfg.weight.kind = spec.pop("kind")
            cfg.weight.a = spec.get("a", cfg.weight.a)
            cfg.weight.coeff = spec.get("coeff", cfg.weight.coeff)
        if args.f:
            cfg.approx.f = args.f
        if args.m is not None:
            cfg.m = args.m
        if args.eps is not None:
            cfg.approx.eps = args.eps
        if args.nu is not None:
            cfg.approx.nu = args.nu
        if args.lam is not None:
            cfg.approx.lam = args.lam
        if args.nmax is not None:
            cfg.approx.n_max = args.nmax
            cfg.approx.pipeline_nmax = max(cfg.approx.pipeline_nmax, args.nmax)
    if args.command != "suite":
        cfg.experiments = [args.command]
    return validate(cfg)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        rows = run(cfg, args.out, args.plot_data)
    except PolyDenseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    n_pass = sum(r[3] == "PASS" for r in rows)
    print(f"{n_pass} PASS, {len(rows) - n_pass} FAIL")
    return 0


if __name__ == "__main__":
    sys.exit(main())
