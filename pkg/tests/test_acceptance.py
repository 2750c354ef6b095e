"""End-to-end acceptance criteria, one test each, with their runtime budgets.

Every test appends a one-line PASS/FAIL verdict that the conftest prints in
the terminal summary.
"""
import csv
import io
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from depthsep.experiment import CSV_COLUMNS, TrainConfig, sweep_csv, train_two_layer, width_sweep
from depthsep.hardfn import default_N
from depthsep.netbuild import RELU, build_prop_approx, build_univariate_relu, eval_three_layer, prop_approx_width_bound
from depthsep.radial import build_density, indicator, radial_integrate
from depthsep.specfun import bessel_j_series_mp, krasikov_approx
from depthsep.verify import (
    SuiteConfig, SuiteContext, check_besbound, check_besind, check_lipapprox, check_lipmag,
    check_nothinsh, check_prop_approx, check_rd_bounds, reports_to_csv, run_suite,
)

pytestmark = pytest.mark.slow


def record(k, ok, seconds, budget, detail):
    ok_time = seconds < budget
    verdict = "PASS" if ok and ok_time else "FAIL"
    line = f"ACCEPTANCE {k}: {verdict}  {detail}  [{seconds:.1f} s / budget {budget:g} s]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line
    assert ok_time, line


def test_01_rd_bounds():
    t0 = time.perf_counter()
    rep = check_rd_bounds(200)
    record(1, rep.verdict == "hard_pass", time.perf_counter() - t0, 1,
           f"min margin {rep.margin:.3g} over d=1..200")


def test_02_bessel_magnitude_lipschitz():
    t0 = time.perf_counter()
    rep = check_lipmag(20.0, 100.0, 0.01)
    record(2, rep.verdict == "hard_pass", time.perf_counter() - t0, 30, rep.notes)


def test_03_krasikov_envelope():
    t0 = time.perf_counter()
    worst, points = -math.inf, 0
    for d in range(2, 21):
        lo, hi = max(d, 30), 10 * d
        if lo > hi:
            continue
        x = np.arange(lo, hi + 1e-9, 0.5)   # ~12 points per period 2 pi
        ref = np.array([bessel_j_series_mp(d / 2, v) for v in x])
        excess = np.abs(ref - krasikov_approx(d, x)) - (x ** -1.5 + 1e-9)
        worst = max(worst, float(excess.max()))
        points += x.size
    record(3, worst <= 0, time.perf_counter() - t0, 30,
           f"{points} grid points; max(|series-asym| - envelope) = {worst:.3g}")


def test_04_besbound():
    t0 = time.perf_counter()
    rep = check_besbound(range(2, 11), 20000, 10.0)
    record(4, rep.verdict == "hard_pass", time.perf_counter() - t0, 10, rep.notes)


def test_05_besind():
    t0 = time.perf_counter()
    reps = [check_besind(d, b, 1e-4) for d, b in [(2, 64.0), (4, 32.0), (2, 128.0)]]
    detail = "; ".join(f"(d={r.params['d']},beta={r.params['beta']:g}) {r.measured:.3g} >= {r.bound:.3g}"
                       for r in reps)
    record(5, all(r.verdict == "hard_pass" for r in reps), time.perf_counter() - t0, 30, detail)


def test_06_density_normalization():
    t0 = time.perf_counter()
    sums = {}
    for d in (2, 3, 4, 6):
        dens = build_density(d, 1e-3)
        mass = radial_integrate(indicator(0.0, dens.r_max), "phi_squared", d)
        sums[d] = mass + dens.tail_bound
    ok = all(0.999 <= s <= 1.001 for s in sums.values())
    record(6, ok, time.perf_counter() - t0, 60,
           "mass+tail " + ", ".join(f"d={d}: {s:.6f}" for d, s in sums.items()))


def test_07_nothinsh(default_ctx):
    fam = default_ctx.ctx.family
    assert fam.N == default_N(4, 25.0) == math.ceil(100 * 25 * 4 ** 1.5)
    t0 = time.perf_counter()
    sp = default_ctx.timed("spectra")
    rep = check_nothinsh(fam, sp)
    # the spectra may have been built (and timed) by an earlier test
    seconds = max(default_ctx.seconds["spectra"], time.perf_counter() - t0)
    record(7, rep.verdict == "hard_pass", seconds, 900,
           f"max low/total = {rep.measured:.4g} <= 0.5 over {fam.good.sum()} good intervals")


def test_08_lipapprox(default_ctx):
    t0 = time.perf_counter()
    h = default_ctx.timed("hard")
    rep = check_lipapprox(h, default_ctx.ctx.spec_1d)
    seconds = time.perf_counter() - t0
    record(8, rep.verdict == "hard_pass" and rep.bound == pytest.approx(2.4e-3), seconds, 300,
           f"gap {rep.measured:.4g} <= {rep.bound:.4g}")


def test_09_univariate_builder():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240909)
    failures = 0
    for _ in range(100):
        L, R, delta = rng.uniform(0.1, 20), rng.uniform(0.1, 20), rng.uniform(0.01, 1)
        k = int(rng.integers(2, 12))
        xs = np.sort(rng.uniform(-R, R, k))
        xs[0], xs[-1] = -R, R
        ys = np.concatenate([[0.0], np.cumsum(rng.uniform(-L, L, k - 1) * np.diff(xs))])
        f = lambda x, xs=xs, ys=ys: np.interp(x, xs, ys)
        h = build_univariate_relu(f, L, R, delta)
        grid = np.linspace(-1.5 * R - 1, 1.5 * R + 1, 10_000)
        ok = (np.max(np.abs(f(grid) - h(grid))) <= delta and h.width <= 3 * R * L / delta
              and (h.width == 0 or np.max(np.abs(h.alpha)) <= 2 * L))
        failures += not ok
    record(9, failures == 0, time.perf_counter() - t0, 60, f"{failures} failures in 100 cases")


def test_10_prop_approx(default_ctx):
    t0 = time.perf_counter()
    default_ctx.timed("spectra")
    h = default_ctx.timed("hard")
    ctx = default_ctx.ctx
    net = build_prop_approx(h, 0.05, RELU)
    rep = check_prop_approx(h, RELU, 0.05, 100_000, 0, ctx.density(4), ctx.spec_1d, net)
    pts = np.random.default_rng(1).standard_normal((20_000, 4))
    pts *= (np.random.default_rng(2).uniform(0, 300, 20_000) / np.linalg.norm(pts, axis=1))[:, None]
    in_range = bool(np.all(np.abs(eval_three_layer(net, pts)) <= 2))
    wbound = prop_approx_width_bound(RELU.c_sigma, 25.0, h.family.N, 4, 0.05)
    bound = math.sqrt(3) / (25 * 4 ** 0.25) + 0.05
    seconds = default_ctx.seconds["spectra"] + time.perf_counter() - t0
    ok = rep.verdict == "hard_pass" and net.width <= wbound and in_range and rep.measured <= bound
    record(10, ok, seconds, 600,
           f"L2(mu) distance {rep.measured:.4g} <= {bound:.4g}; width {net.width} <= {wbound:.3g}; "
           f"range ok {in_range}")


def test_11_fgg_identity(default_ctx):
    t0 = time.perf_counter()
    reps = run_suite(SuiteConfig(), only=["fgg_identity"], ctx=default_ctx.ctx)
    detail = "; ".join(f"{r.params['pair']}: gap {r.measured:.3g} <= {r.bound:.3g}" for r in reps)
    record(11, len(reps) == 3 and all(r.verdict == "hard_pass" for r in reps),
           time.perf_counter() - t0, 120, detail)


def test_12_informational_margins(default_ctx):
    t0 = time.perf_counter()
    default_ctx.timed("spectra")
    reps = run_suite(SuiteConfig(), only=["flat", "nothinsh2", "bigmass", "signschoice"],
                     ctx=default_ctx.ctx)
    rows = list(csv.DictReader(io.StringIO(reports_to_csv(reps))))
    ids = sorted(r["lemma_id"] for r in rows)
    finite = all(math.isfinite(float(r["margin"])) for r in rows)
    ok = ids == ["bigmass", "flat", "nothinsh2", "signschoice"] and finite
    detail = "; ".join(f"{r['lemma_id']} margin {float(r['margin']):+.3g} ({r['verdict']})" for r in rows)
    record(12, ok, time.perf_counter() - t0, 600, detail)


def test_13_experiment():
    t0 = time.perf_counter()
    ctx = SuiteContext(SuiteConfig(d=3))
    net = build_prop_approx(ctx.hard, 0.05, RELU)
    target = lambda X: eval_three_layer(net, X)
    cfg = TrainConfig(d=3, seed=0)
    density = build_density(3, cfg.tail_tol)
    widths = [1, 2, 4, 8, 16]
    texts = []
    for _ in range(2):
        rows, meta = width_sweep(target, widths, cfg, density)
        texts.append(sweep_csv(rows, cfg, meta, "net"))
    body = [l for l in texts[0].splitlines() if not l.startswith("#")]
    parsed = list(csv.DictReader(io.StringIO("\n".join(body))))
    schema = (tuple(parsed[0].keys()) == CSV_COLUMNS
              and [int(r["width"]) for r in parsed] == widths
              and all(float(r["eval_error"]) >= 0 for r in parsed))
    identical = texts[0] == texts[1]
    w = np.array([0.5, -0.6, 0.62])
    unit = lambda X: np.maximum(X @ w + 0.2, 0.0)
    _, row = train_two_layer(unit, TrainConfig(d=3, width=1, seed=0), density)
    realizable = row.eval_l2mu_error <= 1e-3
    errs = ", ".join(f"{r['width']}:{float(r['eval_error']):.4g}" for r in parsed)
    record(13, schema and identical and realizable, time.perf_counter() - t0, 1800,
           f"schema {schema}; byte-identical {identical}; realizable error {row.eval_l2mu_error:.3g}; "
           f"sweep errors {errs}")
