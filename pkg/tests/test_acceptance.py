"""End-to-end acceptance checks, one test per criterion.

Each test appends a single ``acceptance N: PASS|FAIL ...`` line that the
terminal summary prints in order.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

import conftest
from adalopo import experiments as ex
from adalopo.bandwidth import estimate_sigma, select_bandwidth_symmetric, select_interval, build_grid
from adalopo.linalg import smallest_eigenvalue
from adalopo.locpoly import SampleSet, Symmetric, build_gram, fit_local, normalized_gram
from adalopo.rvdesign import DesignSpec, ModulusSpec, RateModel, deterministic_bandwidth, limit_matrix, sample_design
from adalopo.testbed import DatasetSpec, TargetFunction, sd_grid, synthesize
from oracles import exhaustive_interval, exhaustive_symmetric

DESIGNS = {
    "uniform": DesignSpec.uniform(0.5),
    "power(1)": DesignSpec.power(0.5, 1.0),
    "power(-0.5)": DesignSpec.power(0.5, -0.5),
}
CUSP = TargetFunction.cusp(1.0, 0.5, 1.0)
CUSP_SIGMA = sd_grid(CUSP) / 7.0


def report(k, ok, detail):
    conftest.ACCEPTANCE_LINES.append(f"acceptance {k}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def cusp_run(n, beta, reps, **kw):
    ds = DatasetSpec(CUSP, DesignSpec.power(0.5, beta), n, noise_sd=CUSP_SIGMA)
    return ex.RunConfig(
        ds, selector="symmetric", kappa=1, grid="geom", a=1.05, p=2.0, sigma="known", eval_points=(0.5,), replications=reps, **kw
    )


def test_acceptance_1_polynomial_reproduction():
    worst, slowest, rows = 0.0, 0.0, 0
    coeffs = {0: [0.7], 1: [0.7, -1.3], 2: [0.7, -1.3, 2.1]}
    for kappa, c in coeffs.items():
        for seed, design in enumerate(DESIGNS.values()):
            ds = DatasetSpec(TargetFunction.polynomial(c, 0.5), design, 500, rsnr=math.inf, seed=seed)
            t0 = time.perf_counter()
            out = ex.run_curve(ex.RunConfig(ds, kappa=kappa))
            slowest = max(slowest, time.perf_counter() - t0)
            rows += len(out)
            worst = max([worst] + [abs(r.estimate - r.truth) for r in out])
    ok = worst <= 1e-8 and rows == 9 * 301 and slowest < 10.0
    report(1, ok, f"max error {worst:.2e} over {rows} points, slowest curve {slowest:.2f}s")


def test_acceptance_2_ridge_floor():
    rng = np.random.default_rng(20240501)
    worst = math.inf
    for _ in range(10_000):
        kappa = int(rng.integers(0, 4))
        n = int(rng.integers(1, kappa + 4))
        scale = 10.0 ** rng.uniform(-6, 0)
        xs = 0.5 + scale * rng.uniform(-1, 1, n)
        if rng.random() < 0.3:
            xs[:] = xs[0]  # coincident points
        data = SampleSet.from_unsorted(xs, rng.standard_normal(n))
        fit = fit_local(data, Symmetric(0.5, scale), kappa)
        margin = smallest_eigenvalue(fit.matrix) - fit.count**-0.5
        worst = min(worst, margin)
    report(2, worst >= -1e-12, f"min(lambda - N^-1/2) = {worst:.3e} over 10^4 windows")


def test_acceptance_3_limit_matrix():
    t0 = time.perf_counter()
    worst_entry, worst_lam = 0.0, 0.0
    for beta in (-0.5, 1.0):
        design = DesignSpec.power(0.5, beta)
        h = deterministic_bandwidth(RateModel(ModulusSpec(1.0, 1.0), design, 1.0), 1e5)
        xs = sample_design(design, 100_000, 3)
        data = SampleSet.from_unsorted(xs, np.zeros(xs.size))
        g = normalized_gram(data, Symmetric(0.5, h), 2)
        lim = limit_matrix(2, beta)
        worst_entry = max(worst_entry, float(np.max(np.abs(g - lim.entries))))
        worst_lam = max(worst_lam, abs(smallest_eigenvalue(g) - lim.lambda_min))
    dt = time.perf_counter() - t0
    ok = worst_entry <= 0.05 and worst_lam <= 0.05 and dt < 30
    report(3, ok, f"max entry gap {worst_entry:.4f}, eigenvalue gap {worst_lam:.4f}, {dt:.1f}s")


def test_acceptance_4_noise_estimator():
    t0 = time.perf_counter()
    ratios = []
    for seed in range(200):
        data = synthesize(DatasetSpec(TargetFunction("heavysine"), n=2000, rsnr=7.0, seed=seed))
        ratios.append(estimate_sigma(data) / data.sigma)
    ratios = np.array(ratios)
    frac = float(np.mean((ratios >= 0.93) & (ratios <= 1.07)))
    dt = time.perf_counter() - t0
    report(4, frac >= 0.9 and dt < 20, f"{frac:.1%} of seeds within [0.93, 1.07], {dt:.1f}s")


def test_acceptance_5_rate_exponent():
    t0 = time.perf_counter()
    rep = ex.rate_study(cusp_run(500, 1.0, 200), [500, 1000, 2000, 4000, 8000, 16000], 1.0, jobs=2)
    dt = time.perf_counter() - t0
    ok = abs(rep.slope - 0.25) <= 0.15 and dt < 600
    report(5, ok, f"slope {rep.slope:.3f} +- {rep.stderr:.3f} (target 0.25 +- 0.15), {dt:.0f}s")


def test_acceptance_6_design_sensitivity():
    pole = ex.monte_carlo_risk(cusp_run(2000, -0.5, 200))
    valley = ex.monte_carlo_risk(cusp_run(2000, 1.0, 200))
    d = valley.contributions[:, 0] - pole.contributions[:, 0]
    z = float(d.mean() / (d.std(ddof=1) / math.sqrt(d.size)))
    ok = pole.risk[0] < valley.risk[0] and z > stats.norm.ppf(0.95)
    report(6, ok, f"risk beta=-0.5 {pole.risk[0]:.4g} < beta=1 {valley.risk[0]:.4g}, paired z = {z:.2f}")


def test_acceptance_7_concentration():
    rows = ex.concentration_check(DesignSpec.power(0.5, 1.0), 0.1, 10_000, 1000, 0)
    ok = [r.eps for r in rows] == [0.1, 0.2, 0.5] and all(r.ok for r in rows)
    detail = ", ".join(f"eps {r.eps:g}: {r.exceedance:.3f} <= {r.bound:.3f}+3*{r.stderr:.3f}" for r in rows)
    report(7, ok, detail)


def test_acceptance_8_adaptation_gap():
    rows = ex.adaptation_gap_report(
        1.0, 1.0, 2.0, 1.0, DesignSpec.uniform(0.5), [1000, 4000, 16000, 64000], sigma=CUSP_SIGMA, replications=200
    )
    first = [g for g in rows if g.cls == 1]
    psi = [g.over_psi for g in first]
    rate = [g.over_rate for g in first]
    increasing = all(b > a for a, b in zip(psi, psi[1:]))
    spread = max(rate) / min(rate)
    report(8, increasing and spread < 2.0, f"risk/psi {['%.3g' % v for v in psi]}, risk/rate spread x{spread:.2f}")


def test_acceptance_9_benchmark_signals():
    times = {}
    heavy = None
    for name in ("blocks", "bumps", "heavysine", "doppler"):
        cfg = ex.RunConfig(DatasetSpec(TargetFunction(name), n=2000, rsnr=7.0, seed=0))
        t0 = time.perf_counter()
        rows = ex.run_curve(cfg)
        times[name] = time.perf_counter() - t0
        assert len(rows) == 301 and all(r.ok for r in rows)
        if name == "heavysine":
            heavy = rows
    errs = np.array([abs(r.estimate - r.truth) for r in heavy])
    xs = np.array([r.x for r in heavy])
    top2 = xs[np.argsort(-errs, kind="stable")[:2]]
    near = all(min(abs(x - 0.3), abs(x - 0.72)) <= 0.02 for x in top2)
    fast = max(times.values()) < 5.0
    detail = f"slowest curve {max(times.values()):.2f}s, heavysine largest errors at x = {top2[0]:.4f}, {top2[1]:.4f}"
    report(9, near and fast, detail)


def test_acceptance_10_oracle_equivalence():
    rng = np.random.default_rng(99)
    agree = 0
    for inst in range(50):
        n = int(rng.integers(8, 41))
        kappa = int(rng.integers(0, 3))
        xs = np.sort(rng.uniform(0, 1, n))
        ys = np.sin(6 * xs) + (0.3 * rng.standard_normal(n) if inst % 3 else 0.0)
        data = SampleSet(xs, ys)
        x0 = float(rng.uniform(0.1, 0.9))
        a = float(rng.choice([1.1, 1.3, 2.0]))
        sigma = float(rng.choice([0.05, 0.3, 1.0]))
        grid = build_grid(data, x0, "geom", a)
        sym = select_bandwidth_symmetric(data, x0, kappa, 2.0, grid, sigma)
        h_ref, adm_ref = exhaustive_symmetric(list(xs), list(ys), x0, kappa, 2.0, "geom", a, sigma)
        m = min(n, kappa + 1 + int(rng.integers(0, 4)))
        itv = select_interval(data, x0, kappa, a, m, sigma)
        box_ref, iadm_ref = exhaustive_interval(list(xs), list(ys), x0, kappa, a, m, sigma)
        same_sym = sym.window.h == h_ref and sym.admissible == adm_ref
        same_itv = (itv.window.lo, itv.window.hi) == box_ref and itv.admissible == iadm_ref
        agree += same_sym and same_itv
    report(10, agree == 50, f"{agree}/50 instances agree for both selectors")
