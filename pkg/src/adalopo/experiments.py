"""Simulation drivers: curve estimation, Monte Carlo risk, rate fits.

Every report is a pure function of its inputs.  Replication ``i`` of a run
uses the dataset seed ``seed_base + i``; per-replication results are merged
by index, so serial and parallel runs give identical output.

Risks are empirical at one representative regression function (a cusp
``r |x - x0|**s`` or one of the classical benchmark signals), not the
supremum over a smoothness class.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field, replace
import math
from typing import Optional
import warnings

import numpy as np
import scipy.stats

from .bandwidth import build_grid, estimate_sigma, select_bandwidth_symmetric, select_interval
from .rvdesign import DesignSpec, ModulusSpec, RateModel, f_nu_integral, rate_exponent, sample_design, theoretical_rate
from .testbed import DatasetSpec, TargetFunction, eval_target, fmt, synthesize

SELECTORS = ("interval", "symmetric")
SIGMA_MODES = ("known", "estimate")


def default_eval_points(k=300):
    """``j / k`` for ``j = 0..k``."""
    return tuple(j / k for j in range(k + 1))


class FitError(ValueError):
    """Rate fit preconditions not met."""


@dataclass(frozen=True)
class RunConfig:
    """Dataset, estimator parameters and evaluation points of one study.

    ``seed_base`` defaults to the dataset seed.  ``sigma`` selects the
    noise level handed to the selector: the true one (``known``) or the
    successive-difference estimate (``estimate``).
    """

    dataset: DatasetSpec
    selector: str = "interval"
    kappa: int = 2
    a: float = 1.05
    m: int = 25
    grid: str = "geom"
    p: float = 2.0
    sigma: str = "estimate"
    literal_threshold: bool = False
    eval_points: tuple = field(default_factory=default_eval_points)
    replications: int = 1
    seed_base: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "eval_points", tuple(float(x) for x in self.eval_points))
        if any(not 0.0 <= x <= 1.0 for x in self.eval_points):
            raise ValueError("eval points must lie in [0, 1]")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.selector not in SELECTORS:
            raise ValueError(f"unknown selector {self.selector!r}")
        if self.sigma not in SIGMA_MODES:
            raise ValueError(f"unknown sigma mode {self.sigma!r}")
        if self.grid not in ("arith", "geom"):
            raise ValueError(f"unknown grid kind {self.grid!r}")
        if not self.p >= 1.0:
            raise ValueError("p must be >= 1")

    @property
    def base(self):
        return self.dataset.seed if self.seed_base is None else self.seed_base

    def dataset_for(self, i):
        return replace(self.dataset, seed=self.base + i)


@dataclass
class CurveRow:
    replication: int
    seed: int
    x: float
    estimate: float
    truth: float
    window_lo: float
    window_hi: float
    count: int
    tested: int
    admissible: bool
    sigma_used: float
    error: str = ""

    @property
    def ok(self):
        return not self.error


CURVE_COLUMNS = (
    "replication",
    "seed",
    "x",
    "estimate",
    "truth",
    "window_lo",
    "window_hi",
    "count",
    "tested",
    "admissible",
    "sigma_used",
    "error",
)


def _sigma_for(config, data):
    if config.sigma == "known":
        return float(data.sigma)
    return estimate_sigma(data)


def estimate_point(config, data, x, sigma):
    """Run the configured selector at ``x``; returns the selection result."""
    if config.selector == "interval":
        return select_interval(data, x, config.kappa, config.a, config.m, sigma, config.literal_threshold)
    grid = build_grid(data, x, config.grid, config.a)
    return select_bandwidth_symmetric(data, x, config.kappa, config.p, grid, sigma)


def curve_for_dataset(config, data, replication=0):
    """Rows for every evaluation point on one dataset.

    Failures at a point are recorded in the row's ``error`` field.
    """
    sigma = _sigma_for(config, data)
    truth = np.atleast_1d(eval_target(config.dataset.target, np.asarray(config.eval_points)))
    rows = []
    for x, fx in zip(config.eval_points, truth):
        try:
            res = estimate_point(config, data, x, sigma)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            rows.append(
                CurveRow(replication, data.seed, x, math.nan, float(fx), math.nan, math.nan, 0, 0, False, sigma, f"{type(exc).__name__}: {exc}")
            )
            continue
        lo, hi = res.window.bounds
        rows.append(
            CurveRow(replication, data.seed, x, res.estimate, float(fx), lo, hi, res.fit.count, res.tested, res.admissible, sigma)
        )
    return rows


def _curve_job(args):
    config, i = args
    return curve_for_dataset(config, synthesize(config.dataset_for(i)), i)


def _map(fn, items, jobs):
    """Ordered map, serial for ``jobs <= 1``."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def run_curve(config, jobs=1):
    """Estimate at every evaluation point for each replication's dataset."""
    out = []
    for rows in _map(_curve_job, [(config, i) for i in range(config.replications)], jobs):
        out.extend(rows)
    return out


@dataclass
class RiskReport:
    """Empirical risk ``(mean |f_hat(x) - f(x)|**p)**(1/p)`` and rate fits.

    ``contributions[i, k]`` is ``|f_hat - f|**p`` of replication ``i`` at
    point ``k``.  ``table`` maps ``n`` to the risk at the first evaluation
    point when a rate study was run.
    """

    eval_points: tuple
    risk: np.ndarray
    p: float
    replications: int
    contributions: np.ndarray = field(repr=False)
    failures: int = 0
    table: dict = field(default_factory=dict)
    slope: Optional[float] = None
    stderr: Optional[float] = None
    theoretical: Optional[float] = None
    header: str = ""


def _risk_job(args):
    config, truth, i = args
    rows = curve_for_dataset(config, synthesize(config.dataset_for(i)), i)
    est = np.array([r.estimate for r in rows])
    return np.abs(est - truth) ** config.p


def _fsum_columns(c):
    return np.array([math.fsum(col) for col in c.T]) if c.size else np.zeros(c.shape[1])


def monte_carlo_risk(config, truth=None, jobs=1):
    """Empirical ``p``-risk at each evaluation point over the replications.

    Column sums are exactly rounded, so the report does not depend on the
    order in which replications finish.  Points where a replication failed
    have risk ``nan``.
    """
    if config.replications < 2:
        raise ValueError("need at least 2 replications")
    pts = np.asarray(config.eval_points)
    if truth is None:
        truth = np.atleast_1d(eval_target(config.dataset.target, pts))
    truth = np.asarray(truth, dtype=float)
    if truth.shape != pts.shape:
        raise ValueError("truth must have one value per evaluation point")
    parts = _map(_risk_job, [(config, truth, i) for i in range(config.replications)], jobs)
    contrib = np.vstack(parts) if parts else np.zeros((0, pts.size))
    failures = int(np.sum(~np.isfinite(contrib)))
    risk = (_fsum_columns(contrib) / config.replications) ** (1.0 / config.p)
    return RiskReport(
        config.eval_points,
        risk,
        config.p,
        config.replications,
        contrib,
        failures,
        header=f"empirical risk at representative target {config.dataset.target.label()}",
    )


def rate_exponent_fit(n_values, risks, use_log_n=True):
    """OLS slope of ``log risk`` on ``log(log n / n)`` (or ``log(1/n)``).

    Returns
    -------
    (slope, stderr)

    Raises
    ------
    FitError
        Fewer than 4 distinct ``n`` (after dropping zero risks) or a span
        below one decade.
    """
    n = np.asarray(n_values, dtype=float)
    r = np.asarray(risks, dtype=float)
    if n.shape != r.shape:
        raise FitError("n_values and risks differ in length")
    keep = np.isfinite(r) & (r > 0.0)
    if not np.all(keep):
        warnings.warn(f"dropping {int(np.sum(~keep))} zero or non-finite risks from the fit", stacklevel=2)
    n, r = n[keep], r[keep]
    if np.unique(n).size < 4:
        raise FitError("rate fit needs at least 4 distinct values of n")
    if np.any(n <= 1.0):
        raise FitError("n must be > 1")
    if n.max() / n.min() < 10.0:
        raise FitError("n values must span at least one decade")
    xreg = np.log(np.log(n) / n) if use_log_n else -np.log(n)
    fit = scipy.stats.linregress(xreg, np.log(r))
    return float(fit.slope), float(fit.stderr)


def rate_study(config, n_values, s, jobs=1, use_log_n=True):
    """Risk at the first evaluation point for each ``n`` plus the slope fit.

    ``s`` is the smoothness of the representative target; the theoretical
    exponent uses the design index of ``config.dataset.design``.
    """
    table = {}
    last = None
    for n in n_values:
        cfg = replace(config, dataset=replace(config.dataset, n=int(n)))
        last = monte_carlo_risk(cfg, jobs=jobs)
        table[int(n)] = float(last.risk[0])
    slope, se = rate_exponent_fit(list(table), list(table.values()), use_log_n)
    beta = config.dataset.design.beta if config.dataset.design.kind != "uniform" else 0.0
    return RiskReport(
        config.eval_points[:1],
        np.array(list(table.values())),
        config.p,
        config.replications,
        np.zeros((0, 0)),
        0 if last is None else last.failures,
        table,
        slope,
        se,
        rate_exponent(s, beta),
        header=f"empirical risk at representative target {config.dataset.target.label()}",
    )


@dataclass
class ConcentrationRow:
    eps: float
    exceedance: float
    bound: float
    stderr: float
    expected_count: float

    @property
    def ok(self):
        return self.exceedance <= self.bound + 3.0 * self.stderr


def bernstein_bound(eps, n, f_h):
    """``2 exp(-eps**2 / (1 + eps/3) n F(h))``, capped at 1."""
    if math.isinf(eps):
        return 0.0
    return min(1.0, 2.0 * math.exp(-(eps**2) / (1.0 + eps / 3.0) * n * f_h))


def window_counts(design, h, n, replications, seed):
    """``N_{n,h}`` for datasets drawn with seeds ``seed .. seed + R - 1``."""
    lo, hi = design.x0 - h, design.x0 + h
    out = np.empty(replications, dtype=np.int64)
    for i in range(replications):
        xs = sample_design(design, n, seed + i)
        out[i] = np.searchsorted(xs, hi, side="right") - np.searchsorted(xs, lo, side="left")
    return out


def concentration_check(design, h, n, replications, seed, eps=(0.1, 0.2, 0.5)):
    """Empirical frequency of ``|N_h / (2 n F(h)) - 1| > eps`` against Bernstein.

    The binomial standard error is ``sqrt(b (1 - b) / R)`` at the bound
    ``b``, the largest exceedance probability the bound allows.
    """
    f_h = f_nu_integral(design, h)
    if n * f_h < 1.0:
        raise ValueError("need n F(h) >= 1")
    if replications < 1:
        raise ValueError("replications must be >= 1")
    counts = window_counts(design, h, n, replications, seed)
    mean = 2.0 * n * f_h
    dev = np.abs(counts / mean - 1.0)
    rows = []
    for e in eps:
        b = bernstein_bound(e, n, f_h)
        freq = float(np.mean(dev > e))
        rows.append(ConcentrationRow(float(e), freq, b, math.sqrt(b * (1.0 - b) / replications), mean))
    return rows


@dataclass
class GapRow:
    cls: int
    s: float
    r: float
    n: int
    risk: float
    psi: float
    rate: float

    @property
    def over_psi(self):
        return self.risk / self.psi if self.psi > 0.0 else math.nan

    @property
    def over_rate(self):
        return self.risk / self.rate if self.rate > 0.0 else math.nan


def adaptation_gap_report(
    s1,
    r1,
    s2,
    r2,
    design,
    n_values,
    sigma=1.0,
    replications=200,
    seed_base=0,
    kappa=1,
    a=1.05,
    p=2.0,
    jobs=1,
):
    """Risk of the adaptive estimator at one cusp per class, normalized two ways.

    Class ``i`` is represented by ``r_i |x - x0|**s_i``.  Each risk is
    divided by the minimax rate ``psi_{n,i}`` (balance without ``log n``)
    and by the adaptive rate ``r_{n,i}`` (balance with ``log n``).  The
    symmetric selector runs with the true ``sigma``.  With ``sigma = 0``
    both rates vanish and the normalized columns are ``nan``.
    """
    if not (s1 <= s2 and r2 <= r1):
        raise ValueError("need s1 <= s2 and r2 <= r1")
    x0 = design.x0
    rows = []
    for cls, (s, r) in enumerate(((s1, r1), (s2, r2)), 1):
        target = TargetFunction.cusp(s, x0, r)
        model = RateModel(ModulusSpec(s, r), design, sigma) if sigma > 0.0 else None
        for n in n_values:
            ds = DatasetSpec(target, design, int(n), seed=seed_base, noise_sd=sigma)
            cfg = RunConfig(
                ds, "symmetric", kappa, a, grid="geom", p=p, sigma="known", eval_points=(x0,), replications=replications
            )
            risk = float(monte_carlo_risk(cfg, jobs=jobs).risk[0])
            psi = theoretical_rate(model, n, adaptive=False) if model else 0.0
            rate = theoretical_rate(model, n, adaptive=True) if model else 0.0
            rows.append(GapRow(cls, s, r, int(n), risk, psi, rate))
    return rows


# -- CSV reports ------------------------------------------------------------


def _cell(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return str(v)


def _write(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def write_curve_csv(rows, path):
    _write(path, CURVE_COLUMNS, ([getattr(r, c) for c in CURVE_COLUMNS] for r in rows))


RISK_COLUMNS = ("x", "risk", "p", "replications")


def write_risk_csv(report, path):
    _write(path, RISK_COLUMNS, ((x, v, report.p, report.replications) for x, v in zip(report.eval_points, report.risk)))


RATE_COLUMNS = ("n", "risk", "slope", "stderr", "theoretical")


def write_rate_csv(report, path):
    _write(
        path,
        RATE_COLUMNS,
        ((n, v, report.slope, report.stderr, report.theoretical) for n, v in report.table.items()),
    )


CONCENTRATION_COLUMNS = ("eps", "exceedance", "bound", "stderr", "expected_count", "ok")


def write_concentration_csv(rows, path):
    _write(path, CONCENTRATION_COLUMNS, ((r.eps, r.exceedance, r.bound, r.stderr, r.expected_count, r.ok) for r in rows))


GAP_COLUMNS = ("class", "s", "r", "n", "risk", "psi", "rate", "risk_over_psi", "risk_over_rate")


def write_gap_csv(rows, path):
    _write(path, GAP_COLUMNS, ((g.cls, g.s, g.r, g.n, g.risk, g.psi, g.rate, g.over_psi, g.over_rate) for g in rows))
