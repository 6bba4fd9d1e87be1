"""Command-line front end.

Subcommands ``synth | estimate | risk | rate | concentration | gap``.
Parameter values come from, in decreasing priority: command-line flags, a
``key = value`` config file given by ``--config`` (keys are flag names
without the leading dashes, ``-`` or ``_`` both accepted), and built-in
defaults.  ``ADALOPO_SEED`` supplies the seed when neither flag nor config
sets it.
"""

import argparse
from dataclasses import dataclass, field
import math
import os
import sys
import tempfile

from . import experiments as ex
from .rvdesign import DesignSpec
from .testbed import DatasetSpec, TargetFunction, read_dataset, read_keyvalue, synthesize, write_dataset, write_keyvalue

SUBCOMMANDS = ("synth", "estimate", "risk", "rate", "concentration", "gap")
TARGETS = ("blocks", "bumps", "heavysine", "doppler", "cusp", "polynomial")


def _int_list(s):
    return tuple(int(float(v)) for v in str(s).split(",") if v.strip())


def _float_list(s):
    return tuple(float(v) for v in str(s).split(",") if v.strip())


def _flag(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# name: (type, default, help)
OPTIONS = {
    "target": (str, "heavysine", "regression function: " + ", ".join(TARGETS)),
    "s": (float, 1.0, "cusp exponent for --target cusp, and the smoothness used by rate"),
    "r": (float, 1.0, "cusp radius for --target cusp"),
    "coeffs": (_float_list, (0.0, 1.0), "polynomial coefficients about --design-x0, comma separated"),
    "design-beta": (float, 0.0, "design index beta > -1 at --design-x0; 0 is the uniform design"),
    "design-x0": (float, 0.5, "design reference point x0 in [0, 1]"),
    "n": (int, 2000, "sample size"),
    "rsnr": (float, 7.0, "root signal-to-noise ratio sd(f) / sigma; inf for noiseless data"),
    "noise-sd": (float, None, "explicit noise level, overrides --rsnr"),
    "seed": (int, 0, "dataset seed (replication i uses seed + i); falls back to ADALOPO_SEED"),
    "selector": (str, "interval", "interval or symmetric"),
    "kappa": (int, 2, "local polynomial degree"),
    "a": (float, 1.05, "grid growth factor"),
    "m": (int, 25, "seed block size of the interval selector"),
    "p": (float, 2.0, "loss exponent (threshold constant and risk)"),
    "grid": (str, "geom", "grid of the symmetric selector: arith or geom"),
    "sigma": (str, "estimate", "noise level given to the selector: known or estimate"),
    "paper-literal-threshold": (_flag, False, "leave the second interval threshold term unscaled by sigma"),
    "eval-grid": (int, 300, "evaluate at j / K for j = 0..K"),
    "replications": (int, None, "replications (default 1 for estimate, 200 otherwise)"),
    "jobs": (int, 1, "worker processes for replications"),
    "out": (str, ".", "output directory"),
    "input": (str, None, "estimate: read the dataset from this CSV instead of synthesizing"),
    "n-values": (_int_list, (500, 1000, 2000, 4000, 8000, 16000), "rate: sample sizes"),
    "h": (float, 0.1, "concentration: window radius"),
    "eps": (_float_list, (0.1, 0.2, 0.5), "concentration: relative deviations"),
    "s1": (float, 1.0, "gap: smoothness of class 1"),
    "s2": (float, 2.0, "gap: smoothness of class 2"),
    "r1": (float, 1.0, "gap: radius of class 1"),
    "r2": (float, 1.0, "gap: radius of class 2"),
}

CHOICES = {
    "target": TARGETS,
    "selector": ex.SELECTORS,
    "grid": ("arith", "geom"),
    "sigma": ex.SIGMA_MODES,
}


class UsageError(ValueError):
    pass


@dataclass
class CliConfig:
    subcommand: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key.replace("-", "_")]


def _dest(name):
    return name.replace("-", "_")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="adalopo",
        description="Design-adaptive local polynomial estimation and simulation studies.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", metavar="FILE", help="key = value file; flags take precedence")
    for name, (typ, default, text) in OPTIONS.items():
        kw = dict(dest=_dest(name), default=argparse.SUPPRESS, help=f"{text} (default: {_show(default)})")
        if name == "paper-literal-threshold":
            parser.add_argument("--" + name, action="store_const", const=True, **kw)
            continue
        if name in CHOICES:
            kw["choices"] = CHOICES[name]
        parser.add_argument("--" + name, type=typ, **kw)
    return parser


def _show(v):
    if isinstance(v, tuple):
        return ",".join(f"{x:g}" for x in v)
    return v


def _validate(v):
    checks = [
        (v["kappa"] >= 0, "--kappa must be >= 0"),
        (v["n"] >= 2, "--n must be >= 2"),
        (v["a"] > 1.0, "--a must be > 1"),
        (v["m"] >= v["kappa"] + 1, "--m must be >= kappa + 1"),
        (v["p"] >= 1.0, "--p must be >= 1"),
        (v["rsnr"] > 0.0, "--rsnr must be > 0"),
        (v["design_beta"] > -1.0, "--design-beta must be > -1"),
        (0.0 <= v["design_x0"] <= 1.0, "--design-x0 must lie in [0, 1]"),
        (v["eval_grid"] >= 1, "--eval-grid must be >= 1"),
        (v["jobs"] >= 1, "--jobs must be >= 1"),
        (v["replications"] is None or v["replications"] >= 1, "--replications must be >= 1"),
        (v["noise_sd"] is None or v["noise_sd"] >= 0.0, "--noise-sd must be >= 0"),
        (v["h"] > 0.0, "--h must be > 0"),
    ]
    for ok, msg in checks:
        if not ok:
            raise UsageError(msg)


def parse_args(argv=None, env=None):
    """Parse ``argv`` into a :class:`CliConfig`; exits with status 2 on usage errors."""
    env = os.environ if env is None else env
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    sub = ns.pop("subcommand")
    cfg_path = ns.pop("config", None)
    values = {_dest(k): d for k, (_, d, _) in OPTIONS.items()}
    if "ADALOPO_SEED" in env:
        try:
            values["seed"] = int(env["ADALOPO_SEED"])
        except ValueError:
            parser.error(f"ADALOPO_SEED is not an integer: {env['ADALOPO_SEED']!r}")
    if cfg_path is not None:
        try:
            filed = read_keyvalue(cfg_path)
        except (OSError, ValueError) as exc:
            parser.error(f"--config: {exc}")
        for key, raw in filed.items():
            name = key.replace("_", "-")
            if name not in OPTIONS:
                parser.error(f"--config: unknown key {key!r}")
            try:
                val = OPTIONS[name][0](raw)
            except ValueError:
                parser.error(f"--config: bad value for {key!r}: {raw!r}")
            if name in CHOICES and val not in CHOICES[name]:
                parser.error(f"--config: {key!r} must be one of {', '.join(CHOICES[name])}")
            values[_dest(name)] = val
    values.update(ns)
    try:
        _validate(values)
    except UsageError as exc:
        parser.error(str(exc))
    return CliConfig(sub, values)


def design_of(c):
    beta, x0 = c["design-beta"], c["design-x0"]
    return DesignSpec.uniform(x0) if beta == 0.0 else DesignSpec.power(x0, beta)


def target_of(c):
    kind = c["target"]
    if kind == "cusp":
        return TargetFunction.cusp(c["s"], c["design-x0"], c["r"])
    if kind == "polynomial":
        return TargetFunction.polynomial(c["coeffs"], c["design-x0"])
    return TargetFunction(kind)


def dataset_of(c):
    return DatasetSpec(target_of(c), design_of(c), c["n"], c["rsnr"], c["seed"], c["noise-sd"])


def run_config_of(c, eval_points=None, replications=1):
    k = c["eval-grid"]
    pts = tuple(j / k for j in range(k + 1)) if eval_points is None else eval_points
    return ex.RunConfig(
        dataset_of(c),
        c["selector"],
        c["kappa"],
        c["a"],
        c["m"],
        c["grid"],
        c["p"],
        c["sigma"],
        c["paper-literal-threshold"],
        pts,
        replications,
    )


class _Outputs:
    """Files written to temporaries and moved into place only on success."""

    def __init__(self, directory):
        os.makedirs(directory, exist_ok=True)
        self.dir = directory
        self.pending = []

    def path(self, name):
        fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=self.dir)
        os.close(fd)
        self.pending.append((tmp, os.path.join(self.dir, name)))
        return tmp

    def commit(self):
        for tmp, final in self.pending:
            os.replace(tmp, final)
        self.pending = []

    def discard(self):
        for tmp, _ in self.pending:
            if os.path.exists(tmp):
                os.remove(tmp)
        self.pending = []


def _reps(c, default):
    return c["replications"] if c["replications"] is not None else default


def _synth(c, out):
    data = synthesize(dataset_of(c))
    tmp = out.path("dataset.csv")
    side = write_dataset(data, tmp)
    # the sidecar is named after the temporary; register it for the final name
    out.pending.append((side, os.path.join(out.dir, "dataset.provenance.txt")))
    return f"synth: {data.n} points, sigma={data.sigma:.6g}, seed={data.seed} -> {os.path.join(out.dir, 'dataset.csv')}"


def _estimate(c, out):
    cfg = run_config_of(c, replications=_reps(c, 1))
    if c["input"] is not None:
        data = read_dataset(c["input"])
        rows = ex.curve_for_dataset(cfg, data)
    else:
        rows = ex.run_curve(cfg, jobs=c["jobs"])
    ex.write_curve_csv(rows, out.path("estimate.csv"))
    good = [r for r in rows if r.ok]
    counts = sorted(r.count for r in good)
    diag = {
        "rows": len(rows),
        "failed_points": len(rows) - len(good),
        "inadmissible_points": sum(1 for r in good if not r.admissible),
        "median_count": counts[len(counts) // 2] if counts else 0,
        "mean_tested": sum(r.tested for r in good) / len(good) if good else 0.0,
        "selector": cfg.selector,
        "kappa": cfg.kappa,
        "a": cfg.a,
        "m": cfg.m,
        "sigma_mode": cfg.sigma,
        "literal_threshold": cfg.literal_threshold,
        "input": c["input"] or "synthesized",
    }
    write_keyvalue(diag, out.path("estimate.diagnostics.txt"))
    return (
        f"estimate: {len(rows)} points, median window count {diag['median_count']}, "
        f"{diag['failed_points']} failed, {diag['inadmissible_points']} without admissible window"
    )


def _risk(c, out):
    cfg = run_config_of(c, replications=_reps(c, 200))
    rep = ex.monte_carlo_risk(cfg, jobs=c["jobs"])
    ex.write_risk_csv(rep, out.path("risk.csv"))
    finite = [v for v in rep.risk if math.isfinite(v)]
    mean = sum(finite) / len(finite) if finite else math.nan
    return f"risk: mean {rep.p:g}-risk {mean:.6g} over {len(rep.risk)} points, {rep.replications} replications"


def _rate(c, out):
    cfg = run_config_of(c, eval_points=(c["design-x0"],), replications=_reps(c, 200))
    rep = ex.rate_study(cfg, c["n-values"], c["s"], jobs=c["jobs"])
    ex.write_rate_csv(rep, out.path("rate.csv"))
    return f"rate: slope {rep.slope:.4f} +- {rep.stderr:.4f}, theoretical {rep.theoretical:.4f}"


def _concentration(c, out):
    rows = ex.concentration_check(design_of(c), c["h"], c["n"], _reps(c, 1000), c["seed"], c["eps"])
    ex.write_concentration_csv(rows, out.path("concentration.csv"))
    ok = all(r.ok for r in rows)
    return f"concentration: {'all' if ok else 'not all'} cells within bound + 3 standard errors"


def _gap(c, out):
    rows = ex.adaptation_gap_report(
        c["s1"],
        c["r1"],
        c["s2"],
        c["r2"],
        design_of(c),
        c["n-values"],
        sigma=dataset_of(c).sigma,
        replications=_reps(c, 200),
        seed_base=c["seed"],
        kappa=c["kappa"],
        a=c["a"],
        p=c["p"],
        jobs=c["jobs"],
    )
    ex.write_gap_csv(rows, out.path("gap.csv"))
    return f"gap: {len(rows)} rows"


HANDLERS = {
    "synth": _synth,
    "estimate": _estimate,
    "risk": _risk,
    "rate": _rate,
    "concentration": _concentration,
    "gap": _gap,
}


def run(config):
    """Execute a parsed configuration; returns the exit status."""
    try:
        out = _Outputs(config["out"])
    except OSError as exc:
        print(f"adalopo: cannot use output directory: {exc}", file=sys.stderr)
        return 1
    try:
        summary = HANDLERS[config.subcommand](config, out)
    except Exception as exc:  # any module error is reported, outputs dropped
        out.discard()
        print(f"adalopo {config.subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    out.commit()
    print(summary)
    return 0


def main(argv=None):
    return run(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
