"""Benchmark regression functions and reproducible dataset synthesis.

The four classical wavelet benchmarks use the usual Donoho-Johnstone
parameterizations (unscaled; the noise level is set from the function's own
spread).  Noise is Gaussian, generated by the Box-Muller transform of the
same Philox uniform stream that drives the design sampler:

    u[0:n]        design quantiles
    u[n:n+2k]     (u1, u2) pairs, k = ceil(n / 2),
                  z = sqrt(-2 log(1 - u1)) * (cos, sin)(2 pi u2)

so a dataset is a pure function of its :class:`DatasetSpec`.
"""

import csv
from dataclasses import dataclass, field
import math
import os
from typing import Optional

import numpy as np

from .locpoly import SampleSet
from .rvdesign import DesignSpec, design_cdf_inverse, uniform_stream

SD_GRID_POINTS = 10_000

BLOCKS_KNOTS = np.array([0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81])
BLOCKS_HEIGHTS = np.array([4, -5, 3, -4, 5, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2])
BUMPS_HEIGHTS = np.array([4, 5, 3, 4, 5, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2])
BUMPS_WIDTHS = np.array([0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005])
HEAVYSINE_JUMPS = (0.3, 0.72)

TARGET_KINDS = ("blocks", "bumps", "heavysine", "doppler", "cusp", "polynomial", "tabulated")


@dataclass(frozen=True)
class TargetFunction:
    """Regression function on [0, 1].

    ``cusp`` is ``r |x - x0|**s``.  ``polynomial`` evaluates
    ``sum coeffs[j] (x - x0)**j``.  ``tabulated`` interpolates linearly
    through ``(grid, values)``.
    """

    kind: str
    s: float = 1.0
    x0: float = 0.5
    r: float = 1.0
    coeffs: tuple = ()
    grid: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in TARGET_KINDS:
            raise ValueError(f"unknown target {self.kind!r}")

    def __call__(self, x):
        return eval_target(self, x)

    @classmethod
    def cusp(cls, s, x0=0.5, r=1.0):
        return cls("cusp", s=s, x0=x0, r=r)

    @classmethod
    def polynomial(cls, coeffs, x0=0.0):
        return cls("polynomial", x0=x0, coeffs=tuple(float(c) for c in coeffs))

    def label(self):
        if self.kind == "cusp":
            return f"cusp(s={self.s:g},x0={self.x0:g},r={self.r:g})"
        if self.kind == "polynomial":
            return f"polynomial({','.join(f'{c:g}' for c in self.coeffs)};x0={self.x0:g})"
        return self.kind


def eval_target(t, x):
    """Evaluate ``t`` at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    k = t.kind
    if k == "blocks":
        out = np.sum(BLOCKS_HEIGHTS * (1.0 + np.sign(x[..., None] - BLOCKS_KNOTS)) / 2.0, axis=-1)
    elif k == "bumps":
        out = np.sum(BUMPS_HEIGHTS * (1.0 + np.abs((x[..., None] - BLOCKS_KNOTS) / BUMPS_WIDTHS)) ** -4, axis=-1)
    elif k == "heavysine":
        out = 4.0 * np.sin(4.0 * np.pi * x) - np.sign(x - 0.3) - np.sign(0.72 - x)
    elif k == "doppler":
        out = np.sqrt(x * (1.0 - x)) * np.sin(2.0 * np.pi * 1.05 / (x + 0.05))
    elif k == "cusp":
        out = t.r * np.abs(x - t.x0) ** t.s
    elif k == "polynomial":
        out = np.polynomial.polynomial.polyval(x - t.x0, np.asarray(t.coeffs or (0.0,)))
    else:
        out = np.interp(x, np.asarray(t.grid), np.asarray(t.values))
    return out if out.ndim else float(out)


def sd_grid(t):
    """Population standard deviation of ``t`` on a uniform 10**4-point grid of [0, 1]."""
    g = np.linspace(0.0, 1.0, SD_GRID_POINTS)
    return float(np.std(eval_target(t, g)))


@dataclass(frozen=True)
class DatasetSpec:
    """Everything needed to regenerate a dataset.

    The noise level is ``sd_grid(target) / rsnr`` unless ``noise_sd`` is
    given; ``rsnr = inf`` yields noiseless data.
    """

    target: TargetFunction
    design: DesignSpec = field(default_factory=DesignSpec.uniform)
    n: int = 2000
    rsnr: float = 7.0
    seed: int = 0
    noise_sd: Optional[float] = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not self.rsnr > 0:
            raise ValueError("rsnr must be > 0")
        if self.noise_sd is not None and self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")

    @property
    def sigma(self):
        if self.noise_sd is not None:
            return float(self.noise_sd)
        if math.isinf(self.rsnr):
            return 0.0
        return sd_grid(self.target) / self.rsnr


def gaussian_from_uniforms(u, size):
    """Box-Muller normals from ``2 * ceil(size / 2)`` uniforms in [0, 1)."""
    u = np.asarray(u, dtype=float).reshape(-1, 2)
    rad = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    ang = 2.0 * np.pi * u[:, 1]
    return np.column_stack([rad * np.cos(ang), rad * np.sin(ang)]).ravel()[:size]


def synthesize(spec):
    """Draw ``(X, Y)`` with ``Y = f(X) + sigma * xi``, sorted by ``X``."""
    n = spec.n
    k = (n + 1) // 2
    u = uniform_stream(spec.seed, n + 2 * k)
    xs = np.atleast_1d(design_cdf_inverse(spec.design, u[:n]))
    sigma = spec.sigma
    ys = np.asarray(eval_target(spec.target, xs), dtype=float)
    if sigma > 0.0:
        ys = ys + sigma * gaussian_from_uniforms(u[n:], n)
    prov = provenance(spec)
    return SampleSet.from_unsorted(xs, ys, seed=spec.seed, sigma=sigma, provenance=prov)


def provenance(spec):
    d = spec.design
    return {
        "target": spec.target.label(),
        "design_kind": d.kind,
        "design_x0": repr(d.x0),
        "design_beta": repr(d.beta),
        "n": str(spec.n),
        "rsnr": repr(spec.rsnr),
        "seed": str(spec.seed),
        "sigma": repr(spec.sigma),
        "sigma_rule": "explicit" if spec.noise_sd is not None else f"sd over {SD_GRID_POINTS}-point uniform grid / rsnr",
        "generator": "Philox uniforms, inverse-CDF design, Box-Muller noise",
    }


def fmt(v):
    """17 significant digits, locale independent."""
    return format(float(v), ".17g")


def write_dataset(data, path):
    """Write ``x,y`` CSV plus a ``key = value`` provenance sidecar.

    Returns the sidecar path.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y"])
        for x, y in zip(data.xs, data.ys):
            w.writerow([fmt(x), fmt(y)])
    side = os.path.splitext(path)[0] + ".provenance.txt"
    write_keyvalue(data.provenance, side)
    return side


def read_dataset(path):
    xs, ys = [], []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if [h.strip() for h in header] != ["x", "y"]:
            raise ValueError(f"{path}: expected header 'x,y', got {header}")
        for row in r:
            xs.append(float(row[0]))
            ys.append(float(row[1]))
    side = os.path.splitext(path)[0] + ".provenance.txt"
    prov = read_keyvalue(side) if os.path.exists(side) else {}
    seed = int(prov["seed"]) if "seed" in prov else None
    sigma = float(prov["sigma"]) if "sigma" in prov else None
    return SampleSet.from_unsorted(xs, ys, seed=seed, sigma=sigma, provenance=prov)


def write_keyvalue(d, path):
    with open(path, "w") as fh:
        for k, v in d.items():
            fh.write(f"{k} = {v}\n")


def read_keyvalue(path):
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out
