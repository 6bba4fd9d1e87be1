"""Regularly varying design densities and theoretical convergence rates.

A design density is regularly varying at ``x0`` with index ``beta`` when it
behaves like ``nu(|x - x0|)`` near ``x0`` with ``nu(yh)/nu(h) -> y**beta``.
Three families are supported:

``power``
    ``mu(x) = (beta + 1) / (x0**(beta+1) + (1-x0)**(beta+1)) * |x - x0|**beta``
    on [0, 1]; a pole at ``x0`` when ``beta < 0``, a zero when ``beta > 0``.
``uniform``
    ``mu = 1`` on [0, 1].
``powerlog``
    Specified through ``F(h) = int_0^h nu = h**(beta+1) * log(1/h)**alpha``.
    Only used by the rate evaluators; it is not a normalised density on
    [0, 1] and cannot be sampled.

The rate evaluators solve the bias/variance balance equation

    omega(h) = sigma * sqrt(L / (2 n F(h))),   L = log n  or  1,

by bisection on ``log h``.  The equation is only supported for moduli and
designs for which ``omega(h) * sqrt(F(h))`` is increasing on the search
range, so the root is unique.
"""

from dataclasses import dataclass, field
import math
from typing import Literal

import numpy as np

from .linalg import smallest_eigenvalue


class NoRoot(ValueError):
    """The balance equation has no root in the search range."""


DesignKind = Literal["power", "uniform", "powerlog"]


def _log_power(h, exponent):
    """``log(1/h) ** exponent`` with the limits at ``h = 1`` made explicit."""
    lg = -math.log(h)
    if lg == 0.0:
        if exponent == 0.0:
            return 1.0
        return 0.0 if exponent > 0.0 else math.inf
    return lg**exponent


@dataclass(frozen=True)
class DesignSpec:
    """Regularly varying design density around ``x0``."""

    x0: float = 0.5
    beta: float = 0.0
    kind: DesignKind = "power"
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("power", "uniform", "powerlog"):
            raise ValueError(f"unknown design kind {self.kind!r}")
        if not self.beta > -1.0:
            raise ValueError(f"beta must be > -1, got {self.beta}")
        if not 0.0 <= self.x0 <= 1.0:
            raise ValueError(f"x0 must lie in [0, 1], got {self.x0}")
        if self.kind == "uniform" and self.beta != 0.0:
            raise ValueError("uniform design has beta = 0")

    @classmethod
    def uniform(cls, x0=0.5):
        return cls(x0=x0, beta=0.0, kind="uniform")

    @classmethod
    def power(cls, x0, beta):
        return cls(x0=x0, beta=beta, kind="power")

    @classmethod
    def powerlog(cls, beta, alpha, x0=0.5):
        return cls(x0=x0, beta=beta, kind="powerlog", alpha=alpha)

    @property
    def normalizer(self):
        """``x0**(beta+1) + (1-x0)**(beta+1)`` for the power family."""
        b1 = self.beta + 1.0
        return self.x0**b1 + (1.0 - self.x0) ** b1

    @property
    def samplable(self):
        return self.kind != "powerlog"


def design_pdf(spec, x):
    """Design density at ``x``.

    For ``beta < 0`` the power density has a pole at ``x0`` and ``inf`` is
    returned there.  The ``powerlog`` family returns the unnormalised
    ``nu(|x - x0|)`` obtained by differentiating ``F``.
    """
    x = float(x)
    if not 0.0 <= x <= 1.0:
        return 0.0
    if spec.kind == "uniform":
        return 1.0
    t = abs(x - spec.x0)
    b = spec.beta
    if spec.kind == "power":
        if t == 0.0:
            if b < 0.0:
                return math.inf
            return 1.0 / spec.normalizer if b == 0.0 else 0.0
        return (b + 1.0) / spec.normalizer * t**b
    # powerlog: d/dt t^(b+1) L^a = t^b L^(a-1) ((b+1) L - a), L = log(1/t)
    if t == 0.0:
        return math.inf if b < 0.0 else 0.0
    lg = -math.log(t)
    a = spec.alpha
    return t**b * _log_power(t, a - 1.0) * ((b + 1.0) * lg - a)


def design_cdf(spec, x):
    """Distribution function of a samplable design; vectorized in ``x``."""
    if not spec.samplable:
        raise ValueError("powerlog designs have no distribution function on [0, 1]")
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    if spec.kind == "uniform":
        return x if x.ndim else float(x)
    b1 = spec.beta + 1.0
    x0 = spec.x0
    t = np.abs(x - x0) ** b1
    out = np.where(x < x0, x0**b1 - t, x0**b1 + t) / spec.normalizer
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def design_cdf_inverse(spec, u):
    """Quantile function of the design, vectorized in ``u``.

    Closed form for the power family: the CDF is a power of ``|x - x0|`` on
    each side of ``x0``.
    """
    if not spec.samplable:
        raise ValueError("powerlog designs cannot be sampled")
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    if spec.kind == "uniform":
        return u if u.ndim else float(u)
    b1 = spec.beta + 1.0
    x0 = spec.x0
    left_mass = x0**b1
    v = u * spec.normalizer - left_mass
    out = np.where(
        v < 0.0,
        x0 - np.abs(v) ** (1.0 / b1),
        x0 + np.abs(v) ** (1.0 / b1),
    )
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def uniform_stream(seed, size):
    """``size`` uniforms in [0, 1) from a Philox counter-based generator."""
    rng = np.random.Generator(np.random.Philox(key=int(seed) % 2**64))
    return rng.random(size)


def sample_design(spec, n, seed):
    """Draw ``n`` design points by inverse-CDF sampling, sorted ascending.

    The uniforms are the first ``n`` values of :func:`uniform_stream`, so the
    result depends only on ``(spec, n, seed)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = design_cdf_inverse(spec, uniform_stream(seed, n))
    return np.sort(np.atleast_1d(xs))


def f_nu_integral(spec, h):
    """``F(h) = int_0^h nu(t) dt`` for the design's radial profile ``nu``."""
    h = float(h)
    if not h > 0.0:
        raise ValueError(f"h must be > 0, got {h}")
    b1 = spec.beta + 1.0
    if spec.kind == "uniform":
        return h
    if spec.kind == "power":
        return h**b1 / spec.normalizer
    return h**b1 * _log_power(h, spec.alpha)


def c_alpha_beta(alpha, beta):
    """Limit constant ``(1 + (-1)**alpha) (beta + 1) / (alpha + beta + 1)``.

    This is the limit of ``sum(((X_i - x0)/h)**alpha) / (n F(h))`` for a
    design regularly varying at ``x0`` with index ``beta``.
    """
    if int(alpha) != alpha or alpha < 0:
        raise ValueError("alpha must be a nonnegative integer")
    if not beta > -1.0:
        raise ValueError(f"beta must be > -1, got {beta}")
    alpha = int(alpha)
    if alpha % 2:
        return 0.0
    return 2.0 * (beta + 1.0) / (alpha + beta + 1.0)


@dataclass(frozen=True)
class LimitMatrix:
    kappa: int
    beta: float
    entries: np.ndarray = field(repr=False)
    lambda_min: float


def limit_matrix(kappa, beta):
    """Limit of the normalized local Gram matrix and its smallest eigenvalue."""
    if not 0 <= kappa <= 10:
        raise ValueError("kappa must be in 0..10")
    k1 = kappa + 1
    c = [c_alpha_beta(a, beta) for a in range(2 * kappa + 1)]
    g = np.empty((k1, k1))
    for j in range(k1):
        for l in range(k1):
            g[j, l] = c[j + l] / math.sqrt(c[2 * j] * c[2 * l])
    return LimitMatrix(kappa=kappa, beta=beta, entries=g, lambda_min=smallest_eigenvalue(g))


@dataclass(frozen=True)
class ModulusSpec:
    """Continuity modulus ``omega(h) = r * h**s * log(1/h)**gamma``."""

    s: float
    r: float = 1.0
    gamma: float = 0.0

    def __post_init__(self):
        if not self.s > 0.0:
            raise ValueError("s must be > 0")
        if not self.r > 0.0:
            raise ValueError("r must be > 0")

    def __call__(self, h):
        h = float(h)
        if h <= 0.0:
            return 0.0
        if self.gamma == 0.0:
            return self.r * h**self.s
        return self.r * h**self.s * _log_power(h, self.gamma)

    @property
    def increasing_below(self):
        """Upper end of the range on which ``omega`` is increasing."""
        if self.gamma > 0.0:
            return math.exp(-self.gamma / self.s)
        return 1.0

    def inverse(self, y):
        """Smallest ``h`` in (0, increasing_below] with ``omega(h) >= y``.

        Returns ``inf`` when ``y`` exceeds the maximum over that range.
        """
        if y <= 0.0:
            return 0.0
        top = self.increasing_below
        if self.gamma == 0.0:
            h = (y / self.r) ** (1.0 / self.s)
            return h if h <= top else math.inf
        if self(top) < y:
            return math.inf
        return _bisect_log(lambda h: self(h) - y, top)


def _bisect_log(fn, hi, lo=1e-12, rel=1e-13):
    """Smallest-bracket bisection in ``log h`` for an increasing ``fn``.

    ``fn(hi) >= 0`` is assumed.  The lower end is pushed down until
    ``fn(lo) < 0``.
    """
    while fn(lo) >= 0.0:
        lo *= 1e-12
        if lo < 1e-300:
            return lo
    a, b = math.log(lo), math.log(hi)
    for _ in range(400):
        mid = 0.5 * (a + b)
        if fn(math.exp(mid)) >= 0.0:
            b = mid
        else:
            a = mid
        if b - a <= rel:
            break
    return math.exp(b)


@dataclass(frozen=True)
class RateModel:
    """Smoothness modulus, design and noise level."""

    modulus: ModulusSpec
    design: DesignSpec
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError("sigma must be > 0")

    def _search_top(self):
        top = self.modulus.increasing_below
        if self.design.kind == "powerlog" and self.design.alpha > 0.0:
            top = min(top, math.exp(-self.design.alpha / (self.design.beta + 1.0)))
        return top


def _balance(model, n, with_log):
    if not n > 1.0:
        raise ValueError("n must be > 1")
    level = model.sigma * math.sqrt(math.log(n) if with_log else 1.0)

    def excess(h):
        return model.modulus(h) * math.sqrt(2.0 * n * f_nu_integral(model.design, h)) - level

    return excess


def deterministic_bandwidth(model, n, with_log=True):
    """Smallest root of ``omega(h) = sigma sqrt(L / (2 n F(h)))``.

    ``L = log n`` for the adaptive balance, ``L = 1`` for the minimax one.
    ``n`` may be any real number > 1.

    Raises
    ------
    NoRoot
        If the left side is still below the right side at the top of the
        search range.
    """
    excess = _balance(model, n, with_log)
    top = model._search_top()
    if excess(top) < 0.0:
        raise NoRoot(f"no balance root in (0, {top:.6g}] for n={n}")
    return _bisect_log(excess, top)


def theoretical_rate(model, n, adaptive=True):
    """``omega`` at the balance root: the adaptive rate, or the minimax one."""
    return model.modulus(deterministic_bandwidth(model, n, with_log=adaptive))


def lambert_inverse_asymptotic(a, b, h):
    """Asymptotic inverse of ``G(t) = t**b * log(1/t)**a`` at small ``h``.

    Returns ``b**(a/b) * h**(1/b) * log(1/h)**(-a/b)``.
    """
    if not b > 0.0:
        raise ValueError("b must be > 0")
    if not 0.0 < h < 1.0:
        raise ValueError("h must lie in (0, 1)")
    return b ** (a / b) * h ** (1.0 / b) * (-math.log(h)) ** (-a / b)


def asymptotic_bandwidth(model, n, with_log=True):
    """Closed-form approximation of :func:`deterministic_bandwidth`.

    Writing ``omega(h)**2 F(h) = r**2 c h**b log(1/h)**a`` with
    ``b = 2s + beta + 1`` and ``a = 2 gamma + alpha``, the root is
    ``G^{<-}(sigma**2 L / (2 n r**2 c))``; the inverse is exact when
    ``a = 0``.
    """
    m, d = model.modulus, model.design
    b = 2.0 * m.s + d.beta + 1.0
    alpha = d.alpha if d.kind == "powerlog" else 0.0
    a = 2.0 * m.gamma + alpha
    c = 1.0 / d.normalizer if d.kind == "power" else 1.0
    level = math.log(n) if with_log else 1.0
    y = model.sigma**2 * level / (2.0 * n * m.r**2 * c)
    if a == 0.0:
        return y ** (1.0 / b)
    return lambert_inverse_asymptotic(a, b, y)


def asymptotic_rate(model, n, adaptive=True):
    return model.modulus(asymptotic_bandwidth(model, n, with_log=adaptive))


def rate_exponent(s, beta):
    """Exponent ``s / (1 + 2s + beta)`` of the pointwise rate."""
    return s / (1.0 + 2.0 * s + beta)
