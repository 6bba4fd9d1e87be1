"""Regularized local polynomial estimator.

The fit at ``x0`` on a window solves ``X theta = Y`` where

    X[j, l] = <phi_j, phi_l>,   Y[j] = <Y, phi_j>,   phi_j(x) = (x - x0)**j,

and ``<., .>`` is either the window average (``norm="count"``) or the plain
window sum (``norm="raw"``).  In ``count`` mode the matrix gets a ridge
``N**-0.5 * I`` whenever its smallest eigenvalue is ``<= N**-0.5``; ``raw``
mode is never regularized.
"""

from dataclasses import dataclass, field
import math
from typing import Literal, Optional, Union

import numpy as np

from .linalg import SingularSystem, smallest_eigenvalue, solve_symmetric

Normalization = Literal["count", "raw"]


class DegenerateNorm(ValueError):
    """Some basis function vanishes on every point of the window."""


@dataclass
class SampleSet:
    """Design points sorted ascending with their responses."""

    xs: np.ndarray
    ys: np.ndarray
    seed: Optional[int] = None
    sigma: Optional[float] = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.ys = np.asarray(self.ys, dtype=float)
        if self.xs.ndim != 1 or self.xs.shape != self.ys.shape:
            raise ValueError("xs and ys must be 1-d arrays of equal length")
        if self.xs.size < 1:
            raise ValueError("need at least one observation")
        if np.any(np.diff(self.xs) < 0):
            raise ValueError("xs must be sorted ascending")

    @property
    def n(self):
        return self.xs.size

    @classmethod
    def from_unsorted(cls, xs, ys, **kw):
        xs = np.asarray(xs, dtype=float)
        order = np.argsort(xs, kind="stable")
        return cls(xs[order], np.asarray(ys, dtype=float)[order], **kw)


@dataclass(frozen=True)
class Symmetric:
    """Window ``[x0 - h, x0 + h]``."""

    x0: float
    h: float

    def __post_init__(self):
        if self.h < 0:
            raise ValueError("h must be >= 0")

    @property
    def center(self):
        return self.x0

    @property
    def bounds(self):
        return self.x0 - self.h, self.x0 + self.h


@dataclass(frozen=True)
class Interval:
    """Window ``[lo, hi]`` with the polynomial basis centered at ``center``."""

    lo: float
    hi: float
    center: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("lo must be <= hi")

    @property
    def bounds(self):
        return self.lo, self.hi


Window = Union[Symmetric, Interval]


def window_slice(data, w):
    lo, hi = w.bounds
    i = int(np.searchsorted(data.xs, lo, side="left"))
    j = int(np.searchsorted(data.xs, hi, side="right"))
    return slice(i, j)


def count_in_window(data, w):
    """Number of design points in the closed window."""
    s = window_slice(data, w)
    return s.stop - s.start


def moments(t, y, kappa):
    """Power sums ``sum t**p`` (p <= 2 kappa) and ``sum y t**j`` (j <= kappa).

    Powers are built by repeated multiplication of the centered values.
    """
    t = np.asarray(t, dtype=float)
    pw = np.ones((t.size, 2 * kappa + 1))
    for p in range(1, 2 * kappa + 1):
        pw[:, p] = pw[:, p - 1] * t
    return pw.sum(axis=0), (pw[:, : kappa + 1] * np.asarray(y, dtype=float)[:, None]).sum(axis=0)


def hankel(m, kappa):
    """``(kappa+1) x (kappa+1)`` matrix with entries ``m[j + l]``; ``m`` may be stacked."""
    m = np.asarray(m)
    idx = np.add.outer(np.arange(kappa + 1), np.arange(kappa + 1))
    return m[..., idx]


@dataclass
class GramSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    count: int
    normalization: Normalization


def build_gram(data, w, kappa, norm="count"):
    """Window Gram matrix and right-hand side for the monomial basis."""
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    s = window_slice(data, w)
    t = data.xs[s] - w.center
    mom, rhs = moments(t, data.ys[s], kappa)
    count = t.size
    if norm == "count" and count > 0:
        mom = mom / count
        rhs = rhs / count
    elif norm not in ("count", "raw"):
        raise ValueError(f"unknown normalization {norm!r}")
    return GramSystem(hankel(mom, kappa), rhs, count, norm)


@dataclass
class LocalFit:
    theta: np.ndarray
    count: int
    lambda_min: float
    regularized: bool
    omega_event: bool
    matrix: np.ndarray = field(repr=False)
    window: Optional[Window] = None

    @property
    def estimate(self):
        return float(self.theta[0])


def fit_local(data, w, kappa, norm="count"):
    """Local polynomial fit on window ``w``.

    ``lambda_min`` is always reported on the averaged scale so that
    ``omega_event`` means ``lambda(X_h) > N**-0.5 and N >= 2`` in both modes.

    Raises
    ------
    SingularSystem
        In ``raw`` mode when the window holds fewer than ``kappa + 1``
        distinct points.
    """
    g = build_gram(data, w, kappa, norm)
    k1 = kappa + 1
    n_w = g.count
    if n_w == 0:
        return LocalFit(np.zeros(k1), 0, 0.0, False, False, np.zeros((k1, k1)), w)
    lam = smallest_eigenvalue(g.matrix)
    lam_avg = lam / n_w if norm == "raw" else lam
    floor = n_w**-0.5
    omega = lam_avg > floor and n_w >= 2
    matrix = g.matrix
    regularized = False
    if norm == "count":
        if lam <= floor:
            matrix = matrix + floor * np.eye(k1)
            regularized = True
    else:
        s = window_slice(data, w)
        if np.unique(data.xs[s]).size < k1:
            raise SingularSystem(f"window holds fewer than {k1} distinct points")
    theta = solve_symmetric(matrix, g.rhs)
    return LocalFit(theta, n_w, lam_avg, regularized, omega, matrix, w)


def normalized_gram(data, w, kappa):
    """``Lambda X Lambda`` with ``Lambda = diag(||phi_j||^-1)``: unit diagonal.

    The unregularized averaged Gram matrix is used.
    """
    g = build_gram(data, w, kappa, "count")
    if g.count == 0:
        raise DegenerateNorm("empty window")
    diag = np.diag(g.matrix)
    if np.any(diag <= 0.0):
        raise DegenerateNorm("a basis function vanishes on the window")
    lam = 1.0 / np.sqrt(diag)
    out = g.matrix * lam[:, None] * lam[None, :]
    np.fill_diagonal(out, 1.0)
    return out


def ridge_floor(count):
    return 1.0 / math.sqrt(count)
