"""Design-sensitive Lepski-type window selection.

Two selectors are provided:

* :func:`select_bandwidth_symmetric` picks the largest radius ``h`` of a
  grid of data distances such that the fit on ``[x0-h, x0+h]`` agrees,
  coordinate by coordinate and up to a noise threshold, with the fit on
  every smaller grid window.  Fits use averaged scalar products and the
  ``N**-0.5`` ridge.
* :func:`select_interval` runs the same idea over non-symmetric intervals
  ``[X_(l), X_(r)]`` whose endpoints lie at geometrically growing index
  offsets from a seed block of ``m`` points, with raw (unaveraged) scalar
  products.

Both selectors share the same scan strategy: candidates are visited from
the largest down, and the first one passing all of its sub-window tests is
returned.
"""

from dataclasses import dataclass, field
import math
from typing import Literal, Optional

import numpy as np

from .linalg import smallest_eigenvalue, solve_symmetric, solve_symmetric_batch
from .locpoly import Interval, LocalFit, Symmetric, fit_local, hankel

GridKind = Literal["arith", "geom"]


class EmptyGrid(ValueError):
    pass


class OutOfRange(ValueError):
    pass


class Undefined(ValueError):
    """The ideal bandwidth does not exist for this modulus and sample."""


def _int_powers(a, upper):
    """``floor(a**i)`` for i = 0, 1, ... while ``a**i <= upper``."""
    out = []
    i = 0
    while True:
        v = a**i
        if v > upper * (1.0 + 1e-12):
            break
        out.append(int(math.floor(v + 1e-9)))
        i += 1
        if a == 1.0:
            break
    return out


@dataclass
class GridSpec:
    kind: GridKind
    a: float
    x0: float
    values: np.ndarray
    indices: np.ndarray = field(repr=False)


def build_grid(data, x0, kind="geom", a=1.05):
    """Bandwidth grid of distances ``h_i = |X_(i) - x0|`` (sorted by distance).

    ``arith``: ``h_{2 + [i a]}`` for ``i = 1..[(n-2)/a]``, ``a >= 1``.
    ``geom``: ``h_{[a**i]}`` for ``i = 1..[log_a n]``, ``a > 1``.
    Indices are 1-based; values are deduplicated.
    """
    n = data.n
    dist = np.sort(np.abs(data.xs - x0))
    if kind == "arith":
        if a < 1.0:
            raise ValueError("arith grid needs a >= 1")
        imax = int(math.floor((n - 2) / a + 1e-12))
        idx = [2 + int(math.floor(i * a + 1e-12)) for i in range(1, imax + 1)]
        idx = [k for k in idx if k <= n]
    elif kind == "geom":
        if a <= 1.0:
            raise ValueError("geom grid needs a > 1")
        idx = _int_powers(a, n)[1:]
    else:
        raise ValueError(f"unknown grid kind {kind!r}")
    if not idx:
        raise EmptyGrid(f"no grid index generated for n={n}, a={a}")
    idx = np.asarray(idx)
    values = np.unique(dist[idx - 1])
    return GridSpec(kind, float(a), float(x0), values, idx)


def threshold_symmetric(n, n_hp, n_h, kappa, p=2.0, kind="geom", a=1.05):
    """Threshold ``T_{n,h',h}`` for the symmetric rule; vectorized in counts.

    ``C_k sqrt(C_p log(N_h) / N_h')`` plus ``sqrt(log n / (N_h - a))`` on the
    arithmetic grid or ``sqrt((1 + a) log n / N_h)`` on the geometric grid,
    where ``C_k = 1 + sqrt(kappa + 1)`` and ``C_p = 8 (1 + 2p)``.
    """
    n_hp = np.asarray(n_hp, dtype=float)
    n_h = np.asarray(n_h, dtype=float)
    ck = 1.0 + math.sqrt(kappa + 1.0)
    cp = 8.0 * (1.0 + 2.0 * p)
    first = ck * np.sqrt(cp * np.log(n_h) / n_hp)
    if kind == "arith":
        if np.any(n_h <= a):
            raise ValueError("arith threshold needs N_h > a")
        second = np.sqrt(math.log(n) / (n_h - a))
    elif kind == "geom":
        second = np.sqrt((1.0 + a) * math.log(n) / n_h)
    else:
        raise ValueError(f"unknown grid kind {kind!r}")
    out = first + second
    return float(out) if out.ndim == 0 else out


@dataclass
class SelectionResult:
    window: object
    fit: LocalFit
    tested: int
    rejections: dict = field(default_factory=dict, repr=False)
    admissible: bool = True

    @property
    def estimate(self):
        return self.fit.estimate


def _symmetric_fits(data, x0, kappa, values):
    """Averaged Gram systems and regularized fits on every grid radius."""
    t = data.xs - x0
    order = np.argsort(np.abs(t), kind="stable")
    ts, ys = t[order], data.ys[order]
    dist = np.abs(ts)
    pw = np.ones((ts.size, 2 * kappa + 1))
    for q in range(1, 2 * kappa + 1):
        pw[:, q] = pw[:, q - 1] * ts
    cm = np.vstack([np.zeros(2 * kappa + 1), np.cumsum(pw, axis=0)])
    cy = np.vstack([np.zeros(kappa + 1), np.cumsum(pw[:, : kappa + 1] * ys[:, None], axis=0)])
    counts = np.searchsorted(dist, values, side="right")
    mats = hankel(cm[counts] / counts[:, None], kappa)
    rhs = cy[counts] / counts[:, None]
    thetas = np.empty_like(rhs)
    eye = np.eye(kappa + 1)
    for k, c in enumerate(counts):
        floor = c**-0.5
        m = mats[k]
        if smallest_eigenvalue(m) <= floor:
            m = m + floor * eye
        thetas[k] = solve_symmetric(m, rhs[k], check=False)
    return counts, mats, thetas


def _symmetric_violations(k, counts, mats, thetas, n, kappa, p, kind, a, sigma):
    """Ratios ``|<f_h - f_h', phi_j>_h'| / (sigma ||phi_j||_h' T)`` for h' < h = grid[k]."""
    if k == 0:
        return np.zeros((0, kappa + 1))
    diff = thetas[k][None, :] - thetas[:k]
    lhs = np.abs(np.einsum("kjl,kl->kj", mats[:k], diff))
    norms = np.sqrt(np.einsum("kjj->kj", mats[:k]))
    thr = threshold_symmetric(n, counts[:k], counts[k], kappa, p, kind, a)
    rhs = sigma * norms * np.asarray(thr)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(lhs > rhs, np.where(rhs > 0, lhs / rhs, np.inf), 0.0)
    return ratio


def select_bandwidth_symmetric(data, x0, kappa, p=2.0, grid=None, sigma=1.0):
    """Largest grid radius whose fit passes every test against smaller radii.

    For grid values ``h' <= h`` and ``0 <= j <= kappa`` the test is
    ``|<f_h - f_h', phi_j>_h'| <= sigma ||phi_j||_h' T_{n,h',h}`` with the
    averaged scalar product on ``[x0-h', x0+h']``.
    """
    if grid is None:
        grid = build_grid(data, x0, "geom", 1.05)
    if not sigma >= 0.0:
        raise ValueError("sigma must be >= 0")
    values = grid.values
    counts, mats, thetas = _symmetric_fits(data, x0, kappa, values)
    rejections = {}
    tested = 0
    chosen = None
    for k in range(values.size - 1, -1, -1):
        tested += 1
        ratio = _symmetric_violations(k, counts, mats, thetas, data.n, kappa, p, grid.kind, grid.a, sigma)
        bad = np.argwhere(ratio > 0.0)
        if bad.size == 0:
            chosen = k
            break
        kp, j = bad[0]
        rejections[float(values[k])] = (float(values[kp]), int(j))
    admissible = chosen is not None
    if chosen is None:
        chosen = 0
    w = Symmetric(float(x0), float(values[chosen]))
    return SelectionResult(w, fit_local(data, w, kappa, "count"), tested, rejections, admissible)


@dataclass
class IntervalGrid:
    """Product grid of interval endpoints around the estimation point.

    ``left`` holds candidate lower endpoints moving outward (descending),
    ``right`` candidate upper endpoints moving outward (ascending).
    """

    x: float
    seed: tuple
    left: np.ndarray
    right: np.ndarray
    left_index: np.ndarray = field(repr=False)
    right_index: np.ndarray = field(repr=False)

    @property
    def size(self):
        return self.left.size * self.right.size

    def intervals(self):
        """All ``(lo, hi)`` endpoint pairs, ``left`` index varying slowest."""
        return [(float(lo), float(hi)) for lo in self.left for hi in self.right]


def seed_block(xs, x, m):
    """Indices ``(l, r)`` (0-based, inclusive) of the ``m`` points nearest ``x``.

    Ties between a left and a right neighbour go to the left one.
    """
    n = xs.size
    lo = hi = int(np.searchsorted(xs, x, side="left"))
    while hi - lo < m:
        if lo == 0:
            hi += 1
        elif hi == n:
            lo -= 1
        elif x - xs[lo - 1] <= xs[hi] - x:
            lo -= 1
        else:
            hi += 1
    return lo, hi - 1


def build_interval_grid(data, x, a=1.05, m=25):
    """Endpoints ``X_(l + 1 - [a^i])`` and ``X_(r - 1 + [a^i])`` around a seed block.

    ``l`` and ``r`` are the 1-based first and last indices of the ``m``
    points nearest ``x``; indices are clamped to ``[1, n]``.
    """
    if not (math.isfinite(x) and 0.0 <= x <= 1.0):
        raise OutOfRange(f"x={x} outside [0, 1]")
    if a <= 1.0:
        raise ValueError("a must be > 1")
    n = data.n
    if m < 1 or n < m:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    l0, r0 = seed_block(data.xs, x, m)
    l1, r1 = l0 + 1, r0 + 1
    left_idx = sorted({max(l1 + 1 - k, 1) for k in _int_powers(a, l1 + 1)}, reverse=True)
    right_idx = sorted({min(r1 - 1 + k, n) for k in _int_powers(a, n - r1 + 1)})
    left_vals = data.xs[np.asarray(left_idx) - 1]
    right_vals = data.xs[np.asarray(right_idx) - 1]
    # dedup tied values, keep outward order
    left_vals = np.unique(left_vals)[::-1]
    right_vals = np.unique(right_vals)
    return IntervalGrid(
        float(x), (l1, r1), left_vals, right_vals, np.asarray(left_idx), np.asarray(right_idx)
    )


def _rank(shape):
    """Grid distance ``a + b`` of each sub-interval from the seed block."""
    return np.add.outer(np.arange(shape[0]), np.arange(shape[1]))


class _IntervalTables:
    """Moments, fits and normalized test matrices for every grid interval."""

    def __init__(self, data, grid, kappa):
        xs, ys = data.xs, data.ys
        x = grid.x
        k2 = 2 * kappa + 1
        t = xs - x
        pw = np.ones((t.size, k2))
        for q in range(1, k2):
            pw[:, q] = pw[:, q - 1] * t
        py = pw[:, : kappa + 1] * ys[:, None]
        both = np.hstack([pw, py])
        s = int(np.searchsorted(xs, x, side="left"))
        # signed prefix sums accumulated outward from x on each side:
        # acc[k] = -sum(both[k:s]) for k <= s, sum(both[s:k]) for k >= s,
        # so the sum over indices lo..hi is acc[hi + 1] - acc[lo]
        acc = np.vstack(
            [
                -np.cumsum(both[:s][::-1], axis=0)[::-1],
                np.zeros((1, both.shape[1])),
                np.cumsum(both[s:], axis=0),
            ]
        )
        lo = np.searchsorted(xs, grid.left, side="left")
        hi = np.searchsorted(xs, grid.right, side="right") - 1
        sums = acc[hi + 1][None, :, :] - acc[lo][:, None, :]
        L, H = np.meshgrid(lo, hi, indexing="ij")
        self.mom = sums[..., :k2]
        self.rhs = sums[..., k2:]
        self.count = (H - L + 1).astype(float)
        self.length = grid.right[None, :] - grid.left[:, None]
        self.lo = np.broadcast_to(grid.left[:, None], L.shape)
        self.hi = np.broadcast_to(grid.right[None, :], L.shape)
        mats = hankel(self.mom, kappa)
        shape = L.shape
        k1 = kappa + 1
        self.theta = solve_symmetric_batch(
            mats.reshape(-1, k1, k1), self.rhs.reshape(-1, k1)
        ).reshape(shape + (k1,))
        diag = self.mom[..., 0 : k2 : 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(diag > 0.0, 1.0 / np.sqrt(diag), 0.0)
        # rows with ||phi_j||_J = 0 are zeroed: that coordinate is not tested
        self.hmat = mats * inv[..., :, None]


def interval_threshold(n_i, n_j, n, kappa, a, sigma_hat, literal_threshold=False):
    """``T_{I,J}``; vectorized in the counts.

    Default: ``sigma (C_k sqrt(log N_I) + sqrt(1+a) sqrt(N_J / N_I log n))``.
    ``literal_threshold`` leaves the second term unscaled by ``sigma``.
    """
    ck = 1.0 + math.sqrt(kappa + 1.0)
    first = sigma_hat * ck * np.sqrt(np.log(n_i))
    second = math.sqrt(1.0 + a) * np.sqrt(np.asarray(n_j) / n_i * math.log(n))
    return first + (second if literal_threshold else sigma_hat * second)


def select_interval(data, x, kappa=2, a=1.05, m=25, sigma_hat=1.0, literal_threshold=False, grid=None):
    """Interval with the largest count whose fit passes every sub-interval test.

    For grid intervals ``J`` strictly inside ``I`` the test is
    ``max_j |(H_J (theta_I - theta_J))_j| <= T_{I,J}``.  Ties in count are
    broken by larger length, then by the leftmost lower endpoint.

    Candidates failing against a sub-interval ``J`` found while checking an
    earlier candidate are discarded in bulk: every remaining candidate
    containing ``J`` is tested against it first.  This only prunes on real
    violations, so the result equals the exhaustive scan.
    """
    if m < kappa + 1:
        raise ValueError("m must be >= kappa + 1")
    if not sigma_hat >= 0.0:
        raise ValueError("sigma_hat must be >= 0")
    if grid is None:
        grid = build_interval_grid(data, x, a, m)
    tab = _IntervalTables(data, grid, kappa)
    nl, nr = tab.count.shape
    n = data.n
    k1 = kappa + 1
    hj = tab.hmat
    own = np.einsum("abjl,abl->abj", hj, tab.theta)  # H_J theta_J
    # contiguous 2-D planes: hp[j][l] = H[..., j, l], op[j] = (H theta)[..., j]
    hp = [[np.ascontiguousarray(hj[..., j, l]) for l in range(k1)] for j in range(k1)]
    op = [np.ascontiguousarray(own[..., j]) for j in range(k1)]
    tp = [np.ascontiguousarray(tab.theta[..., l]) for l in range(k1)]
    ck = 1.0 + math.sqrt(kappa + 1.0)
    t_first = sigma_hat * ck * np.sqrt(np.log(tab.count))
    t_scale = math.sqrt((1.0 + a) * math.log(n)) * np.sqrt(tab.count)
    if not literal_threshold:
        t_scale = sigma_hat * t_scale

    def against_subs(ai, bi):
        """Failure mask of candidate (ai, bi) against its lower-left block of J."""
        blk = (slice(0, ai + 1), slice(0, bi + 1))
        th = tab.theta[ai, bi]
        thr = t_first[ai, bi] + t_scale[blk] / math.sqrt(tab.count[ai, bi])
        for j in range(k1):
            acc = th[0] * hp[j][0][blk] - op[j][blk]
            for l in range(1, k1):
                acc += th[l] * hp[j][l][blk]
            fail = np.abs(acc) > thr
            fail[ai, bi] = False
            if fail.any():
                return fail
        return fail

    def against_sup(ja, jb):
        """Failure mask of every candidate in the upper-right block against J = (ja, jb)."""
        blk = (slice(ja, None), slice(jb, None))
        thr = t_first[blk] + t_scale[ja, jb] / np.sqrt(tab.count[blk])
        fail = np.zeros(tab.count[blk].shape, dtype=bool)
        for j in range(k1):
            h = hj[ja, jb, j]
            acc = h[0] * tp[0][blk] - op[j][ja, jb]
            for l in range(1, k1):
                acc += h[l] * tp[l][blk]
            fail |= np.abs(acc) > thr
        fail[0, 0] = False
        return fail

    key = np.lexsort((tab.lo.ravel(), -tab.length.ravel(), -tab.count.ravel()))
    alive = np.ones((nl, nr), dtype=bool)
    flat_alive = alive.ravel()
    rejections = {}
    tested = 0
    chosen = None
    pos = 0
    while pos < key.size:
        pos += int(np.argmax(flat_alive[key[pos:]]))
        flat = int(key[pos])
        if not flat_alive[flat]:
            break
        ai, bi = divmod(flat, nr)
        tested += 1
        fail = against_subs(ai, bi)
        if not fail.any():
            chosen = (ai, bi)
            break
        alive[ai, bi] = False
        ja, jb = np.unravel_index(int(np.argmin(np.where(fail, _rank(fail.shape), np.iinfo(np.int64).max))), fail.shape)
        rejections[(float(tab.lo[ai, bi]), float(tab.hi[ai, bi]))] = (
            float(tab.lo[ja, jb]),
            float(tab.hi[ja, jb]),
        )
        # every candidate containing the violator is checked against it
        alive[ja:, jb:] &= ~against_sup(ja, jb)
    admissible = chosen is not None
    if chosen is None:
        chosen = (0, 0)
    ai, bi = chosen
    w = Interval(float(tab.lo[ai, bi]), float(tab.hi[ai, bi]), float(x))
    return SelectionResult(w, fit_local(data, w, kappa, "raw"), tested, rejections, admissible)


@dataclass
class IdealBandwidth:
    h: float
    count: int
    rate: float
    h_grid: Optional[float] = None


def ideal_bandwidth(data, x0, modulus, sigma, n=None, grid=None):
    """Smallest ``h`` with ``omega(h) >= sigma sqrt(log n / N_h)``.

    ``N_h`` is a right-continuous step function of ``h`` jumping at the data
    distances, so on each step the condition first holds either at the step
    start or where ``omega`` reaches the step's level.  The returned rate is
    ``sigma sqrt(log n / N)`` at the largest grid value ``<= h`` (at ``h``
    itself when no grid is given).

    Raises
    ------
    Undefined
        If ``omega(1) < sigma sqrt(log n / n)``.
    """
    n = data.n if n is None else n
    ln = math.log(n)
    top = modulus.increasing_below
    if modulus(top) < sigma * math.sqrt(ln / n):
        raise Undefined("omega(1) < sigma sqrt(log n / n)")
    dist = np.sort(np.abs(data.xs - x0))
    h_star = None
    for i in range(dist.size):
        if i + 1 < dist.size and dist[i + 1] == dist[i]:
            continue
        count = i + 1
        start = dist[i]
        end = dist[i + 1] if i + 1 < dist.size else math.inf
        need = modulus.inverse(sigma * math.sqrt(ln / count))
        h = max(start, need)
        if h < end and h <= 1.0:
            h_star = h
            break
    if h_star is None:
        raise Undefined("condition never met on [0, 1]")
    hg = h_star
    if grid is not None:
        below = grid.values[grid.values <= h_star]
        if below.size == 0:
            raise Undefined("no grid value below the ideal bandwidth")
        hg = float(below[-1])
    count = int(np.searchsorted(dist, hg, side="right"))
    return IdealBandwidth(float(h_star), count, sigma * math.sqrt(ln / count), hg if grid is not None else None)


def estimate_sigma(data):
    """Noise level from successive differences of responses ordered by design."""
    if data.n < 2:
        raise ValueError("need n >= 2")
    d = np.diff(data.ys)
    return math.sqrt(float(np.dot(d, d)) / (2.0 * (data.n - 1)))
