"""Slow reference implementations used to check the package.

Everything here is written from the defining formulas with explicit loops
and general-purpose numerics (numpy eigen/least squares, mpmath
quadrature); nothing calls into the package's own solvers.
"""

import math

import mpmath
import numpy as np


# -- linear algebra --------------------------------------------------------


def charpoly_min_root(m):
    """Smallest real root of ``det(m - t I)`` found by bracketing bisection."""
    m = np.asarray(m, dtype=float)
    coeffs = np.poly(m)
    bound = float(np.max(np.sum(np.abs(m), axis=1))) + 1.0
    ts = np.linspace(-bound, bound, 20001)
    vals = np.polyval(coeffs, ts)
    for k in range(ts.size - 1):
        if vals[k] == 0.0:
            return float(ts[k])
        if vals[k] * vals[k + 1] < 0.0:
            lo, hi = ts[k], ts[k + 1]
            flo = vals[k]
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                fm = np.polyval(coeffs, mid)
                if fm * flo <= 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            return float(0.5 * (lo + hi))
    raise AssertionError("no sign change found")


def cofactor_solve_3x3(m, b):
    m = np.asarray(m, dtype=float)
    det = (
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )
    cof = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(m, i, 0), j, 1)
            cof[i, j] = (-1) ** (i + j) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    return cof.T @ np.asarray(b, dtype=float) / det


# -- local fits -------------------------------------------------------------


def naive_system(xs, ys, center, lo, hi, kappa, norm):
    """Gram matrix and right-hand side by a double loop over (j, l)."""
    idx = [i for i in range(len(xs)) if lo <= xs[i] <= hi]
    k1 = kappa + 1
    mat = np.zeros((k1, k1))
    rhs = np.zeros(k1)
    for j in range(k1):
        for l in range(k1):
            mat[j, l] = sum((xs[i] - center) ** (j + l) for i in idx)
        rhs[j] = sum(ys[i] * (xs[i] - center) ** j for i in idx)
    if norm == "count" and idx:
        mat /= len(idx)
        rhs /= len(idx)
    return mat, rhs, len(idx)


def naive_fit(xs, ys, center, lo, hi, kappa, norm="count"):
    """Coefficients of the (ridge-corrected in count mode) local fit."""
    mat, rhs, cnt = naive_system(xs, ys, center, lo, hi, kappa, norm)
    if cnt == 0:
        return np.zeros(kappa + 1), cnt
    if norm == "count":
        floor = cnt**-0.5
        if np.linalg.eigvalsh(mat)[0] <= floor:
            mat = mat + floor * np.eye(kappa + 1)
        return np.linalg.solve(mat, rhs), cnt
    sel = [(x, y) for x, y in zip(xs, ys) if lo <= x <= hi]
    v = np.array([[(x - center) ** j for j in range(kappa + 1)] for x, _ in sel])
    return np.linalg.lstsq(v, np.array([y for _, y in sel]), rcond=None)[0], cnt


def poly_at(theta, t):
    return sum(c * t**j for j, c in enumerate(theta))


# -- symmetric selector -----------------------------------------------------


def naive_symmetric_grid(xs, x0, kind, a):
    n = len(xs)
    dist = sorted(abs(x - x0) for x in xs)
    if kind == "arith":
        idx = [2 + math.floor(i * a) for i in range(1, math.floor((n - 2) / a) + 1)]
    else:
        idx = []
        i = 1
        while a**i <= n:
            idx.append(math.floor(a**i))
            i += 1
    return sorted({dist[k - 1] for k in idx if 1 <= k <= n})


def naive_threshold(n, n_hp, n_h, kappa, p, kind, a):
    ck = 1 + math.sqrt(kappa + 1)
    cp = 8 * (1 + 2 * p)
    first = ck * math.sqrt(cp * math.log(n_h) / n_hp)
    if kind == "arith":
        second = math.sqrt(math.log(n) / (n_h - a))
    else:
        second = math.sqrt((1 + a) * math.log(n) / n_h)
    return first + second


def exhaustive_symmetric(xs, ys, x0, kappa, p, kind, a, sigma):
    """Largest grid radius passing every (h', j) test, re-evaluated by direct sums.

    ``<f_h - f_h', phi_j>_h'`` is the average over the points of the
    ``h'`` window of ``(P_h - P_h')(X - x0) * (X - x0)**j``.  Returns
    ``(h, admissible)``.
    """
    grid = naive_symmetric_grid(xs, x0, kind, a)
    fits = {h: naive_fit(xs, ys, x0, x0 - h, x0 + h, kappa) for h in grid}
    n = len(xs)
    for k in range(len(grid) - 1, -1, -1):
        h = grid[k]
        th, n_h = fits[h]
        ok = True
        for hp in grid[:k]:
            thp, n_hp = fits[hp]
            pts = [x - x0 for x in xs if x0 - hp <= x <= x0 + hp]
            thr = naive_threshold(n, n_hp, n_h, kappa, p, kind, a)
            for j in range(kappa + 1):
                inner = sum((poly_at(th, t) - poly_at(thp, t)) * t**j for t in pts) / n_hp
                norm = math.sqrt(sum(t ** (2 * j) for t in pts) / n_hp)
                if abs(inner) > sigma * norm * thr:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return h, True
    return grid[0], False


# -- interval selector ------------------------------------------------------


def naive_seed(xs, x, m):
    """The ``m`` points nearest ``x``, left neighbour first on ties (0-based)."""
    order = sorted(range(len(xs)), key=lambda i: (abs(xs[i] - x), i))
    chosen = order[:m]
    return min(chosen), max(chosen)


def naive_interval_grid(xs, x, a, m):
    n = len(xs)
    l0, r0 = naive_seed(xs, x, m)
    l1, r1 = l0 + 1, r0 + 1
    left, right = set(), set()
    i = 0
    while a**i <= l1 + 1:
        left.add(max(l1 + 1 - math.floor(a**i), 1))
        i += 1
    i = 0
    while a**i <= n - r1 + 1:
        right.add(min(r1 - 1 + math.floor(a**i), n))
        i += 1
    lo_vals = sorted({xs[k - 1] for k in left})
    hi_vals = sorted({xs[k - 1] for k in right})
    return lo_vals, hi_vals


def exhaustive_interval(xs, ys, x, kappa, a, m, sigma, literal_threshold=False):
    """Winner of the interval rule with every (I, J) test evaluated by direct sums.

    ``(H_J (theta_I - theta_J))_j`` is computed as
    ``sum_{X in J} (P_I - P_J)(X - x) (X - x)**j / sqrt(sum_{X in J} (X - x)**(2j))``.
    Returns ``((lo, hi), admissible)``.
    """
    n = len(xs)
    lo_vals, hi_vals = naive_interval_grid(xs, x, a, m)
    cands = [(lo, hi) for lo in lo_vals for hi in hi_vals]
    fits = {c: naive_fit(xs, ys, x, c[0], c[1], kappa, "raw") for c in cands}
    pts = {c: [xv - x for xv in xs if c[0] <= xv <= c[1]] for c in cands}
    ck = 1 + math.sqrt(kappa + 1)

    def passes(ci):
        th_i, n_i = fits[ci]
        for cj in cands:
            if cj == ci or not (cj[0] >= ci[0] and cj[1] <= ci[1]):
                continue
            th_j, n_j = fits[cj]
            second = math.sqrt(1 + a) * math.sqrt(n_j / n_i * math.log(n))
            thr = sigma * ck * math.sqrt(math.log(n_i)) + (second if literal_threshold else sigma * second)
            for j in range(kappa + 1):
                norm2 = sum(t ** (2 * j) for t in pts[cj])
                if norm2 == 0.0:
                    continue
                stat = sum((poly_at(th_i, t) - poly_at(th_j, t)) * t**j for t in pts[cj]) / math.sqrt(norm2)
                if abs(stat) > thr:
                    return False
        return True

    good = [c for c in cands if passes(c)]
    if not good:
        return (lo_vals[-1], hi_vals[0]), False
    best = max(good, key=lambda c: (fits[c][1], c[1] - c[0], -c[0]))
    return best, True


# -- design and rate oracles -----------------------------------------------


def quad(fn, lo, hi, points=()):
    mpmath.mp.dps = 30
    return float(mpmath.quad(fn, [lo, *points, hi]))


def _side(fn, x0, d):
    # nodes that round onto the pole carry a vanishing weight u**4
    x = x0 + d
    return 0 if x == x0 else fn(x)


def quad_about(fn, x0, lo, hi):
    """Integral of ``fn`` over ``[lo, hi]`` split at ``x0``.

    Each side is integrated in ``u`` with ``|x - x0| = u**5``, which smooths
    an integrable power singularity at ``x0``.
    """
    mpmath.mp.dps = 60
    x0 = mpmath.mpf(x0)
    total = mpmath.mpf(0)
    if lo < x0:
        right = min(hi, x0)
        a, b = (x0 - right) ** (mpmath.mpf(1) / 5), (x0 - lo) ** (mpmath.mpf(1) / 5)
        total += mpmath.quad(lambda u: _side(fn, x0, -(u**5)) * 5 * u**4, [a, b])
    if hi > x0:
        left = max(lo, x0)
        a, b = (left - x0) ** (mpmath.mpf(1) / 5), (hi - x0) ** (mpmath.mpf(1) / 5)
        total += mpmath.quad(lambda u: _side(fn, x0, u**5) * 5 * u**4, [a, b])
    return float(total)


def power_pdf(x0, beta):
    z = x0 ** (beta + 1) + (1 - x0) ** (beta + 1)
    return lambda x: (beta + 1) / z * abs(x - x0) ** beta


def bisect_increasing(fn, target, lo, hi, iters=200):
    """Root of ``fn(t) = target`` for increasing ``fn`` on ``[lo, hi]``."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def inverse_g(a, b, h):
    """Inverse of ``G(t) = t**b log(1/t)**a`` near 0 by bisection in ``log t``."""
    mpmath.mp.dps = 50

    def g_log(u):  # log G(e^u)
        return b * u + a * mpmath.log(-u)

    target = mpmath.log(h)
    lo, hi = mpmath.mpf(-2000), mpmath.mpf(-2)
    # d/du log G = b + a / u > 0 on u <= -2 for the |a| <= b cases used here
    for _ in range(400):
        mid = (lo + hi) / 2
        if g_log(mid) < target:
            lo = mid
        else:
            hi = mid
    return float(mpmath.e ** ((lo + hi) / 2))
