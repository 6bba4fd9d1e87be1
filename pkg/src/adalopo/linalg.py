"""Small dense symmetric linear algebra used by the local fits.

Matrices here are at most 11 x 11 (polynomial degree <= 10), so the routines
favour robustness over speed.
"""

import math
import warnings

import numpy as np
import scipy.linalg


class SingularSystem(np.linalg.LinAlgError):
    """Raised when a local normal-equation system cannot be solved."""


def smallest_eigenvalue(m, tol=1e-14, max_sweeps=100):
    """Smallest eigenvalue of a symmetric matrix.

    Closed form for dimension <= 2, cyclic Jacobi rotations otherwise.

    Parameters
    ----------
    m : array_like, shape (d, d)
        Symmetric matrix, d <= 11.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm falls below
        ``tol`` times the Frobenius norm of ``m``.

    Returns
    -------
    float
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    d = a.shape[0]
    if d == 0:
        raise ValueError("empty matrix")
    if d == 1:
        return float(a[0, 0])
    if d == 2:
        p, q, r = a[0, 0], 0.5 * (a[0, 1] + a[1, 0]), a[1, 1]
        mid = 0.5 * (p + r)
        rad = math.hypot(0.5 * (p - r), q)
        big = mid + rad
        small = mid - rad
        # det / lambda_max avoids cancellation when lambda_min << lambda_max
        if big > 0.0 and small > 0.0:
            small = (p * r - q * q) / big
        return float(small)

    a = 0.5 * (a + a.T)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return 0.0
    for _ in range(max_sweeps):
        off = math.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/cols p, q
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
    return float(np.min(np.diag(a)))


def solve_symmetric(matrix, rhs, check=True):
    """Solve ``matrix @ x = rhs`` for a symmetric positive semidefinite matrix.

    The system is Jacobi-equilibrated (scaled by the inverse square root of
    its diagonal) before a Cholesky factorization; if that fails a pivoted
    LU factorization is tried.  The solution is accepted only if the
    residual satisfies ``||A x - b||_inf <= 1e-8 * ||b||_inf`` in the
    equilibrated scale.

    Raises
    ------
    SingularSystem
        If neither factorization yields an acceptable solution.
    """
    a = np.asarray(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float)
    diag = np.diag(a).copy()
    if np.any(diag <= 0.0):
        raise SingularSystem("non-positive diagonal entry")
    d = 1.0 / np.sqrt(diag)
    g = a * d[:, None] * d[None, :]
    gb = b * d
    z = None
    try:
        c = scipy.linalg.cho_factor(g, check_finite=True)
        z = scipy.linalg.cho_solve(c, gb)
    except (np.linalg.LinAlgError, ValueError):
        pass
    if z is None or not _residual_ok(g, z, gb):
        try:
            with np.errstate(all="raise"), warnings.catch_warnings():
                # an exactly singular pivot is reported below as SingularSystem
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                lu = scipy.linalg.lu_factor(g, check_finite=True)
                z = scipy.linalg.lu_solve(lu, gb)
        except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
            raise SingularSystem(str(exc)) from exc
    if check and not _residual_ok(g, z, gb):
        raise SingularSystem("residual check failed")
    return z * d


def _residual_ok(g, z, gb):
    if not np.all(np.isfinite(z)):
        return False
    res = np.max(np.abs(g @ z - gb)) if gb.size else 0.0
    return res <= 1e-8 * max(np.max(np.abs(gb)), 1e-300)


def solve_symmetric_batch(matrices, rhs):
    """Vectorized equilibrated solve for a stack of small SPD systems.

    Parameters
    ----------
    matrices : ndarray, shape (k, d, d)
    rhs : ndarray, shape (k, d)

    Returns
    -------
    ndarray, shape (k, d)
        Solutions; rows whose system is singular are filled with a
        least-squares solution.
    """
    a = np.asarray(matrices, dtype=float)
    b = np.asarray(rhs, dtype=float)
    diag = np.einsum("kii->ki", a)
    with np.errstate(divide="ignore"):
        d = np.where(diag > 0.0, 1.0 / np.sqrt(np.where(diag > 0.0, diag, 1.0)), 0.0)
    g = a * d[:, :, None] * d[:, None, :]
    # zero diagonal means a zero row/column; put 1 there so the block stays solvable
    idx = np.arange(a.shape[1])
    g[:, idx, idx] = np.where(diag > 0.0, g[:, idx, idx], 1.0)
    gb = b * d
    try:
        z = np.linalg.solve(g, gb[..., None])[..., 0]
    except np.linalg.LinAlgError:
        z = np.empty_like(gb)
        for k in range(g.shape[0]):
            z[k] = np.linalg.lstsq(g[k], gb[k], rcond=None)[0]
    return z * d
