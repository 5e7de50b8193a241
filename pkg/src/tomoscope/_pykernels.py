"""Pure-Python/NumPy versions of the numerical kernels.

These mirror ``_ckernels.pyx`` call for call and are used whenever the
compiled extension is unavailable or ``TOMOSCOPE_PURE_PYTHON=1`` is set.
"""

import math

import numpy as np

CLAMP = 1e-14


class ConvergenceError(RuntimeError):
    pass


def jacobi_eigh(a, tol=1e-13, max_sweeps=100):
    """Cyclic Jacobi diagonalization of a complex Hermitian matrix.

    Parameters
    ----------
    a : (n, n) array_like
        Hermitian matrix. Not modified.
    tol : float
        Convergence threshold on the off-diagonal Frobenius norm, relative
        to the Frobenius norm of ``a``.
    max_sweeps : int
        Sweeps allowed before giving up.

    Returns
    -------
    evals : (n,) ndarray of float
        Unsorted eigenvalues.
    evecs : (n, n) ndarray of complex
        Eigenvectors as columns, in the same order as ``evals``.
    sweeps : int
        Number of sweeps performed.
    """
    a = np.array(a, dtype=np.complex128, copy=True)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    for sweep in range(max_sweeps + 1):
        off = math.sqrt(float(np.sum(np.abs(a - np.diag(np.diag(a))) ** 2)))
        if off <= tol * scale:
            return np.real(np.diag(a)).copy(), v, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r == 0.0:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                ph = np.conj(apq / r)
                theta = (aqq - app) / (2.0 * r)
                if abs(theta) > 1e150:
                    t = 0.5 / abs(theta)
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # G = diag phase . real rotation; A <- G^H A G, V <- V G
                gqp = -s * ph
                gqq = c * ph
                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = c * colp + gqp * colq
                a[:, q] = s * colp + gqq * colq
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = c * rowp + np.conj(gqp) * rowq
                a[q, :] = s * rowp + np.conj(gqq) * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp + gqp * vq
                v[:, q] = s * vp + gqq * vq
    raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")


def _neg_plogp_sum(p):
    q = np.where(p > CLAMP, p, 0.0)
    return -float(np.sum(q * np.log2(np.where(q > 0.0, q, 1.0))))


def section_stats(w, da, db, xa, xb):
    """Single-section reductions shared by every indicator.

    ``w`` is a joint density (or density-mass) over axes a and b with
    integration weights ``da`` and ``db``; ``xa``/``xb`` are the values
    of the two measured variables.

    Returns a tuple ``(s_joint, s_a, s_b, eta_ab, eta_a, eta_b, bhatt,
    mean_a, mean_b, var_a, var_b, cov, mass)``.
    """
    w = np.asarray(w, dtype=np.float64)
    xa = np.asarray(xa, dtype=np.float64)
    xb = np.asarray(xb, dtype=np.float64)
    cell = da * db
    wa = w.sum(axis=1) * db
    wb = w.sum(axis=0) * da
    mass = float(w.sum()) * cell
    s_joint = _neg_plogp_sum(w) * cell
    s_a = _neg_plogp_sum(wa) * da
    s_b = _neg_plogp_sum(wb) * db
    eta_ab = float(np.sum(w * w)) * cell
    eta_a = float(np.sum(wa * wa)) * da
    eta_b = float(np.sum(wb * wb)) * db
    bhatt = float(np.sum(np.sqrt(w * np.outer(wa, wb)))) * cell
    mean_a = float(np.sum(wa * xa)) * da
    mean_b = float(np.sum(wb * xb)) * db
    da_ = xa - mean_a
    db_ = xb - mean_b
    var_a = float(np.sum(wa * da_ * da_)) * da
    var_b = float(np.sum(wb * db_ * db_)) * db
    cov = float(da_ @ w @ db_) * cell
    return (s_joint, s_a, s_b, eta_ab, eta_a, eta_b, bhatt,
            mean_a, mean_b, var_a, var_b, cov, mass)
