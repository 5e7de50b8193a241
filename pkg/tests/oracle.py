"""Independent brute-force reference implementations used to pin test values.

Nothing here imports the package's tomography or indicator code; wave
functions come from scipy's Hermite polynomials and every integral is an
explicit sum.
"""

import math

import numpy as np
from scipy.special import eval_hermite, gammaln


def psi(n, x):
    log_norm = -0.25 * math.log(math.pi) - 0.5 * (n * math.log(2.0) + gammaln(n + 1))
    return math.exp(log_norm) * eval_hermite(n, x) * np.exp(-0.5 * x * x)


def cv_density(coeffs, N, theta_a, theta_b, x):
    """w(Xa, Xb) for sum_k c_k |k, N-k>."""
    amp = np.zeros((len(x), len(x)), dtype=complex)
    for k, c in enumerate(coeffs):
        if c == 0:
            continue
        phase = np.exp(1j * (k * theta_a + (N - k) * theta_b))
        amp += c * phase * np.outer(psi(k, x), psi(N - k, x))
    return np.abs(amp) ** 2


def hybrid_density(labels, coeffs, theta_f, polar, azim, M, x):
    """w[X, m] for a field-qubit state measured along one common qubit axis."""
    c, s = math.cos(polar / 2), math.sin(polar / 2)
    ph = complex(math.cos(azim), math.sin(azim))
    # kets as [g, e] components: |n,+> = c|e> + ph s|g>, |n,-> = c|g> - conj(ph) s|e>
    kets = {1: (ph * s, c), 0: (c, -ph.conjugate() * s)}
    u = {(m, b): complex(kets[m][b]).conjugate() for m in (0, 1) for b in (0, 1)}
    out = np.zeros((len(x), 2 ** M))
    for m in range(2 ** M):
        mbits = [(m >> (M - 1 - p)) & 1 for p in range(M)]
        amp = np.zeros(len(x), dtype=complex)
        for lab, cf in zip(labels, coeffs):
            nf, bits = lab[0], lab[1:]
            ov = 1.0 + 0j
            for mb, bb in zip(mbits, bits):
                ov *= u[(mb, bb)]
            amp += cf * ov * np.exp(1j * nf * theta_f) * psi(nf, x)
        out[:, m] = np.abs(amp) ** 2
    return out


def _h(p, cell):
    p = p[p > 1e-14]
    return -float(np.sum(p * np.log2(p))) * cell


def indicators(w, da, db, xa, xb):
    wa = w.sum(axis=1) * db
    wb = w.sum(axis=0) * da
    tei = _h(wa, da) + _h(wb, db) - _h(w.ravel(), da * db)
    ipr = 1 + np.sum(w * w) * da * db - np.sum(wa * wa) * da - np.sum(wb * wb) * db
    bd = -math.log2(np.sum(np.sqrt(w * np.outer(wa, wb))) * da * db)
    ma = np.sum(wa * xa) * da
    mb = np.sum(wb * xb) * db
    cov = np.sum(w * np.outer(xa - ma, xb - mb)) * da * db
    va = np.sum(wa * (xa - ma) ** 2) * da
    vb = np.sum(wb * (xb - mb) ** 2) * db
    pcc = abs(cov) / math.sqrt(va * vb) if va > 1e-20 and vb > 1e-20 else None
    return {"tei": tei, "ipr": float(ipr), "bd": bd, "pcc": pcc}
