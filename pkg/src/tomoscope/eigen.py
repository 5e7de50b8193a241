"""Dense Hermitian eigensystems and their continuation along sweeps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from tomoscope._kernels import ConvergenceError, jacobi_eigh
from tomoscope.fock import PureState, SubspaceBasis

DEGENERACY_TOL = 1e-9


class NonHermitianError(ValueError):
    pass


@dataclass(frozen=True)
class HermitianOperator:
    basis: SubspaceBasis
    matrix: np.ndarray

    def commutator_with(self, other: np.ndarray) -> np.ndarray:
        return self.matrix @ other - other @ self.matrix


@dataclass(frozen=True)
class EigenSystem:
    """Ascending energies and the matching eigenvectors (columns)."""

    basis: SubspaceBasis
    energies: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.energies)

    def state(self, k: int) -> PureState:
        return PureState(self.basis, self.vectors[:, k])

    @property
    def states(self) -> list[PureState]:
        return [self.state(k) for k in range(self.dim)]


def fix_phase(vec: np.ndarray) -> np.ndarray:
    """Rotate ``vec`` so its largest-magnitude entry is real and positive.

    Entries within 1e-12 of the maximum count as ties; the lowest index wins.
    """
    mags = np.abs(vec)
    top = mags.max()
    if top == 0.0:
        return vec
    i = int(np.argmax(mags >= top - 1e-12 * max(top, 1.0)))
    return vec * (abs(vec[i]) / vec[i])


def hermitian_eigensystem(op: HermitianOperator, tol: float = 1e-13, max_sweeps: int = 100) -> EigenSystem:
    h = np.asarray(op.matrix, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise NonHermitianError(f"expected a square matrix, got shape {h.shape}")
    asym = np.max(np.abs(h - h.conj().T), initial=0.0)
    if asym > 1e-12 * max(1.0, np.max(np.abs(h), initial=0.0)):
        raise NonHermitianError(f"matrix is not Hermitian (max asymmetry {asym:.3e})")
    evals, evecs, _ = jacobi_eigh(h, tol, max_sweeps)
    order = np.argsort(evals, kind="stable")
    evals = evals[order]
    evecs = evecs[:, order]
    out = np.empty_like(evecs)
    for k in range(evecs.shape[1]):
        v = evecs[:, k]
        nrm = np.linalg.norm(v)
        if abs(nrm - 1.0) > 1e-13:
            v = v / nrm
        out[:, k] = fix_phase(v)
    return EigenSystem(op.basis, evals, out)


def _clusters(energies, tol):
    groups, start = [], 0
    for i in range(1, len(energies) + 1):
        if i == len(energies) or energies[i] - energies[i - 1] >= tol:
            groups.append(list(range(start, i)))
            start = i
    return groups


def track_states(previous: EigenSystem, current: EigenSystem, tol: float = DEGENERACY_TOL) -> EigenSystem:
    """Relabel ``current`` so that label ``k`` continues ``previous`` label ``k``.

    Inside clusters of (near-)degenerate energies the eigenvectors are first
    rotated onto the previous states that carry most of their weight, which
    reproduces continuous combinations through exact level crossings. The
    result is a permutation of an exact eigensystem of the current matrix.
    """
    if previous.dim != current.dim:
        raise ValueError(f"dimension mismatch: {previous.dim} vs {current.dim}")
    vp = previous.vectors
    vc = current.vectors.copy()
    energies = current.energies.copy()
    for group in _clusters(energies, tol):
        if len(group) < 2:
            continue
        block = vc[:, group]
        weight = np.sum(np.abs(block.conj().T @ vp) ** 2, axis=0)
        chosen = np.sort(np.argsort(-weight, kind="stable")[: len(group)])
        overlap = block.conj().T @ vp[:, chosen]
        u, _, wh = np.linalg.svd(overlap)
        vc[:, group] = block @ (u @ wh)
    fid = np.abs(vp.conj().T @ vc) ** 2
    _, perm = linear_sum_assignment(-fid)
    vc = vc[:, perm]
    energies = energies[perm]
    for k in range(vc.shape[1]):
        ov = np.vdot(vp[:, k], vc[:, k])
        if abs(ov) > 1e-14:
            vc[:, k] *= abs(ov) / ov
    return EigenSystem(current.basis, energies, vc)


def _degenerate(es: EigenSystem, tol: float) -> bool:
    return bool(np.any(np.diff(es.energies) < tol))


def track_sequence(systems, tol: float = DEGENERACY_TOL) -> list[EigenSystem]:
    """Continuity-track a list of eigensystems along a parameter path.

    Labels are fixed by energy order at the first point without degenerate
    levels and carried outward in both directions. Degenerate points thus
    inherit the limits of their neighbours instead of an arbitrary basis.
    """
    systems = list(systems)
    if not systems:
        return []
    anchor = next((i for i, es in enumerate(systems) if not _degenerate(es, tol)), 0)
    out = [None] * len(systems)
    out[anchor] = systems[anchor]
    for i in range(anchor + 1, len(systems)):
        out[i] = track_states(out[i - 1], systems[i], tol)
    for i in range(anchor - 1, -1, -1):
        out[i] = track_states(out[i + 1], systems[i], tol)
    return out


__all__ = [
    "ConvergenceError",
    "EigenSystem",
    "HermitianOperator",
    "NonHermitianError",
    "fix_phase",
    "hermitian_eigensystem",
    "track_sequence",
    "track_states",
]
