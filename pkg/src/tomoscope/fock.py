"""Fixed-excitation-number Fock spaces.

Two families of subspace are supported:

``cv``
    Two bosonic modes A and B with labels ``(k, N - k)``.
``hybrid``
    One bosonic field mode and ``M`` qubits, labels ``(n_f, b_1, ..., b_M)``
    with ``n_f + sum(b) == N``. Qubit 1 is the most significant bit and
    ``b_p = 1`` is the excited state.

Labels are kept in lexicographic order; every vector and matrix in the
package inherits that order.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

CV = "cv"
HYBRID = "hybrid"

EIG_CLAMP = 1e-14


class OperatorSpecError(ValueError):
    """Malformed symbolic operator string."""


@dataclass(frozen=True)
class SubspaceBasis:
    kind: str
    N: int
    M: int | None
    labels: tuple[tuple[int, ...], ...]
    index: dict = field(compare=False, repr=False, hash=False)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def __len__(self):
        return len(self.labels)

    def label_index(self, label) -> int:
        return self.index[tuple(label)]


@lru_cache(maxsize=None)
def enumerate_basis(kind: str, N: int, M: int | None = None) -> SubspaceBasis:
    """Enumerate the product basis of the ``N``-excitation subspace.

    >>> enumerate_basis("cv", 2).labels
    ((0, 2), (1, 1), (2, 0))
    """
    if N < 0:
        raise ValueError(f"N must be non-negative, got {N}")
    if kind == CV:
        labels = tuple((k, N - k) for k in range(N + 1))
        M = None
    elif kind == HYBRID:
        if M is None or M < 1:
            raise ValueError("hybrid basis needs M >= 1 qubits")
        labels = tuple(
            sorted((N - sum(bits), *bits) for bits in product((0, 1), repeat=M) if sum(bits) <= N)
        )
    else:
        raise ValueError(f"unknown basis kind {kind!r}")
    return SubspaceBasis(kind, N, M, labels, {lab: i for i, lab in enumerate(labels)})


@dataclass(frozen=True)
class PureState:
    basis: SubspaceBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.basis.dim,):
            raise ValueError(f"amplitude vector has shape {amps.shape}, basis has {self.basis.dim} labels")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, basis, amplitudes, normalize=True):
        amps = np.asarray(amplitudes, dtype=np.complex128)
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(basis, amps)

    @classmethod
    def from_labels(cls, basis, coeffs: dict):
        """Build ``sum coeff |label>`` and normalize."""
        amps = np.zeros(basis.dim, dtype=np.complex128)
        for label, c in coeffs.items():
            amps[basis.label_index(label)] += c
        return cls.from_amplitudes(basis, amps)

    @classmethod
    def product(cls, basis, label):
        return cls.from_labels(basis, {tuple(label): 1.0})


@dataclass(frozen=True)
class DensityMatrix:
    levels: tuple
    matrix: np.ndarray

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def check(self, tol=1e-12):
        m = self.matrix
        if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
            raise AssertionError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > tol:
            raise AssertionError(f"trace {np.trace(m).real!r} != 1")
        if np.linalg.eigvalsh(m).min(initial=0.0) < -tol:
            raise AssertionError("density matrix has negative eigenvalues")
        return True


# --- ladder operators -------------------------------------------------------

_TOKEN = re.compile(
    r"""^(?:
        (?P<boson>[ab])(?P<dag>†|\^?dag|\+|d)? |
        (?P<qubit>sp|sm|sz|s\+|s-)\[?(?P<site>\d+)\]?
    )$""",
    re.VERBOSE,
)


@lru_cache(maxsize=256)
def parse_op(spec: str) -> tuple:
    """Parse a product of ladder operators into a tuple of factors.

    Tokens are separated by whitespace or ``*``; ``a``, ``b`` annihilate,
    ``a†``/``adag``/``a^dag``/``a+`` create, and ``sp[p]``, ``sm[p]``,
    ``sz[p]`` are the raising, lowering and half-Pauli-z operators of qubit
    ``p`` (1-based). The rightmost factor acts first.
    """
    tokens = [t for t in re.split(r"[\s*]+", spec.strip()) if t]
    if not tokens:
        raise OperatorSpecError(f"empty operator spec {spec!r}")
    factors = []
    for tok in tokens:
        m = _TOKEN.match(tok)
        if m is None:
            raise OperatorSpecError(f"cannot parse token {tok!r} in {spec!r}")
        if m.group("boson"):
            factors.append((m.group("boson"), bool(m.group("dag"))))
        else:
            kind = {"s+": "sp", "s-": "sm"}.get(m.group("qubit"), m.group("qubit"))
            site = int(m.group("site"))
            if site < 1:
                raise OperatorSpecError(f"qubit index must be >= 1 in {tok!r}")
            factors.append((kind, site))
    return tuple(factors)


def apply_op(factors, kind: str, label):
    """Apply parsed factors to a basis label. Returns ``(coeff, label)``
    or ``None`` when the result vanishes."""
    occ = list(label)
    coeff = 1.0
    for name, arg in reversed(factors):
        if name in ("a", "b"):
            if kind == HYBRID and name == "b":
                raise OperatorSpecError("mode b does not exist in a hybrid basis")
            slot = 0 if name == "a" else 1
            n = occ[slot]
            if arg:
                coeff *= math.sqrt(n + 1)
                occ[slot] = n + 1
            else:
                if n == 0:
                    return None
                coeff *= math.sqrt(n)
                occ[slot] = n - 1
        else:
            if kind != HYBRID:
                raise OperatorSpecError(f"qubit operator {name} on a CV basis")
            if arg > len(occ) - 1:
                raise OperatorSpecError(f"qubit {arg} out of range")
            bit = occ[arg]
            if name == "sz":
                coeff *= 0.5 if bit else -0.5
            elif name == "sp":
                if bit:
                    return None
                occ[arg] = 1
            else:
                if not bit:
                    return None
                occ[arg] = 0
    return coeff, tuple(occ)


def ladder_matrix_element(basis: SubspaceBasis, op: str, row: int, col: int) -> complex:
    """``<row| op |col>`` for a symbolic ladder-operator product.

    Transitions leaving the subspace give zero.
    """
    if not (0 <= row < basis.dim and 0 <= col < basis.dim):
        raise IndexError(f"indices ({row}, {col}) out of range for dimension {basis.dim}")
    res = apply_op(parse_op(op), basis.kind, basis.labels[col])
    if res is None or res[1] != basis.labels[row]:
        return 0j
    return complex(res[0])


def operator_matrix(basis: SubspaceBasis, op: str) -> np.ndarray:
    """Dense matrix of ``op`` restricted to ``basis`` (off-subspace parts dropped)."""
    factors = parse_op(op)
    mat = np.zeros((basis.dim, basis.dim))
    for j, lab in enumerate(basis.labels):
        res = apply_op(factors, basis.kind, lab)
        if res is None:
            continue
        i = basis.index.get(res[1])
        if i is not None:
            mat[i, j] += res[0]
    return mat


def number_operator(basis: SubspaceBasis) -> np.ndarray:
    """Total excitation number; ``N`` times the identity on a fixed-N basis
    by construction, but computed from the labels so it is a real check."""
    if basis.kind == CV:
        return np.diag([float(sum(lab)) for lab in basis.labels])
    return np.diag([float(lab[0] + sum(lab[1:])) for lab in basis.labels])


# --- partial trace ----------------------------------------------------------

_PARTS = {CV: ("A", "B"), HYBRID: ("field", "qubits")}


def coefficient_matrix(state: PureState, part: str):
    """Reshape the amplitudes into ``psi[i, j]`` with ``i`` running over the
    local levels of ``part`` and ``j`` over its complement."""
    basis = state.basis
    if part not in _PARTS[basis.kind]:
        raise ValueError(f"part {part!r} is not valid for a {basis.kind} basis; use one of {_PARTS[basis.kind]}")
    if basis.kind == CV:
        keep = [lab[0] for lab in basis.labels] if part == "A" else [lab[1] for lab in basis.labels]
        other = [lab[1] for lab in basis.labels] if part == "A" else [lab[0] for lab in basis.labels]
    else:
        field_ = [lab[0] for lab in basis.labels]
        bits = [lab[1:] for lab in basis.labels]
        keep, other = (field_, bits) if part == "field" else (bits, field_)
    levels = sorted(set(keep))
    rest = sorted(set(other))
    li = {v: i for i, v in enumerate(levels)}
    ri = {v: i for i, v in enumerate(rest)}
    psi = np.zeros((len(levels), len(rest)), dtype=np.complex128)
    for amp, k, o in zip(state.amplitudes, keep, other):
        psi[li[k], ri[o]] = amp
    return tuple(levels), psi


def reduced_density(state: PureState, part: str) -> DensityMatrix:
    """Reduced density matrix of one tensor factor.

    For a CV basis the local levels are the occupations ``0..N`` of the
    chosen mode; for a hybrid basis they are photon numbers (``field``) or
    qubit bitstrings (``qubits``) that actually occur in the subspace.
    """
    levels, psi = coefficient_matrix(state, part)
    if state.basis.kind == CV:
        # label k carries occupation k in A and N-k in B: rho is diagonal
        rho = np.diag(np.abs(state.amplitudes) ** 2).astype(np.complex128)
        if part == "B":
            rho = rho[::-1, ::-1]
        return DensityMatrix(tuple(range(state.basis.N + 1)), rho)
    rho = psi @ psi.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(levels, rho)


def entropy_bits(probabilities) -> float:
    """Shannon entropy in bits, ignoring entries at or below ``EIG_CLAMP``."""
    p = np.asarray(probabilities, dtype=float)
    p = p[p > EIG_CLAMP]
    return float(-np.sum(p * np.log2(p)))


def svne(state: PureState, part: str | None = None) -> float:
    """Subsystem von Neumann entropy ``-Tr(rho log2 rho)`` in bits."""
    if part is None:
        part = _PARTS[state.basis.kind][0]
    rho = reduced_density(state, part)
    return max(entropy_bits(np.linalg.eigvalsh(rho.matrix)), 0.0)
