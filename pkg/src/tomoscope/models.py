"""Number-conserving model Hamiltonians.

* ``BecParams`` / :func:`build_bec` - two-mode condensate in a double well,
  with the closed-form eigensystem in :func:`bec_closed_form`.
* ``AtomFieldParams`` / :func:`build_atom_field` - field mode coupled to an
  anharmonic oscillator.
* ``TcParams`` / :func:`build_tavis_cummings` - field mode coupled to a
  chain of qubits. Frequencies are in GHz (angular frequency over 2*pi);
  the common 2*pi factor does not change eigenvectors.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from tomoscope.eigen import HermitianOperator
from tomoscope.fock import CV, HYBRID, PureState, enumerate_basis, operator_matrix


@dataclass(frozen=True)
class BecParams:
    omega1: float = 0.25
    lam: float = 0.25
    omega0: float = 1.0
    U: float = 1.0

    def __post_init__(self):
        if not self.U > 0:
            raise ValueError(f"U must be positive for a spectrum bounded below, got {self.U}")

    @property
    def lambda1(self) -> float:
        return math.hypot(self.lam, self.omega1)

    @property
    def kappa(self) -> float:
        # quadrant-aware so that label k keeps energy omega0 N + lambda1 (2k - N) + U N^2
        return math.atan2(self.lam, self.omega1)


@dataclass(frozen=True)
class AtomFieldParams:
    omega_f: float = 1.0
    omega_a: float = 1.0
    gamma: float = 1.0
    g: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive for stability, got {self.gamma}")


@dataclass(frozen=True)
class TcParams:
    Delta: tuple
    Omega_f: float = 7.78
    chi: float = 0.0
    Lambda: float = 0.0
    Lambda_s: float = 0.0
    epsilon: float = 4.62
    M: int | None = None

    def __post_init__(self):
        delta = tuple(float(d) for d in self.Delta)
        object.__setattr__(self, "Delta", delta)
        if self.M is None:
            object.__setattr__(self, "M", len(delta))
        if len(delta) != self.M:
            raise ValueError(f"Delta has {len(delta)} entries but M = {self.M}")
        if self.M < 1:
            raise ValueError("need at least one qubit")

    @property
    def Omega(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.Delta) ** 2 + self.epsilon**2)


TC_CASES = {
    "i": dict(Lambda_s=0.0, chi=0.0),
    "ii": dict(Lambda_s=1e-3, chi=0.0),
    "iii": dict(Lambda_s=1e-3, chi=1e-3),
}


def tc_case(params: TcParams, case: str) -> TcParams:
    """Apply one of the three coupling cases (values in GHz)."""
    try:
        return replace(params, **TC_CASES[case])
    except KeyError:
        raise ValueError(f"unknown Tavis-Cummings case {case!r}; expected one of {sorted(TC_CASES)}") from None


@lru_cache(maxsize=None)
def _term(kind, N, M, op):
    mat = operator_matrix(enumerate_basis(kind, N, M), op)
    mat.flags.writeable = False
    return mat


def build_bec(p: BecParams, N: int) -> HermitianOperator:
    if N < 0:
        raise ValueError("N must be non-negative")
    basis = enumerate_basis(CV, N)
    t = lambda op: _term(CV, N, None, op)  # noqa: E731
    ntot = t("a† a") + t("b† b")
    h = (p.omega0 * ntot + p.omega1 * (t("a† a") - t("b† b")) + p.U * ntot @ ntot
         - p.lam * (t("a† b") + t("a b†")))
    return HermitianOperator(basis, h)


def bec_energy(p: BecParams, N: int, k: int) -> float:
    if not 0 <= k <= N:
        raise ValueError(f"k={k} outside 0..{N}")
    return p.omega0 * N + p.lambda1 * (2 * k - N) + p.U * N * N


def bec_rotation(p: BecParams, N: int) -> np.ndarray:
    """exp[kappa (a† b - b† a) / 2] on the N-excitation subspace."""
    gen = 0.5 * (_term(CV, N, None, "a† b") - _term(CV, N, None, "b† a"))
    return expm(p.kappa * gen)


def bec_closed_form(p: BecParams, N: int, k: int) -> tuple[float, PureState]:
    energy = bec_energy(p, N, k)
    if p.omega1 == 0.0 and p.lam == 0.0:
        raise ValueError("eigenstates are not unique when omega1 = lambda = 0")
    v = bec_rotation(p, N)
    return energy, PureState.from_amplitudes(enumerate_basis(CV, N), v[:, k])


def build_atom_field(p: AtomFieldParams, N: int) -> HermitianOperator:
    if N < 0:
        raise ValueError("N must be non-negative")
    basis = enumerate_basis(CV, N)
    t = lambda op: _term(CV, N, None, op)  # noqa: E731
    h = (p.omega_f * t("a† a") + p.omega_a * t("b† b") + p.gamma * t("b† b† b b")
         + p.g * (t("a† b") + t("a b†")))
    return HermitianOperator(basis, h)


def build_tavis_cummings(p: TcParams, N: int) -> HermitianOperator:
    if N < 0:
        raise ValueError("N must be non-negative")
    M = p.M
    basis = enumerate_basis(HYBRID, N, M)
    t = lambda op: _term(HYBRID, N, M, op)  # noqa: E731
    h = p.Omega_f * t("a† a") + p.chi * t("a† a† a a")
    for q, om in enumerate(p.Omega, start=1):
        h = h + om * t(f"sz[{q}]") + p.Lambda * (t(f"a† sm[{q}]") + t(f"a sp[{q}]"))
    for q in range(1, M):
        h = h + p.Lambda_s * (t(f"sm[{q}] sp[{q + 1}]") + t(f"sm[{q + 1}] sp[{q}]"))
    return HermitianOperator(basis, h)


def build(model: str, params, N: int) -> HermitianOperator:
    builders = {"bec": build_bec, "atom_field": build_atom_field, "tc": build_tavis_cummings}
    try:
        return builders[model](params, N)
    except KeyError:
        raise ValueError(f"unknown model {model!r}") from None


# --- disorder ---------------------------------------------------------------

def sample_gaps(mean: float, sd: float, M: int, seed) -> list[float]:
    """Gaussian qubit gaps ``mean + sd * z`` with Box-Muller normals.

    Uniforms come from :class:`random.Random`, whose ``random()`` stream is
    stable across Python versions; ``seed`` may be an int or a string
    (used for per-index sub-seeds such as ``"1234:17"``).
    """
    if sd < 0:
        raise ValueError(f"standard deviation must be non-negative, got {sd}")
    if M < 1:
        raise ValueError("M must be at least 1")
    rng = random.Random(seed)
    z = []
    while len(z) < M:
        u1 = 1.0 - rng.random()  # (0, 1]
        u2 = rng.random()
        r = math.sqrt(-2.0 * math.log(u1))
        z.extend((r * math.cos(2.0 * math.pi * u2), r * math.sin(2.0 * math.pi * u2)))
    return [mean + sd * zi for zi in z[:M]]


def sub_seed(seed: int, index: int) -> str:
    return f"{seed}:{index}"
