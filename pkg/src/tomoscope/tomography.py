"""Tomograms synthesized from pure states.

Quadrature eigenstates follow ``<X, theta | n> = exp(i n theta) psi_n(X)``
with ``X_theta = (a exp(-i theta) + a† exp(i theta)) / sqrt(2)``, so
``psi_n`` are the unit-frequency oscillator eigenfunctions.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from tomoscope.fock import CV, HYBRID, PureState


@dataclass(frozen=True)
class QuadratureGrid:
    x_max: float = 8.0
    n_points: int = 321

    def __post_init__(self):
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise ValueError(f"n_points must be odd and >= 3, got {self.n_points}")
        if not self.x_max > 0:
            raise ValueError("x_max must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.x_max / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return _grid_points(self.x_max, self.n_points)


DEFAULT_GRID = QuadratureGrid()


@lru_cache(maxsize=32)
def _grid_points(x_max, n_points):
    x = np.linspace(-x_max, x_max, n_points)
    x.flags.writeable = False
    return x


def oscillator_table(n_max: int, x) -> np.ndarray:
    """Rows ``psi_0 .. psi_{n_max}`` evaluated at ``x``.

    Uses ``psi_n = x sqrt(2/n) psi_{n-1} - sqrt((n-1)/n) psi_{n-2}``, which
    stays stable where explicit Hermite polynomials overflow.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((n_max + 1,) + x.shape)
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(2, n_max + 1):
        out[n] = x * math.sqrt(2.0 / n) * out[n - 1] - math.sqrt((n - 1) / n) * out[n - 2]
    return out


def oscillator_wavefunction(n: int, x):
    if n < 0:
        raise ValueError("n must be non-negative")
    val = oscillator_table(n, x)[n]
    return float(val) if np.ndim(val) == 0 else val


@lru_cache(maxsize=16)
def _grid_table(n_max, x_max, n_points):
    tab = oscillator_table(n_max, _grid_points(x_max, n_points))
    tab.flags.writeable = False
    return tab


def grid_table(grid: QuadratureGrid, n_max: int) -> np.ndarray:
    return _grid_table(n_max, grid.x_max, grid.n_points)


@dataclass(frozen=True)
class TomogramSection:
    theta_a: float
    theta_b: float
    grid: QuadratureGrid
    w: np.ndarray

    @property
    def normalization(self) -> float:
        return float(self.w.sum()) * self.grid.dx**2


@dataclass(frozen=True)
class QubitBasisSpec:
    """Per-qubit measurement axes as (polar, azimuth) angles."""

    angles: tuple

    NAMED = {"x": (math.pi / 2, 0.0), "y": (math.pi / 2, math.pi / 2), "z": (0.0, 0.0)}

    @classmethod
    def uniform(cls, axis, M: int) -> "QubitBasisSpec":
        return cls.of([axis] * M)

    @classmethod
    def of(cls, axes) -> "QubitBasisSpec":
        out = []
        for ax in axes:
            if isinstance(ax, str):
                try:
                    out.append(cls.NAMED[ax])
                except KeyError:
                    raise ValueError(f"unknown axis {ax!r}") from None
            else:
                polar, azim = ax
                out.append((float(polar), float(azim)))
        return cls(tuple(out))

    @property
    def M(self) -> int:
        return len(self.angles)

    def label(self) -> str:
        names = {v: k for k, v in self.NAMED.items()}
        tags = [names.get(a, f"({a[0]:.6g},{a[1]:.6g})") for a in self.angles]
        return tags[0] if len(set(tags)) == 1 else "".join(tags)


def axis_overlaps(polar: float, azim: float) -> np.ndarray:
    """``u[m, b] = <n, m | b>`` for one qubit.

    ``b = 1`` is the excited state; outcome ``m = 1`` is the +1/2 eigenvalue
    of the spin component along ``n`` and ``m = 0`` the -1/2 one, so the z
    axis reproduces the g/e populations.
    """
    c = math.cos(polar / 2)
    s = math.sin(polar / 2)
    ph = complex(math.cos(azim), math.sin(azim))
    # |n,+> = c|e> + ph s|g>,  |n,-> = c|g> - conj(ph) s|e>
    return np.array([[c, -ph * s],
                     [np.conj(ph) * s, c]], dtype=np.complex128)


@dataclass(frozen=True)
class HybridSection:
    theta_f: float
    qubits: QubitBasisSpec
    grid: QuadratureGrid
    w: np.ndarray

    @property
    def normalization(self) -> float:
        return float(self.w.sum()) * self.grid.dx

    @property
    def outcomes(self) -> list[str]:
        return ["".join(map(str, bits)) for bits in product((0, 1), repeat=self.qubits.M)]

    def spin_values(self) -> np.ndarray:
        """Total spin projection (sum of +-1/2) for each outcome bitstring."""
        return np.array([sum(b - 0.5 for b in bits) for bits in product((0, 1), repeat=self.qubits.M)])


def _cv_amplitude(state, theta_a, theta_b, grid):
    N = state.basis.N
    tab = grid_table(grid, N)
    k = np.arange(N + 1)
    ca = state.amplitudes * np.exp(1j * (k * theta_a + (N - k) * theta_b))
    # labels are (k, N-k) in order of k
    return (tab.T * ca) @ tab[::-1]


def cv_section(state: PureState, theta_a: float, theta_b: float, grid: QuadratureGrid = DEFAULT_GRID) -> TomogramSection:
    """Joint quadrature density ``w(X_a, X_b)`` at angles ``(theta_a, theta_b)``."""
    if state.basis.kind != CV:
        raise ValueError("cv_section needs a two-mode (cv) state")
    amp = _cv_amplitude(state, theta_a, theta_b, grid)
    w = amp.real**2 + amp.imag**2
    return TomogramSection(float(theta_a), float(theta_b), grid, w)


def marginals(s: TomogramSection) -> tuple[np.ndarray, np.ndarray]:
    dx = s.grid.dx
    return s.w.sum(axis=1) * dx, s.w.sum(axis=0) * dx


def single_mode_tomogram(rho: np.ndarray, theta: float, grid: QuadratureGrid = DEFAULT_GRID) -> np.ndarray:
    """``<X, theta| rho |X, theta>`` for a single-mode density matrix in the
    number basis ``0..n``."""
    rho = np.asarray(rho)
    n = rho.shape[0] - 1
    tab = grid_table(grid, n)
    k = np.arange(n + 1)
    basis = tab.T * np.exp(1j * k * theta)  # X x n
    return np.real(np.einsum("xi,ij,xj->x", basis, rho, basis.conj()))


def _qubit_overlap_matrix(qubits: QubitBasisSpec) -> np.ndarray:
    mat = np.ones((1, 1), dtype=np.complex128)
    for polar, azim in qubits.angles:
        mat = np.kron(mat, axis_overlaps(polar, azim))
    return mat


def hybrid_section(state: PureState, theta_f: float, qubits: QubitBasisSpec, grid: QuadratureGrid = DEFAULT_GRID) -> HybridSection:
    """Joint density-mass ``w[X, m]`` for a field quadrature and qubit outcomes."""
    basis = state.basis
    if basis.kind != HYBRID:
        raise ValueError("hybrid_section needs a field-qubit state")
    if qubits.M != basis.M:
        raise ValueError(f"qubit spec has {qubits.M} axes but the state has {basis.M} qubits")
    nf = np.array([lab[0] for lab in basis.labels])
    bidx = np.array([int("".join(map(str, lab[1:])), 2) for lab in basis.labels])
    tab = grid_table(grid, int(nf.max()))
    field = tab[nf].T * (state.amplitudes * np.exp(1j * nf * theta_f))  # X x D
    over = _qubit_overlap_matrix(qubits)[:, bidx]  # 2^M x D
    amp = field @ over.T
    w = amp.real**2 + amp.imag**2
    return HybridSection(float(theta_f), qubits, grid, w)


# --- export -----------------------------------------------------------------

def _fmt(v: float) -> str:
    return f"{v:.12g}"


def write_section_csv(section, fh, header_lines=()):
    """Write a section as ``x_a,x_b,w`` (CV) or ``x,m,w`` (hybrid) rows."""
    for line in header_lines:
        fh.write(f"# {line}\n")
    writer = csv.writer(fh, lineterminator="\n")
    x = section.grid.x
    if isinstance(section, TomogramSection):
        writer.writerow(["x_a", "x_b", "w"])
        for i, xa in enumerate(x):
            for j, xb in enumerate(x):
                writer.writerow([_fmt(xa), _fmt(xb), _fmt(section.w[i, j])])
    else:
        writer.writerow(["x", "m", "w"])
        outs = section.outcomes
        for i, xv in enumerate(x):
            for j, m in enumerate(outs):
                writer.writerow([_fmt(xv), m, _fmt(section.w[i, j])])
