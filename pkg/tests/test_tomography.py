import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracle
from tomoscope.eigen import hermitian_eigensystem
from tomoscope.fock import CV, HYBRID, PureState, enumerate_basis, reduced_density
from tomoscope.models import TcParams, build_tavis_cummings, sample_gaps
from tomoscope.tomography import (
    DEFAULT_GRID,
    QuadratureGrid,
    QubitBasisSpec,
    axis_overlaps,
    cv_section,
    hybrid_section,
    marginals,
    oscillator_table,
    oscillator_wavefunction,
    single_mode_tomogram,
    write_section_csv,
)

X = DEFAULT_GRID.x
DX = DEFAULT_GRID.dx
MID = len(X) // 2


def random_state(basis, seed):
    rng = np.random.default_rng(seed)
    return PureState.from_amplitudes(basis, rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim))


def test_grid_defaults():
    assert DEFAULT_GRID.n_points == 321
    assert DEFAULT_GRID.dx == pytest.approx(0.05)
    assert X[MID] == 0.0


@pytest.mark.parametrize("n,xm", [(4, 8.0), (320, 8.0), (1, 8.0), (321, 0.0)])
def test_grid_validation(n, xm):
    with pytest.raises(ValueError):
        QuadratureGrid(xm, n)


def test_wavefunction_landmarks():
    assert oscillator_wavefunction(0, 0.0) == pytest.approx(math.pi ** -0.25, abs=1e-15)
    assert oscillator_wavefunction(1, 0.0) == 0.0
    assert oscillator_wavefunction(2, 0.0) == pytest.approx(-math.pi ** -0.25 / math.sqrt(2), abs=1e-15)
    with pytest.raises(ValueError):
        oscillator_wavefunction(-1, 0.0)


def test_wavefunctions_match_hermite_oracle():
    x = np.linspace(-8, 8, 161)
    tab = oscillator_table(10, x)
    for n in range(11):
        assert np.max(np.abs(tab[n] - oracle.psi(n, x))) < 1e-12


def test_wavefunctions_orthonormal_on_grid():
    tab = oscillator_table(10, X)
    gram = tab @ tab.T * DX
    assert np.max(np.abs(gram - np.eye(11))) < 1e-12


def test_vacuum_section_peak():
    s = cv_section(PureState.product(enumerate_basis(CV, 0), (0, 0)), 0.3, 1.1)
    assert s.w[MID, MID] == pytest.approx(1 / math.pi, abs=1e-14)


def test_number_state_phase_invariance():
    st22 = PureState.product(enumerate_basis(CV, 4), (2, 2))
    a = cv_section(st22, 0.0, 0.0).w
    b = cv_section(st22, 0.0, math.pi / 2).w
    assert np.max(np.abs(a - b)) < 1e-12


def test_product_section_factorizes():
    s = cv_section(PureState.product(enumerate_basis(CV, 5), (2, 3)), 0.4, 2.0)
    wa, wb = marginals(s)
    assert np.max(np.abs(s.w - np.outer(wa, wb))) * DX**2 < 1e-10


def test_vacuum_marginal_peak():
    wa, _ = marginals(cv_section(PureState.product(enumerate_basis(CV, 0), (0, 0)), 0, 0))
    assert wa[MID] == pytest.approx(1 / math.sqrt(math.pi), abs=1e-12)


def test_bell_marginal():
    bell = PureState.from_labels(enumerate_basis(CV, 4), {(4, 0): 1, (3, 1): 1})
    wa, _ = marginals(cv_section(bell, 0.0, 0.0))
    expected = (oracle.psi(4, X) ** 2 + oracle.psi(3, X) ** 2) / 2
    assert np.max(np.abs(wa - expected)) < 1e-10


def test_vacuum_single_mode_ipr():
    wa, _ = marginals(cv_section(PureState.product(enumerate_basis(CV, 0), (0, 0)), 0, 0))
    assert np.sum(wa**2) * DX == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-5)


def test_cv_section_requires_cv_state():
    with pytest.raises(ValueError):
        cv_section(PureState.product(enumerate_basis(HYBRID, 1, 1), (1, 0)), 0, 0)


@given(st.integers(0, 6), st.integers(0, 2**32 - 1), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_cv_section_matches_oracle(N, seed, ta, tb):
    s = random_state(enumerate_basis(CV, N), seed)
    x = np.linspace(-6, 6, 41)
    grid = QuadratureGrid(6.0, 41)
    got = cv_section(s, ta, tb, grid).w
    assert np.max(np.abs(got - oracle.cv_density(s.amplitudes, N, ta, tb, x))) < 1e-12


@given(st.integers(0, 6), st.integers(0, 2**32 - 1), st.floats(0, math.pi), st.floats(0, math.pi))
def test_normalization(N, seed, ta, tb):
    s = cv_section(random_state(enumerate_basis(CV, N), seed), ta, tb)
    assert abs(s.normalization - 1) < 1e-6
    assert np.all(s.w >= 0)


@given(st.integers(0, 6), st.integers(0, 2**32 - 1), st.floats(0, math.pi), st.floats(0, math.pi))
def test_angle_shift_by_pi_reflects(N, seed, ta, tb):
    s = random_state(enumerate_basis(CV, N), seed)
    shifted = cv_section(s, ta + math.pi, tb).w
    base = cv_section(s, ta, tb).w
    assert np.max(np.abs(shifted - base[::-1, :])) < 1e-10


@given(st.integers(0, 6), st.integers(0, 2**32 - 1), st.floats(0, math.pi), st.floats(0, math.pi))
def test_marginals_match_reduced_density(N, seed, ta, tb):
    s = random_state(enumerate_basis(CV, N), seed)
    wa, wb = marginals(cv_section(s, ta, tb))
    assert np.max(np.abs(wa - single_mode_tomogram(reduced_density(s, "A").matrix, ta))) < 1e-8
    assert np.max(np.abs(wb - single_mode_tomogram(reduced_density(s, "B").matrix, tb))) < 1e-8


def test_finer_grid_reduces_defect():
    s = random_state(enumerate_basis(CV, 6), 3)
    coarse = abs(cv_section(s, 0.2, 0.9, QuadratureGrid(4.0, 41)).normalization - 1)
    fine = abs(cv_section(s, 0.2, 0.9, QuadratureGrid(6.0, 161)).normalization - 1)
    assert fine < coarse


# --- hybrid -------------------------------------------------------------------

def test_axis_overlaps_unitary():
    for polar, azim in [(0, 0), (math.pi / 2, 0), (math.pi / 2, math.pi / 2), (1.1, 2.3)]:
        u = axis_overlaps(polar, azim)
        assert np.allclose(u @ u.conj().T, np.eye(2), atol=1e-15)


def test_z_axis_outcomes_are_populations():
    assert np.allclose(axis_overlaps(0, 0), np.eye(2))


def test_qubit_spec():
    spec = QubitBasisSpec.uniform("y", 3)
    assert spec.M == 3 and spec.label() == "y"
    assert QubitBasisSpec.of(["x", "z"]).label() == "xz"
    assert QubitBasisSpec.of([(0.5, 0.25)]).label() == "(0.5,0.25)"
    with pytest.raises(ValueError):
        QubitBasisSpec.of(["w"])


def test_hybrid_vacuum_z():
    b = enumerate_basis(HYBRID, 0, 3)
    s = hybrid_section(PureState.product(b, (0, 0, 0, 0)), 0.7, QubitBasisSpec.uniform("z", 3))
    assert np.max(np.abs(s.w[:, 0] - oracle.psi(0, X) ** 2)) < 1e-14
    assert np.max(np.abs(s.w[:, 1:])) == 0
    assert s.outcomes[0] == "000"


def test_hybrid_vacuum_x_uniform():
    M = 3
    b = enumerate_basis(HYBRID, 0, M)
    s = hybrid_section(PureState.product(b, (0,) * (M + 1)), 0.0, QubitBasisSpec.uniform("x", M))
    mass = s.w.sum(axis=0) * DX
    assert np.allclose(mass, 2.0**-M, atol=1e-12)
    assert np.allclose(s.w[:, 3], oracle.psi(0, X) ** 2 / 2**M, atol=1e-15)


def test_hybrid_spin_values():
    b = enumerate_basis(HYBRID, 0, 2)
    s = hybrid_section(PureState.product(b, (0, 0, 0)), 0.0, QubitBasisSpec.uniform("z", 2))
    assert list(s.spin_values()) == [-1.0, 0.0, 0.0, 1.0]


def test_hybrid_validation():
    with pytest.raises(ValueError):
        hybrid_section(PureState.product(enumerate_basis(CV, 1), (1, 0)), 0, QubitBasisSpec.uniform("x", 1))
    with pytest.raises(ValueError):
        hybrid_section(PureState.product(enumerate_basis(HYBRID, 0, 2), (0, 0, 0)), 0, QubitBasisSpec.uniform("x", 3))


@pytest.fixture(scope="module")
def tc_eigensystem():
    p = TcParams(Delta=tuple(sample_gaps(5.6, 1.12, 5, 0)), Lambda=1.2e-3)
    return hermitian_eigensystem(build_tavis_cummings(p, 6))


@pytest.mark.parametrize("axis", ["x", "y", "z"])
def test_tc_eigenstates_normalized(tc_eigensystem, axis):
    for k in range(tc_eigensystem.dim):
        s = hybrid_section(tc_eigensystem.state(k), 1.3, QubitBasisSpec.uniform(axis, 5))
        assert abs(s.normalization - 1) < 1e-6


def test_hybrid_matches_oracle(tc_eigensystem):
    st0 = tc_eigensystem.state(3)
    grid = QuadratureGrid(6.0, 61)
    x = np.linspace(-6, 6, 61)
    got = hybrid_section(st0, 0.9, QubitBasisSpec.uniform("y", 5), grid).w
    ref = oracle.hybrid_density(st0.basis.labels, st0.amplitudes, 0.9, math.pi / 2, math.pi / 2, 5, x)
    assert np.max(np.abs(got - ref)) < 1e-13


# --- export -----------------------------------------------------------------

def test_csv_cv():
    s = cv_section(PureState.product(enumerate_basis(CV, 0), (0, 0)), 0, 0, QuadratureGrid(1.0, 3))
    buf = io.StringIO()
    write_section_csv(s, buf, ["seed=1"])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# seed=1"
    assert lines[1] == "x_a,x_b,w"
    assert len(lines) == 2 + 9
    assert lines[6] == "0,0,0.318309886184"


def test_csv_hybrid():
    b = enumerate_basis(HYBRID, 0, 2)
    s = hybrid_section(PureState.product(b, (0, 0, 0)), 0, QubitBasisSpec.uniform("z", 2), QuadratureGrid(1.0, 3))
    buf = io.StringIO()
    write_section_csv(s, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "x,m,w"
    assert len(lines) == 1 + 3 * 4
    assert lines[1].split(",")[1] == "00"


@given(st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_outcome_kets_are_spin_eigenvectors(polar, azim):
    # spin component along n in the (g, e) basis; outcome m carries eigenvalue m - 1/2
    ph = complex(math.cos(azim), math.sin(azim))
    s_n = 0.5 * np.array([[-math.cos(polar), ph * math.sin(polar)],
                          [ph.conjugate() * math.sin(polar), math.cos(polar)]])
    u = axis_overlaps(polar, azim)
    for m in (0, 1):
        ket = u[m].conj()
        assert np.allclose(s_n @ ket, (m - 0.5) * ket, atol=1e-14)
