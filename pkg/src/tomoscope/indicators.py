"""Entanglement indicators computed from tomogram sections.

Per-section quantities (``eps_*``) and their angle averages (``xi_*``).
All entropies and divergences are in bits. Densities at or below
``CLAMP`` contribute nothing to logarithmic sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from tomoscope._kernels import CLAMP, section_stats
from tomoscope.fock import CV, HYBRID, PureState, svne
from tomoscope.tomography import (
    DEFAULT_GRID,
    HybridSection,
    QuadratureGrid,
    QubitBasisSpec,
    TomogramSection,
    cv_section,
    hybrid_section,
)

INDICATORS = ("tei", "ipr", "pcc", "bd")


class DegenerateMarginalError(ValueError):
    """A marginal has zero spread, so a correlation coefficient is undefined."""


class SectionStats(NamedTuple):
    s_joint: float
    s_a: float
    s_b: float
    eta_ab: float
    eta_a: float
    eta_b: float
    bhattacharyya: float
    mean_a: float
    mean_b: float
    var_a: float
    var_b: float
    cov: float
    mass: float


def stats(section) -> SectionStats:
    """Fused grid reductions for a CV or hybrid section."""
    x = section.grid.x
    dx = section.grid.dx
    if isinstance(section, TomogramSection):
        return SectionStats(*section_stats(section.w, dx, dx, x, x))
    return SectionStats(*section_stats(section.w, dx, 1.0, x, section.spin_values()))


@dataclass(frozen=True)
class SectionIndicators:
    eps_tei: float
    eps_ipr: float
    eps_pcc: float | None
    eps_bd: float
    angles: tuple

    def as_dict(self):
        return {"tei": self.eps_tei, "ipr": self.eps_ipr, "pcc": self.eps_pcc, "bd": self.eps_bd}


def entropies(s: TomogramSection) -> tuple[float, float, float]:
    st = stats(s)
    return st.s_joint, st.s_a, st.s_b


def _tei(st):
    return st.s_a + st.s_b - st.s_joint


def _ipr(st):
    return 1.0 + st.eta_ab - st.eta_a - st.eta_b


def _bd(st):
    return -math.log2(st.bhattacharyya)


def _pcc(st):
    if st.var_a <= 1e-20 or st.var_b <= 1e-20:
        raise DegenerateMarginalError(
            f"marginal standard deviation too small (var_a={st.var_a:.3e}, var_b={st.var_b:.3e})")
    return min(abs(st.cov) / math.sqrt(st.var_a * st.var_b), 1.0)


def eps_tei(s) -> float:
    """Mutual information of the section."""
    return _tei(stats(s))


def eps_ipr(s) -> float:
    return _ipr(stats(s))


def eps_pcc(s) -> float:
    """Absolute Pearson coefficient between the two measured variables."""
    return _pcc(stats(s))


def eps_bd(s) -> float:
    """Bhattacharyya distance between the joint density and the product of
    its marginals."""
    return _bd(stats(s))


def kl_divergence(s: TomogramSection) -> float:
    """``D_KL(w : w_A w_B)`` summed directly on the grid.

    Independent of :func:`eps_tei`; the two agree because mutual
    information is this divergence.
    """
    dx = s.grid.dx
    w = s.w
    wa = w.sum(axis=1) * dx
    wb = w.sum(axis=0) * dx
    prod = np.outer(wa, wb)
    mask = (w > CLAMP) & (prod > 0)
    return float(np.sum(w[mask] * np.log2(w[mask] / prod[mask]))) * dx * dx


def section_indicators(s) -> SectionIndicators:
    """All four per-section indicators.

    For hybrid sections the Pearson entry correlates the field quadrature
    with the total spin projection of the outcome and is ``None`` when the
    outcome distribution is sharp.
    """
    st = stats(s)
    if isinstance(s, TomogramSection):
        angles = (s.theta_a, s.theta_b)
        pcc = _pcc(st)
    else:
        angles = (s.theta_f, s.qubits.label())
        try:
            pcc = _pcc(st)
        except DegenerateMarginalError:
            pcc = None
    return SectionIndicators(_tei(st), _ipr(st), pcc, _bd(st), angles)


def hybrid_indicators(s: HybridSection) -> SectionIndicators:
    if not isinstance(s, HybridSection):
        raise TypeError("hybrid_indicators needs a HybridSection")
    return section_indicators(s)


# --- angle plans and averages ----------------------------------------------

@dataclass(frozen=True)
class AnglePlan:
    """Sections to average over.

    ``kind == "cv"``: ``sections`` holds ``(theta_a, theta_b)`` pairs.
    ``kind == "hybrid"``: ``sections`` holds ``(theta_f, QubitBasisSpec)``.
    """

    kind: str
    sections: tuple
    name: str = "custom"

    def __post_init__(self):
        if not self.sections:
            raise ValueError("angle plan is empty")

    def __len__(self):
        return len(self.sections)


def cv_plan(n_angles: int = 5) -> AnglePlan:
    th = [j * math.pi / n_angles for j in range(n_angles)]
    return AnglePlan(CV, tuple((a, b) for a in th for b in th), name=f"cv{n_angles}x{n_angles}")


def hybrid_plan(M: int, n_field: int = 5, axes=("x", "y", "z")) -> AnglePlan:
    th = [j * math.pi / n_field for j in range(n_field)]
    secs = tuple((t, QubitBasisSpec.uniform(ax, M)) for t in th for ax in axes)
    return AnglePlan(HYBRID, secs, name=f"hybrid{n_field}x{len(axes)}")


def default_plan(state_or_basis) -> AnglePlan:
    basis = getattr(state_or_basis, "basis", state_or_basis)
    return cv_plan() if basis.kind == CV else hybrid_plan(basis.M)


def make_section(state: PureState, spec, grid: QuadratureGrid = DEFAULT_GRID):
    if state.basis.kind == CV:
        return cv_section(state, spec[0], spec[1], grid)
    theta, qb = spec
    if isinstance(qb, str):
        qb = QubitBasisSpec.uniform(qb, state.basis.M)
    return hybrid_section(state, theta, qb, grid)


@dataclass(frozen=True)
class XiSet:
    xi_svne: float
    xi_tei: float
    xi_ipr: float
    xi_pcc: float
    xi_bd: float
    angle_plan: str

    def as_dict(self):
        return {"svne": self.xi_svne, "tei": self.xi_tei, "ipr": self.xi_ipr,
                "pcc": self.xi_pcc, "bd": self.xi_bd}


def _mean(values):
    # fsum is correctly rounded, hence independent of summation order
    vals = [v for v in values if v is not None]
    if not vals:
        return math.nan
    return math.fsum(vals) / len(vals)


def xi_set(state: PureState, grid: QuadratureGrid = DEFAULT_GRID, plan: AnglePlan | None = None) -> XiSet:
    """Average every indicator over ``plan`` and attach the subsystem entropy."""
    if plan is None:
        plan = default_plan(state)
    if plan.kind != state.basis.kind:
        raise ValueError(f"a {plan.kind} plan cannot be used with a {state.basis.kind} state")
    ind = [section_indicators(make_section(state, spec, grid)) for spec in plan.sections]
    return XiSet(
        xi_svne=svne(state),
        xi_tei=_mean(i.eps_tei for i in ind),
        xi_ipr=_mean(i.eps_ipr for i in ind),
        xi_pcc=_mean(i.eps_pcc for i in ind),
        xi_bd=_mean(i.eps_bd for i in ind),
        angle_plan=plan.name,
    )
