import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import tomoscope.analysis as an
from tomoscope._kernels import ConvergenceError
from tomoscope.analysis import (
    REFERENCE_GRIDS,
    EigenCache,
    SweepPointError,
    SweepSpec,
    ZeroVarianceError,
    correlate_curves,
    correlation_report,
    disorder_sd_grid,
    disorder_study,
    grid_values,
    min_gap,
    pearson,
    run_sweep,
)
from tomoscope.indicators import cv_plan, hybrid_plan
from tomoscope.models import AtomFieldParams, BecParams, TcParams

SMALL_PLAN = cv_plan(2)


def test_pearson_examples():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert pearson([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)


def test_pearson_errors():
    with pytest.raises(ZeroVarianceError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        pearson([1], [1])
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2, 3])


curves = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=30)


@given(curves, st.data())
def test_pearson_range_and_affine_invariance(xs, data):
    ys = data.draw(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=len(xs), max_size=len(xs)))
    try:
        r = pearson(xs, ys)
    except ZeroVarianceError:
        return
    assert -1.0 <= r <= 1.0
    scale = data.draw(st.floats(0.01, 100))
    shift = data.draw(st.floats(-100, 100))
    y2 = [scale * y + shift for y in ys]
    try:
        assert pearson(xs, y2) == pytest.approx(r, abs=1e-6)
    except ZeroVarianceError:
        pass


def synthetic_xi(svne_curve, **others):
    xi = {"svne": np.asarray(svne_curve, dtype=float)[:, None]}
    for k, v in others.items():
        xi[k] = np.asarray(v, dtype=float)[:, None]
    return xi


def test_identical_curve_correlates_perfectly():
    c = [0.1, 0.5, 0.2, 0.9]
    rep = correlate_curves((0,), synthetic_xi(c, tei=c))
    assert rep.get(0, "tei").pcc == pytest.approx(1.0)


def test_constant_curve_is_flagged():
    rep = correlate_curves((0,), synthetic_xi([0.1, 0.5, 0.2], pcc=[0.3, 0.3, 0.3], bd=[1e-17, 2e-17, 0]))
    for name in ("pcc", "bd"):
        e = rep.get(0, name)
        assert math.isnan(e.pcc) and e.flag == "constant-curve"
    with pytest.raises(KeyError):
        rep.get(3, "tei")


def test_report_affine_invariance():
    rng = np.random.default_rng(0)
    s = rng.random(20)
    t = s + 0.1 * rng.random(20)
    a = correlate_curves((0,), synthetic_xi(s, tei=t)).get(0, "tei").pcc
    b = correlate_curves((0,), synthetic_xi(s, tei=3.5 * t - 2)).get(0, "tei").pcc
    assert a == pytest.approx(b, abs=1e-12)


# --- sweep spec ---------------------------------------------------------------

def test_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec("bec", "omega1", (0.1, 0.0, 0.2), BecParams(), 2)
    with pytest.raises(ValueError):
        SweepSpec("bec", "g", (0.1, 0.2), BecParams(), 2)
    with pytest.raises(TypeError):
        SweepSpec("bec", "omega1", (0.1, 0.2), AtomFieldParams(), 2)
    with pytest.raises(ValueError):
        SweepSpec("atom_field", "g", (0.1, 0.2), AtomFieldParams(), 2, closed_form=True)
    with pytest.raises(ValueError):
        SweepSpec("tc", "Delta", (0.1, 0.2), TcParams(Delta=(5.0,)), 2)
    with pytest.raises(ValueError):
        SweepSpec("ising", "J", (0.1,), BecParams(), 2)


def test_reference_grids():
    w = REFERENCE_GRIDS[("bec", "omega1")]
    assert len(w) == 100 and w[0] == -0.99 and w[-1] == 0.99 and 0.0 not in w
    g = REFERENCE_GRIDS[("atom_field", "g")]
    assert len(g) == 80 and g[0] == -1.0 and g[-1] == 1.37
    lam = REFERENCE_GRIDS[("tc", "Lambda")]
    assert len(lam) == 101 and lam[0] == -1.2e-3 and lam[-1] == 1.3e-3 and 0.0 in lam


# --- BEC sweeps -----------------------------------------------------------------

def test_entanglement_vanishes_without_tunnelling():
    spec = SweepSpec("bec", "lam", grid_values(-1.0, 0.02, 101), BecParams(omega1=0.25), 4, compute_xi=False)
    res = run_sweep(spec)
    i = spec.values.index(0.0)
    assert np.all(res.xi["svne"][i] < 1e-8)
    assert np.all(res.xi["svne"][i + 1] > 1e-4)


def test_middle_energy_flat():
    spec = SweepSpec("bec", "omega1", REFERENCE_GRIDS[("bec", "omega1")], BecParams(), 4, compute_xi=False)
    res = run_sweep(spec)
    assert np.max(np.abs(res.energies[:, 2] - 20.0)) < 1e-10


def test_closed_form_and_numerics_agree():
    vals = grid_values(-0.9, 0.2, 10)
    kw = dict(model="bec", swept="omega1", values=vals, fixed=BecParams(lam=0.4), N=3, plan=SMALL_PLAN)
    a = run_sweep(SweepSpec(**kw))
    b = run_sweep(SweepSpec(**kw, closed_form=True))
    for name in a.xi:
        assert np.max(np.abs(a.xi[name] - b.xi[name])) < 1e-6
    assert np.max(np.abs(a.energies - b.energies)) < 1e-10


def test_omega1_lambda_exchange_energies():
    vals = grid_values(-0.99, 0.02, 100)
    a = run_sweep(SweepSpec("bec", "omega1", vals, BecParams(lam=0.25), 4, compute_xi=False))
    b = run_sweep(SweepSpec("bec", "lam", vals, BecParams(omega1=0.25), 4, compute_xi=False))
    assert np.max(np.abs(a.energies - b.energies)) < 1e-10


def test_k_swap_symmetry_of_entropy_curves():
    spec = SweepSpec("bec", "omega1", REFERENCE_GRIDS[("bec", "omega1")], BecParams(), 4, compute_xi=False)
    svne = run_sweep(spec).xi["svne"]
    for k in range(5):
        assert np.max(np.abs(svne[:, k] - svne[:, 4 - k])) < 1e-10


def test_thread_count_does_not_change_results():
    spec = SweepSpec("bec", "omega1", grid_values(-0.5, 0.1, 8), BecParams(), 3, plan=SMALL_PLAN,
                     eps_sections=((0.0, 0.5),))
    a = run_sweep(spec, workers=1)
    b = run_sweep(spec, workers=4)
    for name in a.xi:
        assert np.array_equal(a.xi[name], b.xi[name], equal_nan=True)
    assert np.array_equal(a.eps[(0.0, 0.5)]["tei"], b.eps[(0.0, 0.5)]["tei"])


def test_eps_sections_and_report_labels():
    spec = SweepSpec("bec", "omega1", grid_values(-0.5, 0.1, 8), BecParams(), 2, states=(1,), plan=SMALL_PLAN,
                     eps_sections=((0.0, 0.5),))
    rep = correlation_report(run_sweep(spec))
    assert {e.source for e in rep.entries} == {"xi", "eps[0|0.5]"}
    assert all(e.state_k == 1 for e in rep.entries)
    assert all(math.isnan(e.pcc) or -1 <= e.pcc <= 1 for e in rep.entries)


def test_cache_is_used():
    cache = EigenCache()
    spec = SweepSpec("bec", "omega1", grid_values(-0.5, 0.1, 5), BecParams(), 2, compute_xi=False)
    run_sweep(spec, cache=cache)
    assert cache.misses == 5 and cache.hits == 0
    run_sweep(spec, cache=cache)
    assert cache.hits == 5 and len(cache) == 5


def test_failure_names_parameter(monkeypatch):
    real = an.hermitian_eigensystem

    def flaky(op, *a, **k):
        if abs(op.matrix[0, 0] - 1.7) < 1e-9:  # omega1 = 0.3 at N = 1
            raise ConvergenceError("no convergence")
        return real(op, *a, **k)

    monkeypatch.setattr(an, "hermitian_eigensystem", flaky)
    spec = SweepSpec("bec", "omega1", (0.1, 0.2, 0.3), BecParams(), 1, compute_xi=False)
    with pytest.raises(SweepPointError, match="omega1=0.3"):
        run_sweep(spec)


# --- atom-field ---------------------------------------------------------------

def degenerate_sweep():
    vals = tuple(v for v in REFERENCE_GRIDS[("atom_field", "g")] if v < 0) + (0.0,)
    return run_sweep(SweepSpec("atom_field", "g", vals, AtomFieldParams(), 4, compute_xi=False))


def test_bell_dip_at_crossing():
    res = degenerate_sweep()
    assert abs(res.xi["svne"][-1, 0] - 1) < 1e-3
    assert abs(res.xi["svne"][-1, 1] - 1) < 1e-3
    assert res.xi["svne"][-1, 2] < 1e-3


def test_true_crossing_gap():
    g = min_gap(degenerate_sweep(), 0, 1)
    assert g.param == 0.0 and g.gap < 1e-10


# --- minimum gap ----------------------------------------------------------------

def test_min_gap_bec():
    spec = SweepSpec("bec", "omega1", REFERENCE_GRIDS[("bec", "omega1")], BecParams(lam=0.25), 4, compute_xi=False)
    g = min_gap(run_sweep(spec), 0, 2)
    assert abs(g.param) <= 0.01
    assert g.gap == pytest.approx(1.0, abs=1e-6)
    assert not g.at_boundary


def test_min_gap_parabola_only():
    spec = SweepSpec("bec", "omega1", REFERENCE_GRIDS[("bec", "omega1")], BecParams(lam=0.25), 4, compute_xi=False)
    g = min_gap(run_sweep(spec), 0, 2, refine=False)
    assert abs(g.param) <= 0.01 and abs(g.gap - 1) < 1e-5


def test_min_gap_boundary():
    spec = SweepSpec("bec", "omega1", grid_values(0.1, 0.1, 6), BecParams(lam=0.25), 2, compute_xi=False)
    g = min_gap(run_sweep(spec), 0, 1)
    assert g.at_boundary and g.param == 0.1


def test_min_gap_index_check():
    spec = SweepSpec("bec", "omega1", (0.1, 0.2, 0.3), BecParams(), 2, compute_xi=False)
    with pytest.raises(IndexError):
        min_gap(run_sweep(spec), 0, 3)


# --- disorder -----------------------------------------------------------------

BASE = TcParams(Delta=(5.6,) * 3)


def small_disorder(seed=3, sd=(0.0, 0.3, 0.6, 0.9)):
    return disorder_study(BASE, sd, seed, case="i", N=2, plan=hybrid_plan(3, 2, ("x",)))


def test_disorder_zero_spread_well_defined():
    res = small_disorder()
    assert res.gaps[0] == [5.6] * 3
    assert np.all(np.isfinite(res.xi["svne"]))
    assert len(res.per_sd) == 4


def test_disorder_reproducible():
    a, b = small_disorder(), small_disorder()
    assert a.across == b.across and a.per_sd == b.per_sd
    assert np.array_equal(a.xi["tei"], b.xi["tei"])


def test_disorder_subseed_isolation():
    a = small_disorder(sd=(0.0, 0.3, 0.6, 0.9))
    b = small_disorder(sd=(0.0, 0.3, 0.7, 0.9))
    assert a.gaps[3] == b.gaps[3] and a.gaps[1] == b.gaps[1]


def test_disorder_validation():
    with pytest.raises(ValueError):
        disorder_study(BASE, (0.0, 2.0), 0, N=2)
    with pytest.raises(ValueError):
        disorder_study(BASE, (0.0, 0.5), 0, case="iv", N=2)


def test_disorder_grids():
    g = disorder_sd_grid(100)
    assert len(g) == 100 and g[0] == 0 and g[-1] == pytest.approx(1.12)
    f = disorder_sd_grid(fine=True)
    assert len(f) == 1001 and f[1] == pytest.approx(2e-4 * 5.6)
