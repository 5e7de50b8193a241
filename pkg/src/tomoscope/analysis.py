"""Parameter sweeps, indicator-vs-entropy correlations and the disorder study."""

from __future__ import annotations

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy.optimize import minimize_scalar

from tomoscope.fock import CV, HYBRID, enumerate_basis, svne
from tomoscope.eigen import EigenSystem, hermitian_eigensystem, track_sequence
from tomoscope.indicators import AnglePlan, default_plan, make_section, section_indicators, xi_set
from tomoscope.models import (
    AtomFieldParams,
    BecParams,
    TcParams,
    bec_closed_form,
    bec_energy,
    build,
    sample_gaps,
    sub_seed,
    tc_case,
)
from tomoscope.tomography import DEFAULT_GRID, QuadratureGrid

log = logging.getLogger(__name__)

XI_NAMES = ("svne", "tei", "ipr", "pcc", "bd")
EPS_NAMES = ("tei", "ipr", "pcc", "bd")
PARAM_TYPES = {"bec": BecParams, "atom_field": AtomFieldParams, "tc": TcParams}


class ZeroVarianceError(ValueError):
    pass


def pearson(xs, ys) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"need two 1-D sequences of equal length, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise ValueError("need at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx <= 0.0 or syy <= 0.0 or not (math.isfinite(sxx) and math.isfinite(syy)):
        raise ZeroVarianceError("a sequence has zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def grid_values(start: float, step: float, count: int) -> tuple:
    return tuple(round(start + j * step, 12) for j in range(count))


# Sweep grids used in the reference study.
REFERENCE_GRIDS = {
    ("bec", "omega1"): grid_values(-0.99, 0.02, 100),
    ("bec", "lam"): grid_values(-0.99, 0.02, 100),
    ("atom_field", "g"): grid_values(-1.0, 0.03, 80),
    ("tc", "Lambda"): grid_values(-1.2e-3, 0.025e-3, 101),
}


@dataclass(frozen=True)
class SweepSpec:
    model: str
    swept: str
    values: tuple
    fixed: object
    N: int
    states: tuple | None = None
    grid: QuadratureGrid = DEFAULT_GRID
    plan: AnglePlan | None = None
    eps_sections: tuple = ()
    closed_form: bool = False
    compute_xi: bool = True

    def __post_init__(self):
        if self.model not in PARAM_TYPES:
            raise ValueError(f"unknown model {self.model!r}")
        if not isinstance(self.fixed, PARAM_TYPES[self.model]):
            raise TypeError(f"fixed parameters for {self.model} must be {PARAM_TYPES[self.model].__name__}")
        names = {f.name for f in fields(self.fixed)} - {"Delta", "M"}
        if self.swept not in names:
            raise ValueError(f"{self.swept!r} is not a sweepable parameter of {self.model}; choose from {sorted(names)}")
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 1:
            raise ValueError("sweep has no values")
        d = np.diff(vals)
        if len(vals) > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("sweep values must be strictly monotone")
        object.__setattr__(self, "values", vals)
        if self.closed_form and self.model != "bec":
            raise ValueError("closed-form eigenstates exist only for the bec model")

    def params_at(self, value):
        return replace(self.fixed, **{self.swept: value})

    @property
    def basis(self):
        if self.model == "tc":
            return enumerate_basis(HYBRID, self.N, self.fixed.M)
        return enumerate_basis(CV, self.N)

    @property
    def state_indices(self) -> tuple:
        return tuple(range(self.basis.dim)) if self.states is None else tuple(self.states)

    @property
    def angle_plan(self) -> AnglePlan:
        return self.plan if self.plan is not None else default_plan(self.basis)


@dataclass
class SweepResult:
    spec: SweepSpec
    energies: np.ndarray            # [point, level], ascending per row
    tracked_energies: np.ndarray    # [point, label], continuity-tracked
    xi: dict                        # name -> [point, state] array
    eps: dict = field(default_factory=dict)  # section -> name -> [point, state]
    systems: list = field(default_factory=list, repr=False)


class SweepPointError(RuntimeError):
    """A computation failed at one sweep value; the value is in the message."""


class EigenCache:
    """Thread-safe in-process store of eigensystems keyed by model, parameters and N."""

    def __init__(self):
        self._data = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(model, params, N, closed_form=False):
        return (model, repr(params), N, closed_form)

    def get_or_compute(self, key, fn):
        with self._lock:
            if key in self._data:
                self.hits += 1
                return self._data[key]
        value = fn()
        with self._lock:
            self.misses += 1
            return self._data.setdefault(key, value)

    def __len__(self):
        return len(self._data)


def _solve(spec: SweepSpec, value, cache: EigenCache | None = None) -> EigenSystem:
    params = spec.params_at(value)
    if cache is not None:
        key = EigenCache.key(spec.model, params, spec.N, spec.closed_form)
        return cache.get_or_compute(key, lambda: _solve_uncached(spec, params, value))
    return _solve_uncached(spec, params, value)


def _solve_uncached(spec: SweepSpec, params, value) -> EigenSystem:
    try:
        return _solve_params(spec, params)
    except Exception as exc:
        raise SweepPointError(f"{spec.model}: failed at {spec.swept}={value!r}: {exc}") from exc


def _solve_params(spec: SweepSpec, params) -> EigenSystem:
    if spec.closed_form:
        basis = spec.basis
        vecs = np.column_stack([bec_closed_form(params, spec.N, k)[1].amplitudes for k in range(spec.N + 1)])
        energies = np.array([bec_energy(params, spec.N, k) for k in range(spec.N + 1)])
        return EigenSystem(basis, energies, vecs)
    return hermitian_eigensystem(build(spec.model, params, spec.N))


def ordered_map(fn, items, workers):
    if workers is None or workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def solve_tracked(spec: SweepSpec, workers: int = 1, cache: EigenCache | None = None):
    raw = ordered_map(lambda v: _solve(spec, v, cache), spec.values, workers)
    if spec.closed_form:
        return raw, raw
    return raw, track_sequence(raw)


def run_sweep(spec: SweepSpec, workers: int = 1, cache: EigenCache | None = None) -> SweepResult:
    raw, tracked = solve_tracked(spec, workers, cache)
    energies = np.array([es.energies for es in raw])
    tracked_e = np.array([es.energies for es in tracked])
    ks = spec.state_indices
    jobs = [(i, j, k) for i in range(len(spec.values)) for j, k in enumerate(ks)]
    plan = spec.angle_plan

    def work(job):
        i, _, k = job
        state = tracked[i].state(k)
        xi = xi_set(state, spec.grid, plan) if spec.compute_xi else None
        eps = [section_indicators(make_section(state, sec, spec.grid)) for sec in spec.eps_sections]
        return xi, eps

    results = ordered_map(work, jobs, workers)
    shape = (len(spec.values), len(ks))
    xi = {name: np.full(shape, np.nan) for name in XI_NAMES}
    eps = {sec: {name: np.full(shape, np.nan) for name in EPS_NAMES} for sec in spec.eps_sections}
    for (i, j, _), (xs, es) in zip(jobs, results):
        if xs is not None:
            for name, val in xs.as_dict().items():
                xi[name][i, j] = val
        else:
            xi["svne"][i, j] = svne(tracked[i].state(ks[j]))
        for sec, ind in zip(spec.eps_sections, es):
            for name, val in ind.as_dict().items():
                eps[sec][name][i, j] = np.nan if val is None else val
    return SweepResult(spec, energies, tracked_e, xi, eps, tracked)


# --- correlation ------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationEntry:
    state_k: int
    indicator: str
    source: str      # "xi" or a section label
    pcc: float
    flag: str = ""   # non-empty when the coefficient is undefined


@dataclass
class CorrelationReport:
    entries: list

    def get(self, state_k, indicator, source="xi") -> CorrelationEntry:
        for e in self.entries:
            if (e.state_k, e.indicator, e.source) == (state_k, indicator, source):
                return e
        raise KeyError((state_k, indicator, source))

    def values(self, indicator, source="xi") -> np.ndarray:
        return np.array([e.pcc for e in self.entries if e.indicator == indicator and e.source == source])

    def mean(self, indicator, source="xi") -> float:
        v = self.values(indicator, source)
        v = v[np.isfinite(v)]
        return float(np.mean(v)) if len(v) else math.nan


def section_label(sec) -> str:
    a, b = sec
    if isinstance(b, str):
        return f"eps[{a:.6g}|{b}]"
    return f"eps[{a:.6g}|{b:.6g}]"


# curves whose spread is below this are round-off, not signal
FLAT_CURVE = 1e-10


def _entry(k, name, source, ref, curve):
    curve = np.asarray(curve, dtype=float)
    finite = curve[np.isfinite(curve)]
    if len(finite) == len(curve) and len(curve) and np.ptp(curve) <= FLAT_CURVE:
        return CorrelationEntry(k, name, source, math.nan, "constant-curve")
    try:
        return CorrelationEntry(k, name, source, pearson(curve, ref))
    except ZeroVarianceError:
        return CorrelationEntry(k, name, source, math.nan, "constant-curve")
    except ValueError as exc:
        return CorrelationEntry(k, name, source, math.nan, str(exc))


def correlate_curves(states, xi: dict, eps: dict | None = None) -> CorrelationReport:
    """PCC of each indicator curve against the entropy curve, per state.

    ``xi[name]`` and ``eps[label][name]`` are ``[point, state]`` arrays.
    """
    entries = []
    for j, k in enumerate(states):
        ref = xi["svne"][:, j]
        for name in ("tei", "ipr", "pcc", "bd"):
            if name in xi:
                entries.append(_entry(k, name, "xi", ref, xi[name][:, j]))
        for label, curves in (eps or {}).items():
            for name in EPS_NAMES:
                if name in curves:
                    entries.append(_entry(k, name, label, ref, curves[name][:, j]))
    return CorrelationReport(entries)


def correlation_report(sweep: SweepResult) -> CorrelationReport:
    eps = {section_label(sec): curves for sec, curves in sweep.eps.items()}
    return correlate_curves(sweep.spec.state_indices, sweep.xi, eps)


# --- minimum gap ------------------------------------------------------------

@dataclass(frozen=True)
class GapResult:
    param: float
    gap: float
    at_boundary: bool


def min_gap(sweep: SweepResult, level_i: int, level_j: int, refine: bool = True) -> GapResult:
    """Locate the smallest ``|E_i - E_j|`` along the sweep.

    Grid argmin, then a parabola through the neighbours; when the sweep's
    Hamiltonian is available the gap is minimized again by re-solving
    inside the bracketing interval.
    """
    levels = sweep.energies.shape[1]
    if not (0 <= level_i < levels and 0 <= level_j < levels):
        raise IndexError(f"levels ({level_i}, {level_j}) out of range 0..{levels - 1}")
    x = np.asarray(sweep.spec.values)
    gaps = np.abs(sweep.energies[:, level_i] - sweep.energies[:, level_j])
    i = int(np.argmin(gaps))
    if i == 0 or i == len(x) - 1:
        return GapResult(float(x[i]), float(gaps[i]), True)
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = gaps[i - 1], gaps[i], gaps[i + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    xv = -b / (2 * a) if a > 0 else x1
    lo, hi = min(x0, x2), max(x0, x2)
    xv = float(min(max(xv, lo), hi))
    yv = float(a * xv * xv + b * xv + (y1 - a * x1 * x1 - b * x1)) if a > 0 else float(y1)
    if not refine:
        return GapResult(xv, yv, False)

    def gap_at(v):
        es = _solve(sweep.spec, float(v))
        return abs(es.energies[level_i] - es.energies[level_j])

    res = minimize_scalar(gap_at, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    best = min([(gap_at(xv), xv), (float(res.fun), float(res.x))])
    return GapResult(best[1], best[0], False)


# --- disorder ---------------------------------------------------------------

@dataclass
class DisorderResult:
    case: str
    seed: int
    sd_values: tuple
    gaps: list                  # Delta list per sd value
    xi: dict                    # name -> [sd, state]
    across: CorrelationReport   # per state, along the sd axis
    per_sd: list                # CorrelationReport across states, one per sd

    def summary(self) -> dict:
        return {name: self.across.mean(name) for name in ("tei", "ipr", "pcc", "bd")}


def disorder_study(base: TcParams, sd_values, seed: int, case: str = "i", N: int = 6,
                   mean_gap: float = 5.6, Lambda: float = 1.2e-3,
                   grid: QuadratureGrid = DEFAULT_GRID, plan: AnglePlan | None = None,
                   workers: int = 1) -> DisorderResult:
    """Indicator/entropy correlations as the qubit-gap spread grows.

    Each sd value gets its own gap draw from sub-seed ``(seed, index)``, so
    changing one value never shifts the others' draws. States are tracked
    along the sd axis; the degenerate sd = 0 point takes its labels from
    its neighbour.
    """
    sd_values = tuple(float(s) for s in sd_values)
    if any(s < 0 or s > 0.2 * mean_gap + 1e-12 for s in sd_values):
        raise ValueError(f"sd values must lie in [0, {0.2 * mean_gap}]")
    params = tc_case(replace(base, Lambda=Lambda), case)
    M = params.M
    gaps = [sample_gaps(mean_gap, sd, M, sub_seed(seed, i)) for i, sd in enumerate(sd_values)]
    raw = ordered_map(lambda d: hermitian_eigensystem(build("tc", replace(params, Delta=tuple(d)), N)), gaps, workers)
    tracked = track_sequence(raw)
    plan = plan if plan is not None else default_plan(tracked[0].basis)
    dim = tracked[0].dim
    jobs = [(i, k) for i in range(len(sd_values)) for k in range(dim)]
    sets = ordered_map(lambda job: xi_set(tracked[job[0]].state(job[1]), grid, plan), jobs, workers)
    xi = {name: np.full((len(sd_values), dim), np.nan) for name in XI_NAMES}
    for (i, k), s in zip(jobs, sets):
        for name, val in s.as_dict().items():
            xi[name][i, k] = val
    states = tuple(range(dim))
    across = correlate_curves(states, xi)
    per_sd = []
    for i in range(len(sd_values)):
        row = {name: xi[name][i][:, None] for name in XI_NAMES}
        per_sd.append(_correlate_across_states(row))
    return DisorderResult(case, seed, sd_values, gaps, xi, across, per_sd)


def _correlate_across_states(row) -> CorrelationReport:
    ref = row["svne"][:, 0]
    return CorrelationReport([_entry(-1, name, "xi", ref, row[name][:, 0]) for name in ("tei", "ipr", "pcc", "bd")])


def disorder_sd_grid(points: int = 100, mean_gap: float = 5.6, fine: bool = False) -> tuple:
    """sd values from 0 to 0.2 mean_gap; ``fine`` uses steps of 2e-4 mean_gap."""
    top = 0.2 * mean_gap
    if fine:
        return grid_values(0.0, 2e-4 * mean_gap, 1001)
    return tuple(round(v, 12) for v in np.linspace(0.0, top, points))
