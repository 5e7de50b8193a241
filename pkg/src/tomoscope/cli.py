"""``tomoscope`` command-line front end.

Every CSV starts with ``#`` comment lines carrying the config hash and
seed. Floats are written with 12 significant digits. Re-running a config
with the same seed reproduces the CSVs byte for byte at any thread count.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tomoscope import __version__
from tomoscope._kernels import BACKEND, ConvergenceError
from tomoscope.analysis import (
    XI_NAMES,
    EigenCache,
    SweepPointError,
    SweepSpec,
    correlate_curves,
    correlation_report,
    disorder_sd_grid,
    disorder_study,
    ordered_map,
    run_sweep,
    section_label,
    solve_tracked,
)
from tomoscope.config import COMMANDS, ConfigError, RunConfig, parse_config
from tomoscope.fock import svne
from tomoscope.indicators import cv_plan, hybrid_plan, make_section, section_indicators, xi_set
from tomoscope.models import AtomFieldParams, BecParams, TcParams, sample_gaps, tc_case
from tomoscope.tomography import QuadratureGrid, write_section_csv

log = logging.getLogger("tomoscope")

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2
XI_COLUMNS = ["param", "state_k", "xi_svne", "xi_tei", "xi_ipr", "xi_pcc", "xi_bd"]
EPS_COLUMNS = ["param", "state_k", "theta_a", "theta_b", "xi_svne", "eps_tei", "eps_ipr", "eps_pcc", "eps_bd"]


def fmt(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v + 0.0:.12g}"  # + 0.0 folds -0.0 into 0.0


@dataclass
class OutputBundle:
    directory: Path
    files: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)


class _Writer:
    def __init__(self, cfg: RunConfig, seed: int, out: Path, bundle: OutputBundle):
        self.header = [
            f"tomoscope {__version__} command={cfg.command} model={cfg.model.kind}",
            f"config_hash={cfg.content_hash()} seed={seed}",
        ]
        self.out = out
        self.bundle = bundle

    def csv(self, name, columns, rows, extra_header=()):
        path = self.out / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            for line in self.header + list(extra_header):
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([fmt(v) for v in row])
        self.bundle.files.append(name)
        return path

    def text(self, name, body):
        (self.out / name).write_text(body, encoding="utf-8")
        self.bundle.files.append(name)


# --- model plumbing ---------------------------------------------------------

def model_params(cfg: RunConfig, seed: int):
    m = cfg.model
    if m.kind == "bec":
        return BecParams(omega1=m.omega1, lam=m.lam, omega0=m.omega0, U=m.U)
    if m.kind == "atom_field":
        return AtomFieldParams(omega_f=m.omega_f, omega_a=m.omega_a, gamma=m.gamma, g=m.g)
    delta = m.Delta if m.Delta is not None else tuple(sample_gaps(m.gap_mean, m.gap_sd, m.M, seed))
    p = TcParams(Delta=tuple(delta), Omega_f=m.Omega_f, chi=m.chi, Lambda=m.Lambda,
                 Lambda_s=m.Lambda_s, epsilon=m.epsilon, M=m.M)
    return tc_case(p, m.case) if m.case else p


def make_grid(cfg: RunConfig) -> QuadratureGrid:
    return QuadratureGrid(cfg.numerics.x_max, cfg.numerics.n_points)


def make_plan(cfg: RunConfig):
    p = cfg.numerics.plan
    if cfg.model.kind == "tc":
        return hybrid_plan(cfg.model.M, p.field_angles, p.axes)
    return cv_plan(p.cv_angles)


def make_spec(cfg: RunConfig, seed: int, values, compute_xi=True) -> SweepSpec:
    return SweepSpec(
        model=cfg.model.kind, swept=cfg.swept, values=tuple(values), fixed=model_params(cfg, seed),
        N=cfg.model.N, states=cfg.states, grid=make_grid(cfg), plan=make_plan(cfg),
        eps_sections=tuple(s.spec() for s in cfg.sections), closed_form=cfg.closed_form,
        compute_xi=compute_xi,
    )


# --- row builders -----------------------------------------------------------

def energy_rows(values, energies):
    for i, v in enumerate(values):
        for lvl, e in enumerate(energies[i]):
            yield (v, lvl, e)


def xi_rows(values, states, xi):
    for i, v in enumerate(values):
        for j, k in enumerate(states):
            yield (v, k) + tuple(xi[name][i, j] for name in XI_NAMES)


def eps_rows(values, states, xi, eps):
    for sec, curves in eps.items():
        a, b = sec
        for i, v in enumerate(values):
            for j, k in enumerate(states):
                yield (v, k, a, b, xi["svne"][i, j]) + tuple(curves[n][i, j] for n in ("tei", "ipr", "pcc", "bd"))


def pcc_rows(report):
    for e in report.entries:
        name = f"xi_{e.indicator}" if e.source == "xi" else f"{e.source.replace('eps', 'eps_' + e.indicator, 1)}"
        yield (e.state_k, name, e.pcc)


def flagged(report):
    return [{"state_k": e.state_k, "indicator": e.indicator, "source": e.source, "flag": e.flag}
            for e in report.entries if e.flag]


# --- gnuplot companions -------------------------------------------------------

_GP_HEAD = "set datafile separator comma\nset datafile commentschars '#'\n"


def gp_energies(swept, levels):
    return (_GP_HEAD + f"set xlabel '{swept}'\nset ylabel 'energy'\nunset key\n"
            f"plot for [k=0:{levels - 1}] 'energies.csv' using 1:($2==k ? $3 : 1/0) with lines\n")


def gp_xi(swept, states):
    ks = " ".join(str(k) for k in states)
    return (_GP_HEAD + f"set xlabel '{swept}'\nset key outside\n"
            f"do for [k in \"{ks}\"] {{\n"
            f"  set title sprintf('state %s', k)\n"
            "  plot 'xi.csv' using 1:($2==k+0 ? $3 : 1/0) with lines title 'xi_svne', \\\n"
            "       '' using 1:($2==k+0 ? $4 : 1/0) with lines title 'xi_tei', \\\n"
            "       '' using 1:($2==k+0 ? $5 : 1/0) with lines title 'xi_ipr', \\\n"
            "       '' using 1:($2==k+0 ? $6 : 1/0) with lines title 'xi_pcc', \\\n"
            "       '' using 1:($2==k+0 ? $7 : 1/0) with lines title 'xi_bd'\n"
            "  pause -1\n}\n")


def gp_tomogram(cv):
    if cv:
        return _GP_HEAD + "set xlabel 'x_a'\nset ylabel 'x_b'\nplot 'tomogram.csv' using 1:2:3 with image\n"
    return _GP_HEAD + "set xlabel 'x'\nset ylabel 'outcome'\nplot 'tomogram.csv' using 1:0:3 with points palette\n"


# --- commands ---------------------------------------------------------------

def cmd_spectrum(cfg, seed, w, ctx):
    spec = make_spec(cfg, seed, cfg.sweep_values(), compute_xi=False)
    raw, _ = solve_tracked(spec, cfg.threads, ctx["cache"])
    energies = np.array([es.energies for es in raw])
    w.csv("energies.csv", ["param", "level_index", "energy"], energy_rows(spec.values, energies),
          [f"swept={spec.swept}"])
    if cfg.plots:
        w.text("energies.gp", gp_energies(spec.swept, energies.shape[1]))


def cmd_svne(cfg, seed, w, ctx):
    spec = make_spec(cfg, seed, cfg.sweep_values(), compute_xi=False)
    _, tracked = solve_tracked(spec, cfg.threads, ctx["cache"])
    rows = ((v, k, svne(tracked[i].state(k))) for i, v in enumerate(spec.values) for k in spec.state_indices)
    w.csv("svne.csv", ["param", "state_k", "xi_svne"], rows, [f"swept={spec.swept}"])


def _single_point(cfg, seed, ctx):
    values = cfg.sweep_values()
    if len(values) != 1:
        raise ConfigError(f"sweep: command {cfg.command} works at a single parameter value, got {len(values)}")
    spec = make_spec(cfg, seed, values)
    _, tracked = solve_tracked(spec, 1, ctx["cache"])
    return spec, tracked[0]


def cmd_tomogram(cfg, seed, w, ctx):
    spec, es = _single_point(cfg, seed, ctx)
    if cfg.state >= es.dim:
        raise ConfigError(f"state: index {cfg.state} out of range 0..{es.dim - 1}")
    sec = cfg.sections[0].spec() if cfg.sections else ((0.0, 0.0) if cfg.model.kind != "tc" else (0.0, "x"))
    section = make_section(es.state(cfg.state), sec, spec.grid)
    path = w.out / "tomogram.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        write_section_csv(section, fh, w.header + [
            f"{spec.swept}={fmt(spec.values[0])} state_k={cfg.state} section={fmt(sec[0])},{fmt(sec[1])}",
            f"normalization={fmt(section.normalization)}"])
    w.bundle.files.append("tomogram.csv")
    if cfg.plots:
        w.text("tomogram.gp", gp_tomogram(cfg.model.kind != "tc"))


def cmd_indicators(cfg, seed, w, ctx):
    spec, es = _single_point(cfg, seed, ctx)
    states = spec.state_indices
    sections = [s.spec() for s in cfg.sections] or list(spec.angle_plan.sections)
    xi_list = ordered_map(lambda k: xi_set(es.state(k), spec.grid, spec.angle_plan), states, cfg.threads)
    v = spec.values[0]
    w.csv("xi.csv", XI_COLUMNS,
          ((v, k) + tuple(x.as_dict()[n] for n in XI_NAMES) for k, x in zip(states, xi_list)),
          [f"swept={spec.swept}", f"plan={spec.angle_plan.name}"])

    def eps_for(k):
        st = es.state(k)
        return [section_indicators(make_section(st, s, spec.grid)) for s in sections]

    eps_list = ordered_map(eps_for, states, cfg.threads)
    rows = []
    for k, x, inds in zip(states, xi_list, eps_list):
        for ind in inds:
            a, b = ind.angles
            d = ind.as_dict()
            rows.append((v, k, a, b, x.xi_svne, d["tei"], d["ipr"], d["pcc"], d["bd"]))
    w.csv("eps.csv", EPS_COLUMNS, rows, [f"swept={spec.swept}"])


def _run_and_write_sweep(cfg, seed, w, ctx):
    spec = make_spec(cfg, seed, cfg.default_sweep_values())
    res = run_sweep(spec, cfg.threads, ctx["cache"])
    extra = [f"swept={spec.swept}", f"plan={spec.angle_plan.name}"]
    w.csv("energies.csv", ["param", "level_index", "energy"], energy_rows(spec.values, res.energies), extra)
    w.csv("xi.csv", XI_COLUMNS, xi_rows(spec.values, spec.state_indices, res.xi), extra)
    if res.eps:
        w.csv("eps.csv", EPS_COLUMNS, eps_rows(spec.values, spec.state_indices, res.xi, res.eps), extra)
    if cfg.plots:
        w.text("energies.gp", gp_energies(spec.swept, res.energies.shape[1]))
        w.text("xi.gp", gp_xi(spec.swept, spec.state_indices))
    return res


def cmd_sweep(cfg, seed, w, ctx):
    _run_and_write_sweep(cfg, seed, w, ctx)


def read_csv_table(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return list(reader)


def curves_from_csv(directory: Path):
    """Rebuild ``(states, xi, eps)`` curve arrays from ``xi.csv``/``eps.csv``."""
    rows = read_csv_table(directory / "xi.csv")
    if not rows:
        raise ValueError(f"{directory / 'xi.csv'} has no data rows")
    params = sorted({float(r["param"]) for r in rows}, key=lambda v: v)
    states = sorted({int(r["state_k"]) for r in rows})
    pi = {p: i for i, p in enumerate(params)}
    sj = {k: j for j, k in enumerate(states)}
    xi = {n: np.full((len(params), len(states)), np.nan) for n in XI_NAMES}
    for r in rows:
        i, j = pi[float(r["param"])], sj[int(r["state_k"])]
        for n in XI_NAMES:
            xi[n][i, j] = float(r[f"xi_{n}"])
    eps = {}
    eps_path = directory / "eps.csv"
    if eps_path.exists():
        grouped = defaultdict(list)
        for r in read_csv_table(eps_path):
            b = r["theta_b"]
            try:
                bval = float(b)
            except ValueError:
                bval = b
            grouped[section_label((float(r["theta_a"]), bval))].append(r)
        for label, rs in grouped.items():
            curves = {n: np.full((len(params), len(states)), np.nan) for n in ("tei", "ipr", "pcc", "bd")}
            for r in rs:
                i, j = pi[float(r["param"])], sj[int(r["state_k"])]
                for n in curves:
                    curves[n][i, j] = float(r[f"eps_{n}"])
            eps[label] = curves
    return states, xi, eps


def cmd_correlate(cfg, seed, w, ctx):
    if cfg.input:
        src = Path(cfg.input)
        directory = src.parent if src.is_file() else src
        states, xi, eps = curves_from_csv(directory)
        report = correlate_curves(states, xi, eps)
    else:
        report = correlation_report(_run_and_write_sweep(cfg, seed, w, ctx))
    w.csv("pcc.csv", ["state_k", "indicator", "pcc"], pcc_rows(report))
    ctx["manifest_extra"]["flagged"] = flagged(report)


def cmd_disorder(cfg, seed, w, ctx):
    d = cfg.disorder
    m = cfg.model
    sd_values = d.sd_values if d.sd_values is not None else disorder_sd_grid(d.sd_points, m.gap_mean, d.fine)
    base = model_params(cfg, seed)
    res = disorder_study(base, sd_values, seed, case=d.case, N=m.N, mean_gap=m.gap_mean, Lambda=d.Lambda,
                         grid=make_grid(cfg), plan=make_plan(cfg), workers=cfg.threads)
    states = tuple(range(res.xi["svne"].shape[1]))
    extra = ["swept=sd", f"case={d.case} Lambda={fmt(d.Lambda)}"]
    w.csv("xi.csv", XI_COLUMNS, xi_rows(res.sd_values, states, res.xi), extra)
    w.csv("gaps.csv", ["param", "qubit", "Delta"],
          ((sd, q, g) for sd, gaps in zip(res.sd_values, res.gaps) for q, g in enumerate(gaps)), extra)
    w.csv("pcc.csv", ["state_k", "indicator", "pcc"], pcc_rows(res.across), extra)
    w.csv("pcc_by_sd.csv", ["param", "indicator", "pcc"],
          ((sd, f"xi_{e.indicator}", e.pcc) for sd, rep in zip(res.sd_values, res.per_sd) for e in rep.entries),
          extra)
    ctx["manifest_extra"]["summary_mean_pcc"] = res.summary()
    ctx["manifest_extra"]["flagged"] = flagged(res.across)


COMMAND_FUNCS = {
    "spectrum": cmd_spectrum,
    "svne": cmd_svne,
    "tomogram": cmd_tomogram,
    "indicators": cmd_indicators,
    "sweep": cmd_sweep,
    "correlate": cmd_correlate,
    "disorder": cmd_disorder,
}


def resolve_seed(cfg: RunConfig, flag_seed: int | None = None) -> int:
    if flag_seed is not None:
        return flag_seed
    if cfg.seed is not None:
        return cfg.seed
    env = os.environ.get("TOMOSCOPE_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"TOMOSCOPE_SEED: not an integer: {env!r}") from None
    return 0


def execute(cfg: RunConfig, seed: int | None = None, cache: EigenCache | None = None) -> OutputBundle:
    """Run ``cfg`` and write its outputs plus ``manifest.json``."""
    seed = resolve_seed(cfg, seed)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    bundle = OutputBundle(out)
    ctx = {"cache": cache if cache is not None else EigenCache(), "manifest_extra": {}}
    t0 = time.perf_counter()
    COMMAND_FUNCS[cfg.command](cfg, seed, _Writer(cfg, seed, out, bundle), ctx)
    bundle.manifest = {
        "tool": "tomoscope",
        "version": __version__,
        "backend": BACKEND,
        "command": cfg.command,
        "config_hash": cfg.content_hash(),
        "seed": seed,
        "threads": cfg.threads,
        "wall_time_s": round(time.perf_counter() - t0, 3),
        "eigen_cache": {"entries": len(ctx["cache"]), "hits": ctx["cache"].hits},
        "files": list(bundle.files),
        "config": cfg.model_dump(mode="json"),
        **ctx["manifest_extra"],
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(bundle.manifest, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return bundle


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tomoscope", description="Tomographic entanglement indicators for "
                                "two-mode, atom-field and multi-qubit cavity models.")
    p.add_argument("command", nargs="?", choices=COMMANDS, help="overrides the config's command")
    p.add_argument("--config", help="JSON configuration file ('-' reads stdin)")
    p.add_argument("--model", choices=("bec", "atom_field", "tc"), help="model kind when no config is given")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int)
    p.add_argument("--grid-points", type=int, dest="grid_points")
    p.add_argument("--x-max", type=float, dest="x_max")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"tomoscope {__version__} ({BACKEND})")
    return p


def load_config(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            text = sys.stdin.read() if args.config == "-" else Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"--config: cannot read {args.config}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--config: invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("<root>: configuration must be a JSON object")
    if args.command:
        data["command"] = args.command
    if args.model:
        data.setdefault("model", {})
        if isinstance(data["model"], dict):
            data["model"]["kind"] = args.model
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out:
        data["output"] = args.out
    if args.threads is not None:
        data["threads"] = args.threads
    if args.grid_points is not None or args.x_max is not None:
        num = data.setdefault("numerics", {})
        if isinstance(num, dict):
            if args.grid_points is not None:
                num["n_points"] = args.grid_points
            if args.x_max is not None:
                num["x_max"] = args.x_max
    return parse_config(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        seed = resolve_seed(cfg)
    except ConfigError as exc:
        print(f"tomoscope: invalid configuration\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        bundle = execute(cfg, seed)
    except ConfigError as exc:
        print(f"tomoscope: invalid configuration\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SweepPointError, ConvergenceError, ArithmeticError, ValueError, OSError) as exc:
        print(f"tomoscope: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    log.info("wrote %s to %s", ", ".join(bundle.files), bundle.directory)
    print(f"{cfg.command}: wrote {len(bundle.files)} file(s) to {bundle.directory}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
