"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so the environment switch has no
effect here. Outputs are checked for agreement before timing.
"""

import argparse
import sys
import timeit

import numpy as np

from tomoscope import _pykernels
from tomoscope.models import AtomFieldParams, TcParams, build, sample_gaps, tc_case
from tomoscope.tomography import DEFAULT_GRID

try:
    from tomoscope import _ckernels
except ImportError:
    _ckernels = None


def matrices():
    yield "atom_field N=6 (7x7)", build("atom_field", AtomFieldParams(g=0.3), 6).matrix
    tc = tc_case(TcParams(Delta=tuple(sample_gaps(5.6, 1.12, 5, 0)), Lambda=1e-3), "i")
    yield "tc M=5 N=6 (32x32)", build("tc", tc, 6).matrix


def densities(rng):
    x = DEFAULT_GRID.x
    dx = DEFAULT_GRID.dx
    w = rng.random((len(x), len(x)))
    yield "cv section 321x321", (w / (w.sum() * dx * dx), dx, dx, x, x)
    h = rng.random((len(x), 32))
    yield "hybrid section 321x32", (h / (h.sum() * dx), dx, 1.0, x, np.linspace(-2.5, 2.5, 32))


def bench(fn, args, repeat):
    n, _ = timeit.Timer(lambda: fn(*args)).autorange()
    return min(timeit.repeat(lambda: fn(*args), number=n, repeat=repeat)) / n


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<14} {'case':<24} {'python':>12} {'cython':>12} {'speedup':>8}")
    for label, m in matrices():
        ep, _, _ = _pykernels.jacobi_eigh(m)
        ec, _, _ = _ckernels.jacobi_eigh(m)
        assert np.allclose(np.sort(ep), np.sort(ec), atol=1e-10)
        tp = bench(_pykernels.jacobi_eigh, (m,), args.repeat)
        tc = bench(_ckernels.jacobi_eigh, (m,), args.repeat)
        print(f"{'jacobi_eigh':<14} {label:<24} {tp * 1e3:>10.3f}ms {tc * 1e3:>10.3f}ms {tp / tc:>7.1f}x")
    for label, a in densities(rng):
        assert np.allclose(_pykernels.section_stats(*a), _ckernels.section_stats(*a), rtol=1e-10, atol=1e-12)
        tp = bench(_pykernels.section_stats, a, args.repeat)
        tc = bench(_ckernels.section_stats, a, args.repeat)
        print(f"{'section_stats':<14} {label:<24} {tp * 1e3:>10.3f}ms {tc * 1e3:>10.3f}ms {tp / tc:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
