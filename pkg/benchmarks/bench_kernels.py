"""Time the compiled row scans against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--rows N] [--repeat R]

The matrix is the pattern table of the amplified period-doubling word, the
same shape the cylinder algebra scans when it looks up cylinders and
reflection-fixed atoms.
"""
import argparse
import timeit

import numpy as np

from castleworks import _kernels_py, kernels
from castleworks.cylinders import Subshift
from castleworks.groups import InfiniteDihedral
from castleworks.words import amplify, period_doubling


def table(rows: int):
    w = amplify(period_doubling(fill=None, holes=(1, 0)))
    X = Subshift(w, 1024, 64)
    M = np.ascontiguousarray(X.values[:rows])
    return X, M


def workloads(X, M):
    D = InfiniteDihedral()
    cells = X.cells[: X.ncols(32)]
    where = {c: j for j, c in enumerate(cells)}
    cols = np.arange(len(cells))
    target = M[7, : len(cells)]
    a, b = [], []
    t = (0, 1)
    for j, c in enumerate(cells):
        i = where.get(D.mul(t, c))
        if i is not None and i != j:
            a.append(j)
            b.append(i)
    return {"match_rows": (kernels.match_rows, (M, cols, target)),
            "match_pairs": (kernels.match_pairs, (M, a, b))}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=None, help="rows to scan (default: all)")
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    try:
        from castleworks import _kernels as compiled
    except ImportError:
        compiled = None
    X, M = table(args.rows)
    print(f"matrix {M.shape[0]} x {M.shape[1]}, selected backend: {kernels.BACKEND}")
    print(f"{'kernel':<12}{'numpy ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, (fn, fargs) in workloads(X, M).items():
        py = min(timeit.repeat(lambda: fn(*fargs, impl=_kernels_py), number=1, repeat=args.repeat)) * 1e3
        if compiled is None:
            print(f"{name:<12}{py:>12.3f}{'n/a':>12}{'':>10}")
            continue
        assert np.array_equal(fn(*fargs, impl=_kernels_py), fn(*fargs, impl=compiled))
        cy = min(timeit.repeat(lambda: fn(*fargs, impl=compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<12}{py:>12.3f}{cy:>12.3f}{py / cy:>9.1f}x")


if __name__ == "__main__":
    main()
