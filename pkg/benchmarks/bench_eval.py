"""Benchmark of the compiled evaluation core against the pure-Python
fallback.

Two workloads dominate the package's runtime:
  * batch evaluation of large curvature tapes at many sample points
    (extension-metric certification), and
  * repeated scalar evaluation of small coefficient tapes (RK4 geodesic
    stepping).

Usage: python3 benchmarks/bench_eval.py
"""

import importlib
import time

import numpy as np

from skewric import expr as ex
from skewric import surface as sf
from skewric import walker4 as w4
from skewric.chart import Chart2

compiled = None
try:
    compiled = importlib.import_module("skewric._evalcore")
except ImportError:
    pass
pure = importlib.import_module("skewric._evalcore_py")


def _time(fn, min_seconds=0.3):
    fn()  # warm up
    n = 1
    while True:
        start = time.perf_counter()
        for _ in range(n):
            fn()
        elapsed = time.perf_counter() - start
        if elapsed >= min_seconds:
            return elapsed / n
        n = max(n + 1, int(n * min_seconds / max(elapsed, 1e-9)))


def batch_workload():
    chart = Chart2(box=((0.5, 2.0), (0.5, 2.0)))
    c = sf.wong_connection(ex.parse("sin(y1)*y2"), chart)
    lam = ((ex.parse("sin(y1)"), ex.ZERO), (ex.ZERO, ex.parse("y2^2")))
    g = w4.riemann_extension(c, lam)
    prog = g.curvature_evaluator().program
    pts = np.ascontiguousarray(g.chart.sample(n=200))
    return prog, pts


def scalar_workload():
    chart = Chart2(box=((-3.0, 3.0), (-3.0, 3.0)))
    c = sf.wong_connection(ex.parse("exp(y1+y2) + sin(y1)*y2"), chart)
    prog = ex.compile_program(c.coefficient_fields())
    return prog, np.array([0.3, -0.7])


def run_batch(backend, prog, pts):
    return backend.run_batch(prog.codes, prog.arg1, prog.arg2, prog.consts, pts)


def run_scalar(backend, prog, pt, buf):
    backend.run_scalar(prog.codes, prog.arg1, prog.arg2, prog.consts, pt, buf)


def main():
    rows = []

    prog, pts = batch_workload()
    ref = run_batch(pure, prog, pts)
    timings = {"python": _time(lambda: run_batch(pure, prog, pts))}
    if compiled is not None:
        got = run_batch(compiled, prog, pts)
        assert np.allclose(got, ref, rtol=1e-13, atol=1e-300), "backends disagree"
        timings["compiled"] = _time(lambda: run_batch(compiled, prog, pts))
    rows.append((f"curvature tape ({prog.n_ops} ops) x {len(pts)} points", timings))

    prog, pt = scalar_workload()
    buf = np.empty(prog.n_ops)
    timings = {"python": _time(lambda: run_scalar(pure, prog, pt, buf))}
    if compiled is not None:
        buf2 = np.empty(prog.n_ops)
        run_scalar(pure, prog, pt, buf)
        run_scalar(compiled, prog, pt, buf2)
        assert np.allclose(buf, buf2, rtol=1e-13, atol=1e-300), "backends disagree"
        timings["compiled"] = _time(lambda: run_scalar(compiled, prog, pt, buf2))
    rows.append((f"coefficient tape ({prog.n_ops} ops), single point", timings))

    print(f"{'workload':<48} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for name, timings in rows:
        py = timings["python"]
        if "compiled" in timings:
            cy = timings["compiled"]
            print(f"{name:<48} {py * 1e6:>10.1f}us {cy * 1e6:>10.1f}us "
                  f"{py / cy:>8.1f}x")
        else:
            print(f"{name:<48} {py * 1e6:>10.1f}us {'n/a':>12} {'':>9}")
    if compiled is None:
        print("\ncompiled core not built; showing the pure backend only")


if __name__ == "__main__":
    main()
