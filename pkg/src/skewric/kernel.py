"""Evaluation backend selection.

The compiled tape interpreter (skewric._evalcore, built from Cython) is
preferred; the pure-Python/numpy interpreter (skewric._evalcore_py) is the
fallback.  Both expose the same two entry points:

    run_scalar(codes, arg1, arg2, consts, point, out)  -> fills `out`
    run_batch(codes, arg1, arg2, consts, points)       -> (n_ops, n) array

Set SKEWRIC_PURE_EVAL=1 to force the pure backend (used by the benchmark
and for debugging).
"""

import os

if os.environ.get("SKEWRIC_PURE_EVAL"):
    from . import _evalcore_py as backend

    BACKEND = "python"
else:
    try:
        from . import _evalcore as backend  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _evalcore_py as backend

        BACKEND = "python"


def backend_name():
    return BACKEND
