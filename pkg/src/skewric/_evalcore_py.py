"""Pure-Python tape interpreter (fallback evaluation backend).

Semantics match skewric._evalcore: division by a denominator below 1e-300
in magnitude and log of a non-positive argument raise SingularPointError;
integer powers are computed by repeated multiplication.
"""

import math

import numpy as np

from .errors import SingularPointError

_TINY = 1e-300


def run_scalar(codes, arg1, arg2, consts, point, out):
    vals = [0.0] * len(codes)
    for i in range(len(codes)):
        c = codes[i]
        a = arg1[i]
        b = arg2[i]
        if c == 0:
            vals[i] = consts[a]
        elif c == 1:
            vals[i] = point[a]
        elif c == 2:
            vals[i] = vals[a] + vals[b]
        elif c == 3:
            vals[i] = vals[a] - vals[b]
        elif c == 4:
            vals[i] = vals[a] * vals[b]
        elif c == 5:
            den = vals[b]
            if abs(den) < _TINY:
                raise SingularPointError("division by a near-zero denominator")
            vals[i] = vals[a] / den
        elif c == 6:
            x = vals[a]
            k = b if b >= 0 else -b
            r = 1.0
            for _ in range(k):
                r *= x
            if b < 0:
                if abs(r) < _TINY:
                    raise SingularPointError("negative power of a near-zero base")
                r = 1.0 / r
            vals[i] = r
        elif c == 7:
            try:
                vals[i] = math.exp(vals[a])
            except OverflowError:
                vals[i] = math.inf
        elif c == 8:
            x = vals[a]
            if x <= 0.0:
                raise SingularPointError("log of a non-positive argument")
            vals[i] = math.log(x)
        elif c == 9:
            vals[i] = math.sin(vals[a])
        elif c == 10:
            vals[i] = math.cos(vals[a])
        else:
            vals[i] = math.tanh(vals[a])
    out[:] = vals


def run_batch(codes, arg1, arg2, consts, points):
    n_ops = len(codes)
    n = points.shape[0]
    slots = np.empty((n_ops, n), dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n_ops):
            c = codes[i]
            a = arg1[i]
            b = arg2[i]
            if c == 0:
                slots[i, :] = consts[a]
            elif c == 1:
                slots[i, :] = points[:, a]
            elif c == 2:
                np.add(slots[a], slots[b], out=slots[i])
            elif c == 3:
                np.subtract(slots[a], slots[b], out=slots[i])
            elif c == 4:
                np.multiply(slots[a], slots[b], out=slots[i])
            elif c == 5:
                den = slots[b]
                if np.any(np.abs(den) < _TINY):
                    raise SingularPointError("division by a near-zero denominator")
                np.divide(slots[a], den, out=slots[i])
            elif c == 6:
                x = slots[a]
                k = b if b >= 0 else -b
                r = np.ones(n, dtype=np.float64)
                for _ in range(k):
                    r *= x
                if b < 0:
                    if np.any(np.abs(r) < _TINY):
                        raise SingularPointError("negative power of a near-zero base")
                    r = 1.0 / r
                slots[i, :] = r
            elif c == 7:
                np.exp(slots[a], out=slots[i])
            elif c == 8:
                x = slots[a]
                if np.any(x <= 0.0):
                    raise SingularPointError("log of a non-positive argument")
                np.log(x, out=slots[i])
            elif c == 9:
                np.sin(slots[a], out=slots[i])
            elif c == 10:
                np.cos(slots[a], out=slots[i])
            else:
                np.tanh(slots[a], out=slots[i])
    return slots
