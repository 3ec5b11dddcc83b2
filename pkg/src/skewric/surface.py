"""Connection calculus on plane charts.

A connection is stored through its eight coefficient fields Gamma^l_jk
(indices 0-based in code, 1-based in serialized form).  Curvature follows
the sign convention

    R(u, v) psi = nabla_v nabla_u psi - nabla_u nabla_v psi + nabla_[u,v] psi

so in coordinates

    R(d_l, d_j) d_k = [d_j G^m_lk - d_l G^m_jk
                       + G^m_js G^s_lk - G^m_ls G^s_jk] d_m.

The Ricci tensor is the contraction ric(v, w) = trace of u -> R(v, u) w,
calibrated so that ric equals the two-form rho whenever R = rho (x) Id;
the half-plane builtin (see skewric.lie2) then has ric_12 = +2 exactly.

All fields are immutable; operations are pure.  Residual checks sample
deterministic points from the chart (seed 24389, 100 points) unless given
explicit points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .chart import Chart2
from .errors import (
    DecompositionError,
    DegenerateFrameError,
    RecurrenceUndefinedError,
)
from .expr import ZERO, add, diff, div, mul, sub

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class OneForm2:
    """One-form xi = c1 dy1 + c2 dy2."""

    c1: ex.Expr
    c2: ex.Expr

    @property
    def comps(self):
        return (self.c1, self.c2)

    def __call__(self, vec):
        """Pairing with a vector of two fields (or numbers)."""
        v1, v2 = (ex.as_expr(v) for v in vec)
        return add(mul(self.c1, v1), mul(self.c2, v2))


ZERO_FORM = OneForm2(ZERO, ZERO)


@dataclass(frozen=True)
class TwoForm2:
    """Two-form with component rho_12 (rho_21 = -rho_12 implicit)."""

    c12: ex.Expr


@dataclass(frozen=True)
class Connection2:
    """Connection on a plane chart; gamma[l][j][k] holds Gamma^l_jk."""

    chart: Chart2
    gamma: tuple

    def g(self, l, j, k):
        return self.gamma[l][j][k]

    def coefficient_fields(self):
        return [self.gamma[l][j][k] for l in (0, 1) for j in (0, 1) for k in (0, 1)]


def make_connection(chart, coeffs):
    """Build a connection from a {(l, j, k): Expr-or-text} mapping with
    0-based indices; missing entries are zero."""
    table = {}
    for key, val in coeffs.items():
        table[key] = chart.parse(val) if isinstance(val, str) else ex.as_expr(val)
    gamma = tuple(
        tuple(tuple(table.get((l, j, k), ZERO) for k in (0, 1)) for j in (0, 1))
        for l in (0, 1)
    )
    return Connection2(chart=chart, gamma=gamma)


def flat_connection(chart):
    return make_connection(chart, {})


@dataclass(frozen=True)
class Curvature2:
    """Curvature components comp[l][j][k][m] of R(d_l, d_j) d_k = R^m d_m;
    antisymmetric in (l, j) by construction."""

    comp: tuple

    def operator_12(self):
        """The endomorphism R(d_1, d_2) as a matrix M[k][m]."""
        return tuple(tuple(self.comp[0][1][k][m] for m in (0, 1)) for k in (0, 1))


# ---------------------------------------------------------------------------
# basic tensors

def torsion_form(c):
    """theta_j = Gamma^k_jk - Gamma^k_kj (trace of the torsion)."""
    comps = []
    for j in (0, 1):
        acc = ZERO
        for k in (0, 1):
            acc = add(acc, sub(c.g(k, j, k), c.g(k, k, j)))
        comps.append(acc)
    return OneForm2(*comps)


def curvature(c):
    def component(l, j, k, m):
        d_part = sub(diff(c.g(m, l, k), j), diff(c.g(m, j, k), l))
        quad = ZERO
        for s in (0, 1):
            quad = add(quad, sub(mul(c.g(m, j, s), c.g(s, l, k)),
                                 mul(c.g(m, l, s), c.g(s, j, k))))
        return add(d_part, quad)

    comp = [[[[ZERO for _ in (0, 1)] for _ in (0, 1)] for _ in (0, 1)] for _ in (0, 1)]
    for k in (0, 1):
        for m in (0, 1):
            r = component(0, 1, k, m)
            comp[0][1][k][m] = r
            comp[1][0][k][m] = mul(ex.const(-1.0), r)
    freeze = tuple(tuple(tuple(tuple(row) for row in plane) for plane in block) for block in comp)
    return Curvature2(comp=freeze)


def ricci(c):
    """ric[j][k] with ric(v, w) = trace of u -> R(v, u) w."""
    R = curvature(c).comp
    return tuple(
        tuple(add(R[j][0][k][0], R[j][1][k][1]) for k in (0, 1)) for j in (0, 1)
    )


def exterior_d(xi):
    """(d xi)_12 = d_1 xi_2 - d_2 xi_1."""
    return TwoForm2(sub(diff(xi.c2, 0), diff(xi.c1, 1)))


def covariant_d_oneform(c, xi):
    """(nabla_j xi)_k = d_j xi_k - Gamma^l_jk xi_l, as a 2x2 field matrix."""
    comps = xi.comps
    return tuple(
        tuple(
            sub(diff(comps[k], j),
                add(mul(c.g(0, j, k), comps[0]), mul(c.g(1, j, k), comps[1])))
            for k in (0, 1)
        )
        for j in (0, 1)
    )


# ---------------------------------------------------------------------------
# residual checks

def max_abs_at(fields, points):
    fields = [f for f in fields]
    if not fields:
        return 0.0
    vals = ex.Evaluator(fields).at_many(points)
    return float(np.max(np.abs(vals)))


@dataclass(frozen=True)
class CheckReport:
    ok: bool
    residual: float


def is_ricci_skew(c, tol=DEFAULT_TOL, points=None):
    """Skew-symmetry of the Ricci tensor at sample points."""
    if points is None:
        points = c.chart.sample()
    ric = ricci(c)
    res = max_abs_at([ric[0][0], ric[1][1], add(ric[0][1], ric[1][0])], points)
    return CheckReport(ok=res <= tol, residual=res)


def is_projectively_flat(c, tol=DEFAULT_TOL, points=None):
    """Vanishing of the traceless part of R(d_1, d_2) at sample points;
    equivalent to skew-symmetry of the Ricci tensor on a surface."""
    if points is None:
        points = c.chart.sample()
    M = curvature(c).operator_12()
    fields = [mul(ex.const(0.5), sub(M[0][0], M[1][1])), M[0][1], M[1][0]]
    res = max_abs_at(fields, points)
    return CheckReport(ok=res <= tol, residual=res)


def curvature_residual(c, points=None):
    """Max absolute curvature component over sample points."""
    if points is None:
        points = c.chart.sample()
    M = curvature(c).operator_12()
    return max_abs_at([M[0][0], M[0][1], M[1][0], M[1][1]], points)


def is_torsionfree(c, points=None, tol=1e-12):
    theta = torsion_form(c)
    t1 = ex.fold_constants(theta.c1)
    t2 = ex.fold_constants(theta.c2)
    if t1.is_zero and t2.is_zero:
        return True
    if points is None:
        points = c.chart.sample()
    return max_abs_at([t1, t2], points) <= tol


# ---------------------------------------------------------------------------
# the flat decomposition

def shift(c, xi, sign):
    """The connection with coefficients Gamma^l_jk + sign * xi_j delta^l_k."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    comps = xi.comps
    combine = add if sign == 1 else sub
    gamma = tuple(
        tuple(
            tuple(combine(c.g(l, j, k), comps[j]) if l == k else c.g(l, j, k)
                  for k in (0, 1))
            for j in (0, 1)
        )
        for l in (0, 1)
    )
    return Connection2(chart=c.chart, gamma=gamma)


@dataclass(frozen=True)
class DecompositionReport:
    hypothesis_residual: float
    flatness_residual: float


def decompose_with(c, xi, tol=DEFAULT_TOL, points=None):
    """Given a one-form with d(xi) equal to the Ricci tensor of `c`
    (checked), return the flat connection D = c + xi (x) Id."""
    if points is None:
        points = c.chart.sample()
    ric = ricci(c)
    dxi = exterior_d(xi).c12
    hyp_fields = [ric[0][0], ric[1][1],
                  sub(dxi, ric[0][1]), add(dxi, ric[1][0])]
    hyp = max_abs_at(hyp_fields, points)
    if hyp > tol:
        raise DecompositionError("d(xi) does not match the Ricci tensor", hyp)
    d_conn = shift(c, xi, +1)
    flat = curvature_residual(d_conn, points)
    if flat > tol:
        raise DecompositionError("shifted connection is not flat", flat)
    return d_conn, DecompositionReport(hypothesis_residual=hyp, flatness_residual=flat)


def wong_connection(phi, chart):
    """Canonical coordinate form of a torsionfree connection with
    skew-symmetric Ricci tensor: Gamma^1_11 = -d_1 phi, Gamma^2_22 = d_2 phi,
    all other coefficients zero."""
    if isinstance(phi, str):
        phi = chart.parse(phi)
    return make_connection(chart, {
        (0, 0, 0): mul(ex.const(-1.0), diff(phi, 0)),
        (1, 1, 1): diff(phi, 1),
    })


def wong_gauge(phi, chart=None):
    """The builtin potential xi = (0, -d_2 phi); d(xi) equals the Ricci
    tensor of the canonical connection, so it decomposes it."""
    if isinstance(phi, str):
        phi = ex.parse(phi)
    return OneForm2(ZERO, mul(ex.const(-1.0), diff(phi, 1)))


# ---------------------------------------------------------------------------
# recurrence form of the Ricci two-form

@dataclass(frozen=True)
class RecurrenceReport:
    masked: int
    total: int
    identity_residual: float


def recurrence_form(c, tol=1e-8, points=None, mask_eps=1e-8):
    """One-form phi with nabla(rho) = phi (x) rho for the Ricci two-form
    rho; sample points where |rho_12| < mask_eps are masked out of the
    d(phi) = 2 rho identity check and reported."""
    if points is None:
        points = c.chart.sample()
    skew = is_ricci_skew(c, tol=max(tol, DEFAULT_TOL), points=points)
    if not skew.ok:
        raise RecurrenceUndefinedError(
            f"Ricci tensor is not skew (residual {skew.residual:.3e})")
    r = ricci(c)[0][1]
    r_vals = ex.evaluate_many(r, points)
    unmasked = np.abs(r_vals) >= mask_eps
    if not np.any(unmasked):
        raise RecurrenceUndefinedError("Ricci two-form vanishes on the sample set")
    comps = []
    for l in (0, 1):
        trace_part = add(c.g(0, l, 0), c.g(1, l, 1))
        comps.append(sub(div(diff(r, l), r), trace_part))
    phi = OneForm2(*comps)
    identity = sub(exterior_d(phi).c12, mul(ex.const(2.0), r))
    vals = ex.evaluate_many(identity, points[unmasked])
    residual = float(np.max(np.abs(vals)))
    report = RecurrenceReport(masked=int(np.sum(~unmasked)), total=len(points),
                              identity_residual=residual)
    return phi, report


# ---------------------------------------------------------------------------
# connections from frames and coframes

def connection_from_coframe(zeta, eta, chart, points=None):
    """The unique connection D with D(zeta) = D(eta) = 0, together with
    nabla = D - tau (x) Id for the torsion form tau of D; nabla is
    torsionfree with skew-symmetric Ricci tensor."""
    if points is None:
        points = chart.sample()
    det = sub(mul(zeta.c1, eta.c2), mul(zeta.c2, eta.c1))
    det_vals = ex.evaluate_many(det, points)
    if np.min(np.abs(det_vals)) < 1e-9:
        raise DegenerateFrameError("coframe is degenerate on the sample box")
    zc, ec = zeta.comps, eta.comps
    gamma = [[[None, None], [None, None]], [[None, None], [None, None]]]
    for j in (0, 1):
        for k in (0, 1):
            dz = diff(zc[k], j)
            de = diff(ec[k], j)
            gamma[0][j][k] = div(sub(mul(eta.c2, dz), mul(zeta.c2, de)), det)
            gamma[1][j][k] = div(sub(mul(zeta.c1, de), mul(eta.c1, dz)), det)
    d_conn = Connection2(chart=chart, gamma=tuple(
        tuple(tuple(row) for row in plane) for plane in gamma))
    tau = torsion_form(d_conn)
    nabla = shift(d_conn, tau, -1)
    return d_conn, nabla


def connection_with_parallel_frame(v, w, chart, points=None):
    """The unique connection D making the frame fields v, w parallel
    (equivalently, their dual coframe parallel)."""
    if points is None:
        points = chart.sample()
    det = sub(mul(v[0], w[1]), mul(v[1], w[0]))
    det_vals = ex.evaluate_many(det, points)
    if np.min(np.abs(det_vals)) < 1e-9:
        raise DegenerateFrameError("frame is degenerate on the sample box")
    gamma = [[[None, None], [None, None]], [[None, None], [None, None]]]
    for l in (0, 1):
        for j in (0, 1):
            dv = diff(v[l], j)
            dw = diff(w[l], j)
            gamma[l][j][0] = div(sub(mul(v[1], dw), mul(w[1], dv)), det)
            gamma[l][j][1] = div(sub(mul(w[0], dv), mul(v[0], dw)), det)
    return Connection2(chart=chart, gamma=tuple(
        tuple(tuple(row) for row in plane) for plane in gamma))


def connection_from_frame_table(chart, frame, table):
    """Translate a connection given on a frame into coordinates.

    `frame` is a pair of vector fields F_0, F_1 (each a pair of Exprs);
    `table[a][b]` lists the frame coefficients of nabla_{F_a} F_b.
    """
    f0, f1 = frame
    det = sub(mul(f0[0], f1[1]), mul(f0[1], f1[0]))
    # alpha[j][a]: coefficient of F_a in d_j
    alpha = (
        (div(f1[1], det), div(mul(ex.const(-1.0), f0[1]), det)),
        (div(mul(ex.const(-1.0), f1[0]), det), div(f0[0], det)),
    )
    fmat = (f0, f1)

    def directional(fa, fn):
        return add(mul(fa[0], diff(fn, 0)), mul(fa[1], diff(fn, 1)))

    gamma = [[[ZERO, ZERO], [ZERO, ZERO]], [[ZERO, ZERO], [ZERO, ZERO]]]
    for j in (0, 1):
        for k in (0, 1):
            out = [ZERO, ZERO]
            for a in (0, 1):
                for b in (0, 1):
                    # derivative part: alpha_ja (F_a alpha_kb) F_b
                    damt = mul(alpha[j][a], directional(fmat[a], alpha[k][b]))
                    for i in (0, 1):
                        out[i] = add(out[i], mul(damt, fmat[b][i]))
                    # table part: alpha_ja alpha_kb (table coefficients) F_c
                    coeff = mul(alpha[j][a], alpha[k][b])
                    for cc in (0, 1):
                        piece = mul(coeff, table[a][b][cc])
                        for i in (0, 1):
                            out[i] = add(out[i], mul(piece, fmat[cc][i]))
            for i in (0, 1):
                gamma[i][j][k] = out[i]
    return Connection2(chart=chart, gamma=tuple(
        tuple(tuple(row) for row in plane) for plane in gamma))


# ---------------------------------------------------------------------------
# serialization

_GAMMA_KEYS = {(l, j, k): f"{l + 1}{j + 1}{k + 1}" for l in (0, 1) for j in (0, 1) for k in (0, 1)}


def connection_to_dict(c):
    gamma = {}
    for (l, j, k), key in _GAMMA_KEYS.items():
        g = c.g(l, j, k)
        if not g.is_zero:
            gamma[key] = ex.to_infix(g)
    return {
        "chart": {
            "box": [list(iv) for iv in c.chart.box],
            "excluded": [ex.to_infix(f) for f in c.chart.excluded],
        },
        "gamma": gamma,
    }


def connection_from_dict(data):
    chart_data = data.get("chart", {})
    box = tuple(tuple(iv) for iv in chart_data.get("box", ((-1.0, 1.0), (-1.0, 1.0))))
    excluded = tuple(ex.parse(s) for s in chart_data.get("excluded", []))
    chart = Chart2(box=box, excluded=excluded)
    coeffs = {}
    for (l, j, k), key in _GAMMA_KEYS.items():
        if key in data.get("gamma", {}):
            coeffs[(l, j, k)] = chart.parse(data["gamma"][key])
    return make_connection(chart, coeffs)
