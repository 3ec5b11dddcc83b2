"""Neutral-signature extension metrics on the plane cotangent bundle and
their pointwise certification.

Coordinates on the four-dimensional chart are ordered (y1, y2, x1, x2)
with x1, x2 the fibre coordinates.  A torsionfree plane connection with
coefficient fields Gamma^j_kl induces the metric

    g = 2 dx_j dy^j + (lambda_kl - 2 x_j Gamma^j_kl) dy^k dy^l

(symmetric products), i.e. g(d_{x_j}, d_{y^j}) = 1 and the dy-block
lambda_kl - 2 x_j Gamma^j_kl; all other components vanish.  When the
Ricci tensor of the plane connection is skew-symmetric, the metric is
Ricci-flat and, for a suitable orientation, self-dual of Petrov type III
wherever that Ricci tensor is nonzero; the vertical distribution is null
and parallel, the curvature kills vertical/orthogonal pairs, and the
projected connection recovers the input.  `certify` measures all of this
pointwise.

All curvature is symbolic (third derivatives of the potential enter the
Weyl operator); numbers appear only when sampling.  The two-form inner
product is normalized so that the self-dual Gram matrix is diag(-1, 1, 1);
Petrov-III detection uses the singular-value rank profile (2, 1, 0) of
(W, W^2, W^3) with thresholds relative to |W|, |W|^2, |W|^3.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from . import surface as sf
from .chart import chart4_over
from .errors import DegenerateMetricError, StructureViolationError, TorsionError
from .expr import ZERO, add, diff, div, mul, sub

PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def _epsilon4():
    eps = np.zeros((4, 4, 4, 4))
    from itertools import permutations

    for perm in permutations(range(4)):
        inversions = sum(1 for i in range(4) for j in range(i + 1, 4)
                         if perm[i] > perm[j])
        eps[perm] = -1.0 if inversions % 2 else 1.0
    return eps


_EPSILON4 = _epsilon4()


def _det_expr(m):
    n = len(m)
    if n == 1:
        return m[0][0]
    acc = ZERO
    for col in range(n):
        entry = m[0][col]
        if entry.is_zero:
            continue
        minor = [[m[r][c] for c in range(n) if c != col] for r in range(1, n)]
        term = mul(entry, _det_expr(minor))
        acc = add(acc, term) if col % 2 == 0 else sub(acc, term)
    return acc


def _inverse_expr(m):
    n = len(m)
    det = _det_expr(m)
    inv = [[None] * n for _ in range(n)]
    for a in range(n):
        for b in range(a, n):
            minor = [[m[r][c] for c in range(n) if c != a] for r in range(n) if r != b]
            cof = _det_expr(minor)
            if (a + b) % 2 == 1:
                cof = mul(ex.const(-1.0), cof)
            inv[a][b] = div(cof, det)
            inv[b][a] = inv[a][b]
    return inv, det


class Metric4:
    """Symmetric metric on a four-dimensional chart, stored through the
    ten component fields comp[(a, b)] with a <= b.  Curvature data is
    built symbolically once and cached."""

    def __init__(self, chart, comp):
        self.chart = chart
        self.comp = {k: ex.as_expr(v) for k, v in comp.items()}
        self._inverse = None
        self._det = None
        self._christoffel = None
        self._riemann = None
        self._ricci = None
        self._scalar = None
        self._curv_ev = None

    def g(self, a, b):
        return self.comp.get((min(a, b), max(a, b)), ZERO)

    def matrix(self):
        return [[self.g(a, b) for b in range(4)] for a in range(4)]

    # -- symbolic pipeline -------------------------------------------------
    def inverse(self):
        if self._inverse is None:
            self._inverse, self._det = _inverse_expr(self.matrix())
        return self._inverse

    def det(self):
        self.inverse()
        return self._det

    def christoffel(self):
        """Levi-Civita coefficients G[c][a][b] (the [a][b] entries for
        a > b are the same objects as [b][a])."""
        if self._christoffel is not None:
            return self._christoffel
        inv = self.inverse()
        gam = [[[None] * 4 for _ in range(4)] for _ in range(4)]
        dg = {}

        def d_comp(a, bc):
            key = (a, bc)
            if key not in dg:
                dg[key] = diff(self.g(*bc), a)
            return dg[key]

        for c in range(4):
            for a in range(4):
                for b in range(a, 4):
                    acc = ZERO
                    for d in range(4):
                        if inv[c][d].is_zero:
                            continue
                        bracket = sub(add(d_comp(a, (d, b)), d_comp(b, (d, a))),
                                      d_comp(d, (a, b)))
                        acc = add(acc, mul(inv[c][d], bracket))
                    gam[c][a][b] = mul(ex.const(0.5), acc)
                    gam[c][b][a] = gam[c][a][b]
        self._christoffel = gam
        return gam

    def riemann(self):
        """Components R[(l, j)][k][m] of R(d_l, d_j) d_k = R^m d_m for
        l < j, under the convention
        R(u, v) psi = nabla_v nabla_u psi - nabla_u nabla_v psi
        + nabla_[u,v] psi."""
        if self._riemann is not None:
            return self._riemann
        gam = self.christoffel()
        dgam = {}

        def d_gamma(j, c, a, b):
            key = (j, c, min(a, b), max(a, b))
            if key not in dgam:
                dgam[key] = diff(gam[c][a][b], j)
            return dgam[key]

        riem = {}
        for (l, j) in PAIRS:
            block = [[None] * 4 for _ in range(4)]
            for k in range(4):
                for m in range(4):
                    d_part = sub(d_gamma(j, m, l, k), d_gamma(l, m, j, k))
                    quad = ZERO
                    for s in range(4):
                        quad = add(quad, sub(mul(gam[m][j][s], gam[s][l][k]),
                                             mul(gam[m][l][s], gam[s][j][k])))
                    block[k][m] = add(d_part, quad)
            riem[(l, j)] = block
        self._riemann = riem
        return riem

    def riemann_component(self, l, j, k, m):
        if l == j:
            return ZERO
        if l < j:
            return self.riemann()[(l, j)][k][m]
        return mul(ex.const(-1.0), self.riemann()[(j, l)][k][m])

    def ricci(self):
        """ric[j][k] = trace of u -> R(d_j, u) d_k (same contraction as on
        the plane chart)."""
        if self._ricci is None:
            self._ricci = [[None] * 4 for _ in range(4)]
            for j in range(4):
                for k in range(4):
                    acc = ZERO
                    for m in range(4):
                        acc = add(acc, self.riemann_component(j, m, k, m))
                    self._ricci[j][k] = acc
        return self._ricci

    def scalar(self):
        if self._scalar is None:
            inv = self.inverse()
            ric = self.ricci()
            acc = ZERO
            for j in range(4):
                for k in range(4):
                    acc = add(acc, mul(inv[j][k], ric[j][k]))
            self._scalar = acc
        return self._scalar

    # -- pointwise evaluation ----------------------------------------------
    def curvature_evaluator(self):
        """Evaluator for (g comps, Riemann comps, Ricci comps, scalar)."""
        if self._curv_ev is None:
            fields = [self.g(a, b) for a, b in _SYM_INDEX]
            riem = self.riemann()
            for pair in PAIRS:
                for k in range(4):
                    for m in range(4):
                        fields.append(riem[pair][k][m])
            ric = self.ricci()
            for j in range(4):
                for k in range(4):
                    fields.append(ric[j][k])
            fields.append(self.scalar())
            self._curv_ev = ex.Evaluator(fields)
        return self._curv_ev

    def curvature_at(self, points):
        """Numeric curvature data at points: dict with gmat (n,4,4),
        riem (n,4,4,4,4) (last index raised), ric (n,4,4), scal (n,)."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        vals = self.curvature_evaluator().at_many(points)
        n = points.shape[0]
        pos = 0
        gmat = np.zeros((n, 4, 4))
        for a, b in _SYM_INDEX:
            gmat[:, a, b] = vals[pos]
            gmat[:, b, a] = vals[pos]
            pos += 1
        riem = np.zeros((n, 4, 4, 4, 4))
        for (l, j) in PAIRS:
            for k in range(4):
                for m in range(4):
                    riem[:, l, j, k, m] = vals[pos]
                    riem[:, j, l, k, m] = -vals[pos]
                    pos += 1
        ric = np.zeros((n, 4, 4))
        for j in range(4):
            for k in range(4):
                ric[:, j, k] = vals[pos]
                pos += 1
        scal = vals[pos]
        return {"points": points, "gmat": gmat, "riem": riem, "ric": ric, "scal": scal}

    def metric_at(self, point):
        gmat = np.zeros((4, 4))
        for a, b in _SYM_INDEX:
            v = ex.evaluate(self.g(a, b), point) if not self.g(a, b).is_zero else 0.0
            gmat[a, b] = v
            gmat[b, a] = v
        return gmat


_SYM_INDEX = [(a, b) for a in range(4) for b in range(a, 4)]


def riemann_extension(c, lam=None, fibre_box=((-1.0, 1.0), (-1.0, 1.0))):
    """The extension metric of a torsionfree plane connection `c` plus the
    pullback of a symmetric tensor lam (a 2x2 field matrix or None)."""
    if not sf.is_torsionfree(c):
        raise TorsionError("extension metrics require a torsionfree connection")
    chart = chart4_over(c.chart, fibre_box)
    if lam is None:
        lam_comp = {(0, 0): ZERO, (0, 1): ZERO, (1, 1): ZERO}
    else:
        lam_comp = {
            (0, 0): ex.as_expr(lam[0][0]),
            (0, 1): ex.as_expr(lam[0][1]),
            (1, 1): ex.as_expr(lam[1][1]),
        }
    x = (ex.var(2), ex.var(3))
    comp = {}
    for k in (0, 1):
        for l in (k, 1):
            pulled = sub(lam_comp[(k, l)],
                         mul(ex.const(2.0),
                             add(mul(x[0], c.g(0, k, l)), mul(x[1], c.g(1, k, l)))))
            comp[(k, l)] = pulled
    comp[(0, 2)] = ex.ONE
    comp[(1, 3)] = ex.ONE
    return Metric4(chart, comp)


def levi_civita(g):
    """Levi-Civita coefficient fields of the metric (G[c][a][b])."""
    return g.christoffel()


def metric_compatibility_residual(g, points):
    """Max |nabla g| at the points."""
    gam = g.christoffel()
    fields = []
    for a in range(4):
        for b, c in _SYM_INDEX:
            cov = diff(g.g(b, c), a)
            for d in range(4):
                cov = sub(cov, add(mul(gam[d][a][b], g.g(d, c)),
                                   mul(gam[d][a][c], g.g(b, d))))
            fields.append(cov)
    return sf.max_abs_at(fields, points)


def first_bianchi_residual(g, points):
    """Max |R(u,v)w + R(v,w)u + R(w,u)v| componentwise at the points."""
    fields = []
    for (l, j) in PAIRS:
        for k in range(j, 4):
            for m in range(4):
                cyc = add(add(g.riemann_component(l, j, k, m),
                              g.riemann_component(j, k, l, m)),
                          g.riemann_component(k, l, j, m))
                fields.append(cyc)
    return sf.max_abs_at(fields, points)


def curvature4(g):
    """Symbolic (Riemann, Ricci, scalar) of the metric."""
    return g.riemann(), g.ricci(), g.scalar()


# ---------------------------------------------------------------------------
# pointwise two-form algebra

def _check_invertible(gmat):
    det = np.linalg.det(gmat)
    if abs(det) < 1e-10:
        raise DegenerateMetricError(f"metric determinant {det:.3e} at sample point")
    return det


def hodge_star_matrix(gmat, orientation):
    """Star operator on two-forms as a 6x6 matrix over the basis PAIRS."""
    det = _check_invertible(gmat)
    ginv = np.linalg.inv(gmat)
    weight = orientation * np.sqrt(abs(det))
    # (*w)_ab = E_abcd ginv[c,cJ] ginv[d,dJ] for w = e^J
    tensor = weight * np.einsum("abcd,ce,df->abef", _EPSILON4, ginv, ginv)
    star = np.zeros((6, 6))
    for i, (a, b) in enumerate(PAIRS):
        for jj, (cc, dd) in enumerate(PAIRS):
            star[i, jj] = tensor[a, b, cc, dd]
    return star


def hodge_star(g, orientation, point):
    """Star operator of the metric at a point (orientation +-1 flips it)."""
    return hodge_star_matrix(g.metric_at(point), orientation)


def lambda2_gram(gmat):
    """Inner product of coordinate two-forms, normalized so that the
    self-dual Gram matrix of an extension metric is diag(-1, 1, 1)."""
    ginv = np.linalg.inv(gmat)
    gram = np.zeros((6, 6))
    for i, (a, b) in enumerate(PAIRS):
        for jj, (cc, dd) in enumerate(PAIRS):
            gram[i, jj] = -(ginv[a, cc] * ginv[b, dd] - ginv[a, dd] * ginv[b, cc])
    return gram


def weyl_tensor_lowered(gmat, riem, ric, scal):
    """W_abcd from the numeric curvature data (last Riemann index lowered
    first); totally trace-free."""
    r_low = np.einsum("abcm,md->abcd", riem, gmat)
    p = 0.5 * (ric - (scal / 6.0) * gmat)
    kn = (np.einsum("lk,jm->ljkm", gmat, p) + np.einsum("jm,lk->ljkm", gmat, p)
          - np.einsum("lm,jk->ljkm", gmat, p) - np.einsum("jk,lm->ljkm", gmat, p))
    return r_low - kn


def _weyl_operator6(gmat, w_low):
    ginv = np.linalg.inv(gmat)
    w_up = np.einsum("abef,ec,fd->abcd", w_low, ginv, ginv)
    m6 = np.zeros((6, 6))
    for i, (a, b) in enumerate(PAIRS):
        for jj, (cc, dd) in enumerate(PAIRS):
            m6[i, jj] = w_up[a, b, cc, dd]
    return m6


def _pseudo_orthonormal_basis(proj, gram):
    """Deterministic Gram-Schmidt returning three vectors with Gram
    diag(-1, 1, 1).  Candidates are the projected coordinate two-forms
    followed by their pairwise sums (needed when the projections of single
    coordinate forms are null, as for the flat extension metric); ties in
    pivot selection keep the earliest candidate."""
    candidates = [proj[:, k] for k in range(6)]
    candidates += [proj[:, k] + proj[:, l] for k in range(6) for l in range(k + 1, 6)]
    basis, signs = [], []
    used = set()
    while len(basis) < 3:
        best_vec, best_val, best_idx = None, 0.0, None
        for idx, cand in enumerate(candidates):
            if idx in used:
                continue
            r = cand.copy()
            for bvec, eps in zip(basis, signs):
                r -= eps * float(r @ gram @ bvec) * bvec
            val = float(r @ gram @ r)
            if abs(val) > abs(best_val):
                best_vec, best_val, best_idx = r, val, idx
        if best_vec is None or abs(best_val) < 1e-10:
            raise DegenerateMetricError(
                "could not build a pseudo-orthonormal basis of the dual plane")
        eps = 1.0 if best_val > 0 else -1.0
        vec = best_vec / np.sqrt(abs(best_val))
        lead = int(np.argmax(np.abs(vec)))
        if vec[lead] < 0:
            vec = -vec
        basis.append(vec)
        signs.append(eps)
        used.add(best_idx)
    neg = [i for i, e in enumerate(signs) if e < 0]
    pos = [i for i, e in enumerate(signs) if e > 0]
    if len(neg) != 1:
        raise DegenerateMetricError(
            f"unexpected dual-plane signature (signs {signs})")
    order = neg + pos
    return [basis[i] for i in order], [signs[i] for i in order]


@dataclass(frozen=True)
class WeylOperator:
    """Self-dual Weyl part at a point: 3x3 matrix in a basis of the
    self-dual plane with Gram diag(-1, 1, 1)."""

    matrix: np.ndarray
    gram: np.ndarray
    basis: np.ndarray  # rows are the basis vectors in two-form coordinates
    orientation: int
    selfadjoint_residual: float
    trace_residual: float
    asd_norm: float  # spectral norm of the anti-self-dual restriction


def _restrict(m6, gram, basis, signs):
    dim = len(basis)
    out = np.zeros((dim, dim))
    for jj in range(dim):
        image = m6 @ basis[jj]
        for i in range(dim):
            out[i, jj] = signs[i] * float(image @ gram @ basis[i])
    return out


def weyl_operator_from_data(gmat, riem, ric, scal, orientation):
    w_low = weyl_tensor_lowered(gmat, riem, ric, scal)
    m6 = _weyl_operator6(gmat, w_low)
    gram = lambda2_gram(gmat)
    star = hodge_star_matrix(gmat, orientation)
    eye = np.eye(6)
    plus_basis, plus_signs = _pseudo_orthonormal_basis((eye + star) / 2.0, gram)
    minus_basis, minus_signs = _pseudo_orthonormal_basis((eye - star) / 2.0, gram)
    w_plus = _restrict(m6, gram, plus_basis, plus_signs)
    w_minus = _restrict(m6, gram, minus_basis, minus_signs)
    d = np.diag(plus_signs)
    sa_res = float(np.max(np.abs(d @ w_plus - (d @ w_plus).T)))
    asd = float(np.linalg.svd(w_minus, compute_uv=False)[0]) if np.any(w_minus) else 0.0
    return WeylOperator(
        matrix=w_plus,
        gram=d,
        basis=np.vstack(plus_basis),
        orientation=orientation,
        selfadjoint_residual=sa_res,
        trace_residual=float(abs(np.trace(w_plus))),
        asd_norm=asd,
    )


def weyl_sd_operator(g, orientation, point):
    """Self-dual Weyl operator of the metric at one point."""
    data = g.curvature_at(np.asarray(point, dtype=np.float64)[None, :])
    return weyl_operator_from_data(data["gmat"][0], data["riem"][0],
                                   data["ric"][0], data["scal"][0], orientation)


def petrov_type(w, scale_tol, rel_tol=1e-7):
    """O if |W| <= scale_tol; III if the singular-value rank profile of
    (W, W^2, W^3) is (2, 1, 0) with thresholds relative to |W|^k; other
    otherwise.  For a self-adjoint operator on a Lorentzian 3-space the
    (2, 1, 0) profile is exactly a single nilpotent Jordan block of size
    three."""
    m = w.matrix if isinstance(w, WeylOperator) else np.asarray(w, dtype=np.float64)
    sv1 = np.linalg.svd(m, compute_uv=False)
    norm = float(sv1[0])
    if norm <= scale_tol:
        return "O"
    sv2 = np.linalg.svd(m @ m, compute_uv=False)
    sv3 = np.linalg.svd(m @ m @ m, compute_uv=False)
    rank_ok = (sv1[1] > rel_tol * norm and sv1[2] <= rel_tol * norm)
    rank2_ok = (sv2[0] > rel_tol * norm ** 2 and sv2[1] <= rel_tol * norm ** 2)
    rank3_ok = sv3[0] <= rel_tol * norm ** 3
    return "III" if (rank_ok and rank2_ok and rank3_ok) else "other"


# ---------------------------------------------------------------------------
# Walker structure checks

def _null_parallel_fields(g):
    fields = [g.g(2, 2), g.g(2, 3), g.g(3, 3)]
    gam = g.christoffel()
    for c in (0, 1):
        for a in range(4):
            for b in (2, 3):
                fields.append(gam[c][a][b])
    return fields


def check_null_parallel(g, points=None):
    """Max violation of nullity (fibre-fibre metric components) and
    parallelism (non-vertical Christoffel components on vertical legs) of
    the vertical distribution."""
    if points is None:
        points = g.chart.sample()
    return sf.max_abs_at(_null_parallel_fields(g), points)


def _vertical_perp(gmat):
    """Orthonormal basis (columns) of the g-orthogonal complement of the
    vertical plane, computed from the metric rows of the vertical frame."""
    rows = gmat[2:4, :]
    _, sv, vt = np.linalg.svd(rows)
    if sv[1] <= 1e-10 * max(1.0, sv[0]):
        raise DegenerateMetricError("vertical metric rows are degenerate")
    return vt[2:].T  # nullspace basis


def _rvu_pointwise(data):
    out = np.zeros(len(data["points"]))
    for idx in range(len(out)):
        perp = _vertical_perp(data["gmat"][idx])
        riem = data["riem"][idx]
        worst = 0.0
        for l in (2, 3):
            for col in range(perp.shape[1]):
                u = perp[:, col]
                vals = np.einsum("akm,k->am", riem[l], u)
                worst = max(worst, float(np.max(np.abs(vals))))
        out[idx] = worst
    return out


def check_rvu(g, points=None):
    """Max |R(v, .) u| over vertical v and u in the computed orthogonal
    complement of the vertical plane."""
    if points is None:
        points = g.chart.sample()
    return float(np.max(_rvu_pointwise(g.curvature_at(points))))


def vertical_perp_residual(g, points=None):
    """Distance of the computed orthogonal complement from the vertical
    plane itself (they coincide for extension metrics)."""
    if points is None:
        points = g.chart.sample()
    ev = ex.Evaluator([g.g(a, b) for a, b in _SYM_INDEX])
    vals = ev.at_many(points)
    worst = 0.0
    for idx in range(len(points)):
        gmat = np.zeros((4, 4))
        for pos, (a, b) in enumerate(_SYM_INDEX):
            gmat[a, b] = gmat[b, a] = vals[pos][idx]
        perp = _vertical_perp(gmat)
        worst = max(worst, float(np.max(np.abs(perp[0:2, :]))))
    return worst


# ---------------------------------------------------------------------------
# the projected connection

def _recovered_gamma_fields(g):
    """Symbolic fields of the projected plane connection, still living on
    the four-dimensional chart, plus the horizontal-defect fields."""
    gam = g.christoffel()
    bmat = [[g.g(2 + i, k) for k in (0, 1)] for i in (0, 1)]
    det = sub(mul(bmat[0][0], bmat[1][1]), mul(bmat[0][1], bmat[1][0]))
    binv = [[div(bmat[1][1], det), mul(ex.const(-1.0), div(bmat[0][1], det))],
            [mul(ex.const(-1.0), div(bmat[1][0], det)), div(bmat[0][0], det)]]
    recovered = {}
    defects = []
    for k in (0, 1):
        # vertical lift of dy^k: components v_i solve sum_i v_i B_ik = delta,
        # i.e. v_i = (B^-1)_ki
        lift = [binv[k][i] for i in (0, 1)]
        for j in (0, 1):
            cov = [ZERO] * 4
            for i in (0, 1):
                for cc in range(4):
                    cov[cc] = add(cov[cc], mul(lift[i], gam[cc][j][2 + i]))
                cov[2 + i] = add(cov[2 + i], diff(lift[i], j))
            defects.extend(cov[0:2])
            for l in (0, 1):
                xi_l = add(mul(cov[2], g.g(2, l)), mul(cov[3], g.g(3, l)))
                # (nabla_j dy^k)_l = -Gamma^k_jl
                recovered[(k, j, l)] = mul(ex.const(-1.0), xi_l)
    return recovered, defects


def project_connection(g, chart2=None, points=None, tol=1e-8):
    """Recover the plane connection from the metric through the vertical
    correspondence; requires the null-parallel structure (checked)."""
    if points is None:
        points = g.chart.sample()
    if chart2 is None:
        chart2 = g.chart.base
    structure = max(check_null_parallel(g, points), check_rvu(g, points))
    if structure > tol:
        raise StructureViolationError(
            f"metric lacks the null-parallel vertical structure "
            f"(residual {structure:.3e})")
    recovered, defects = _recovered_gamma_fields(g)
    defect = sf.max_abs_at(defects, points)
    if defect > tol:
        raise StructureViolationError(
            f"covariant derivative of a vertical lift is not vertical "
            f"(residual {defect:.3e})")
    # fibre-independence: compare against the x = 0 slice at the samples
    sliced = {key: ex.substitute(f, {2: 0.0, 3: 0.0}) for key, f in recovered.items()}
    pairs = list(recovered.keys())
    diff_fields = [sub(recovered[k], sliced[k]) for k in pairs]
    xdep = sf.max_abs_at(diff_fields, points)
    if xdep > tol:
        raise StructureViolationError(
            f"projected coefficients depend on the fibre (residual {xdep:.3e})")
    # recovered keys are already (upper, lower, lower): Gamma^k_jl
    return sf.make_connection(chart2, sliced)


# ---------------------------------------------------------------------------
# certification

@dataclass(frozen=True)
class CertRecord:
    point: tuple
    ricci_residual: float
    asd_residual: dict
    petrov_type: str
    base_ricci: float
    walker_residual: float
    rvu_residual: float
    projection_residual: float


@dataclass(frozen=True)
class CertReport:
    orientation: int
    records: tuple
    summary: dict

    def to_json_dict(self):
        return {
            "schema": "skewric/1",
            "orientation": self.orientation,
            "summary": self.summary,
            "points": [
                {
                    "point": list(r.point),
                    "ricci_residual": r.ricci_residual,
                    "asd_residual": r.asd_residual,
                    "petrov_type": r.petrov_type,
                    "base_ricci": r.base_ricci,
                    "walker_residual": r.walker_residual,
                    "rvu_residual": r.rvu_residual,
                    "projection_residual": r.projection_residual,
                }
                for r in self.records
            ],
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_json_dict(), indent=indent, sort_keys=True)

    def write_csv(self, path):
        header = ("y1,y2,x1,x2,ricci_residual,asd_plus,asd_minus,petrov_type,"
                  "base_ricci,walker_residual,rvu_residual,projection_residual")
        lines = [header]
        for r in self.records:
            vals = [*r.point, r.ricci_residual, r.asd_residual["+1"],
                    r.asd_residual["-1"]]
            lines.append(",".join(f"{v:.17g}" for v in vals)
                         + f",{r.petrov_type}," + ",".join(
                f"{v:.17g}" for v in (r.base_ricci, r.walker_residual,
                                      r.rvu_residual, r.projection_residual)))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def certify(c, lam=None, fibre_box=((-1.0, 1.0), (-1.0, 1.0)), points=None,
            n_points=50, seed=24389, petrov_scale_tol=1e-7,
            base_ricci_eps=1e-8, skew_tol=1e-9):
    """Full pointwise certification of the extension metric of a
    torsionfree connection with skew-symmetric Ricci tensor.

    The orientation is chosen by trying both and keeping the one with the
    smaller maximal anti-self-dual residual.  Points where the plane Ricci
    two-form vanishes are classified honestly (type O there) rather than
    excluded.
    """
    skew = sf.is_ricci_skew(c, tol=skew_tol)
    if not skew.ok:
        raise StructureViolationError(
            f"plane connection must have skew-symmetric Ricci tensor "
            f"(residual {skew.residual:.3e})")
    g = riemann_extension(c, lam, fibre_box)
    if points is None:
        points = g.chart.sample(n=n_points, seed=seed)
    data = g.curvature_at(points)
    base_ric = ex.evaluate_many(sf.ricci(c)[0][1], points)

    walker_vals = ex.Evaluator(_null_parallel_fields(g)).at_many(points)
    recovered, _ = _recovered_gamma_fields(g)
    proj_fields = []
    for (k, j, l) in sorted(recovered.keys()):
        proj_fields.append(sub(recovered[(k, j, l)], c.g(k, j, l)))
    proj_vals = ex.Evaluator(proj_fields).at_many(points)

    n = len(points)
    ops = {+1: [], -1: []}
    for idx in range(n):
        for orientation in (+1, -1):
            ops[orientation].append(weyl_operator_from_data(
                data["gmat"][idx], data["riem"][idx], data["ric"][idx],
                data["scal"][idx], orientation))
    asd_max = {o: max(op.asd_norm for op in ops[o]) for o in (+1, -1)}
    chosen = +1 if asd_max[+1] <= asd_max[-1] else -1

    records = []
    rvu_vals = _rvu_pointwise(data)
    for idx in range(n):
        w = ops[chosen][idx]
        records.append(CertRecord(
            point=tuple(float(v) for v in points[idx]),
            ricci_residual=float(np.max(np.abs(data["ric"][idx]))),
            asd_residual={"+1": ops[+1][idx].asd_norm, "-1": ops[-1][idx].asd_norm},
            petrov_type=petrov_type(w, petrov_scale_tol),
            base_ricci=float(base_ric[idx]),
            walker_residual=float(np.max(np.abs(walker_vals[:, idx]))),
            rvu_residual=float(rvu_vals[idx]),
            projection_residual=float(np.max(np.abs(proj_vals[:, idx]))),
        ))
    type_counts = {}
    for r in records:
        type_counts[r.petrov_type] = type_counts.get(r.petrov_type, 0) + 1
    expected_iii = [r for r in records if abs(r.base_ricci) > base_ricci_eps]
    summary = {
        "n_points": n,
        "max_ricci_residual": max(r.ricci_residual for r in records),
        "max_asd_residual": asd_max[chosen],
        "max_walker_residual": max(r.walker_residual for r in records),
        "max_rvu_residual": max(r.rvu_residual for r in records),
        "max_projection_residual": max(r.projection_residual for r in records),
        "petrov_types": type_counts,
        "all_nondegenerate_type_iii": all(r.petrov_type == "III" for r in expected_iii),
    }
    return CertReport(orientation=chosen, records=tuple(records), summary=summary)
