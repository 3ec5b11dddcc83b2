"""Two-dimensional Lie algebras, traceless 2x2 matrices, left-invariant
connections, and the two builtin example connections.

Matrices are plain (2, 2) numpy arrays.  A two-dimensional Lie algebra is
stored through the structure constants of [e1, e2] = c1 e1 + c2 e2 (the
Jacobi identity is automatic in dimension two).  A left-invariant
connection is a pair (Psi, f): a linear map into traceless matrices plus a
linear functional, acting by nabla_u v = (Psi u) v + f(u) v.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from . import surface as sf
from .errors import InconsistentInputError, NotAHomomorphismError, NotASubalgebraError
from .surface import CheckReport

# basis of the traceless 2x2 matrices in which the Killing form is
# diag(-1, 1, 1) and the volume form takes the value 1
SL2_BASIS = (
    np.array([[0.0, 1.0], [-1.0, 0.0]]),
    np.array([[0.0, 1.0], [1.0, 0.0]]),
    np.array([[1.0, 0.0], [0.0, -1.0]]),
)


def comm(a, b):
    return a @ b - b @ a


def killing(a, b):
    """Invariant pairing <a, b> = tr(ab)/2; <a, a> = -det(a) for traceless a."""
    return float(np.trace(a @ b)) / 2.0


def mu(a, b, c):
    """Volume form with 2 mu(a, b, c) = <[a, b], c>; fully skew on
    traceless triples and equal to 1 on SL2_BASIS."""
    return killing(comm(a, b), c) / 2.0


@dataclass(frozen=True)
class LieAlgebra2:
    """[e1, e2] = c1 e1 + c2 e2."""

    c1: float
    c2: float

    def bracket(self, u, v):
        scale = u[0] * v[1] - u[1] * v[0]
        return np.array([scale * self.c1, scale * self.c2])

    @property
    def is_abelian(self):
        return self.c1 == 0.0 and self.c2 == 0.0


def abelian_algebra():
    return LieAlgebra2(0.0, 0.0)


def nonabelian_algebra():
    """The normal form [e1, e2] = e1."""
    return LieAlgebra2(1.0, 0.0)


@dataclass(frozen=True)
class LeftInvConn:
    """Left-invariant connection datum (Psi, f) on a 2D Lie algebra."""

    algebra: LieAlgebra2
    psi1: np.ndarray  # image of e1
    psi2: np.ndarray  # image of e2
    f: np.ndarray

    def __post_init__(self):
        for m in (self.psi1, self.psi2):
            if abs(np.trace(m)) > 1e-12:
                raise InconsistentInputError("Psi images must be traceless")

    def psi(self, u):
        return u[0] * self.psi1 + u[1] * self.psi2


def leftinv_from_dict(data):
    c1, c2 = data["algebra"]
    p1, p2 = data["psi"]
    return LeftInvConn(
        algebra=LieAlgebra2(float(c1), float(c2)),
        psi1=np.asarray(p1, dtype=np.float64).reshape(2, 2),
        psi2=np.asarray(p2, dtype=np.float64).reshape(2, 2),
        f=np.asarray(data["f"], dtype=np.float64),
    )


def leftinv_to_dict(c):
    return {
        "algebra": [c.algebra.c1, c.algebra.c2],
        "psi": [c.psi1.ravel().tolist(), c.psi2.ravel().tolist()],
        "f": c.f.tolist(),
    }


# ---------------------------------------------------------------------------
# subalgebras of the traceless matrices

def subalgebra_from_line(direction):
    """Basis (A, B) of the stabilizer subalgebra of the line spanned by
    `direction`: all traceless matrices leaving the line invariant."""
    d = np.asarray(direction, dtype=np.float64)
    if np.linalg.norm(d) == 0.0:
        raise ValueError("direction must be nonzero")
    u = np.array([1.0, 0.0]) if abs(d[0]) <= abs(d[1]) else np.array([0.0, 1.0])
    s = np.column_stack([u, d])
    s_inv = np.linalg.inv(s)
    a = s @ np.array([[0.0, 0.0], [1.0, 0.0]]) @ s_inv
    b = s @ np.diag([0.5, -0.5]) @ s_inv
    return a, b


@dataclass(frozen=True)
class SubalgebraNormalForm:
    """Basis with [a, b] = a, the null generator a spanning the commutant,
    and a plane basis (w, wp) realizing a w = wp, a wp = 0, b w = w/2."""

    a: np.ndarray
    b: np.ndarray
    w: np.ndarray
    wp: np.ndarray


def classify_subalgebra(a0, b0, tol=1e-9):
    a0 = np.asarray(a0, dtype=np.float64)
    b0 = np.asarray(b0, dtype=np.float64)
    for m in (a0, b0):
        if abs(np.trace(m)) > tol:
            raise NotASubalgebraError("inputs must be traceless")
    stack = np.vstack([a0.ravel(), b0.ravel()])
    sv = np.linalg.svd(stack, compute_uv=False)
    if sv[1] <= 1e-12 * max(1.0, sv[0]):
        raise NotASubalgebraError("inputs are linearly dependent")
    k = comm(a0, b0)
    coeffs = np.linalg.lstsq(stack.T, k.ravel(), rcond=None)[0]
    closure_res = float(np.linalg.norm(stack.T @ coeffs - k.ravel()))
    if closure_res > tol * max(1.0, float(np.linalg.norm(k))):
        raise NotASubalgebraError(
            f"span is not closed under the bracket (residual {closure_res:.3e})")
    k_norm = float(np.linalg.norm(k))
    if k_norm <= tol:
        raise InconsistentInputError(
            "span is Abelian; two-dimensional subalgebras of the traceless "
            "matrices are never Abelian")
    a = k / k_norm

    def bracket_coeff(x):
        # [a, x] = l(x) a since the commutant is spanned by a
        return float(np.sum(comm(a, x) * a)) / float(np.sum(a * a))

    la0, lb0 = bracket_coeff(a0), bracket_coeff(b0)
    x, lx = (a0, la0) if abs(la0) > abs(lb0) else (b0, lb0)
    if abs(lx) <= tol:
        raise NotASubalgebraError("could not normalize the bracket relation")
    b = x / lx
    if np.max(np.abs(comm(a, b) - a)) > 10 * tol:
        raise NotASubalgebraError("normalization failed the bracket check")
    # b is diagonalizable with eigenvalues +-1/2; w spans the +1/2 space
    evals, evecs = np.linalg.eig(b)
    order = np.argsort(-evals.real)
    w = evecs[:, order[0]].real
    lead = np.argmax(np.abs(w))
    if w[lead] < 0:
        w = -w
    wp = a @ w
    if np.linalg.norm(wp) < 1e-12:
        raise NotASubalgebraError("degenerate eigenbasis")
    return SubalgebraNormalForm(a=a, b=b, w=w, wp=wp)


def normal_form_matrices(w, wp):
    """Matrices (a, b) defined by a w = wp, a wp = 0, b w = w/2,
    b wp = -wp/2, for an arbitrary plane basis (w, wp)."""
    s = np.column_stack([w, wp])
    s_inv = np.linalg.inv(s)
    a = s @ np.array([[0.0, 0.0], [1.0, 0.0]]) @ s_inv
    b = s @ np.diag([0.5, -0.5]) @ s_inv
    return a, b


# ---------------------------------------------------------------------------
# left-invariant connection calculus

def leftinv_curvature(c, u, v):
    """R(u, v) = f([u, v]) Id + Psi[u, v] - [Psi u, Psi v]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    br = c.algebra.bracket(u, v)
    return (float(c.f @ br) * np.eye(2) + c.psi(br) - comm(c.psi(u), c.psi(v)))


def is_homomorphism(c, tol=1e-10):
    """Psi[e1, e2] = [Psi e1, Psi e2]; equivalent to projective flatness of
    the left-invariant connection."""
    lhs = c.algebra.c1 * c.psi1 + c.algebra.c2 * c.psi2
    rhs = comm(c.psi1, c.psi2)
    res = float(np.max(np.abs(lhs - rhs)))
    return CheckReport(ok=res <= tol, residual=res)


def leftinv_ricci(c, tol=1e-10):
    """rho(e1, e2) = f([e1, e2]) = c1 f1 + c2 f2."""
    report = is_homomorphism(c, tol)
    if not report.ok:
        raise NotAHomomorphismError(
            f"Psi is not a Lie-algebra homomorphism (residual {report.residual:.3e})")
    return float(c.algebra.c1 * c.f[0] + c.algebra.c2 * c.f[1])


def rank_class(c, tol=1e-10):
    """Rank of u -> Psi u in {0, 1, 2}; rank 2 on an Abelian algebra is
    reported as inconsistent input."""
    report = is_homomorphism(c, tol)
    if not report.ok:
        raise NotAHomomorphismError(
            f"Psi is not a Lie-algebra homomorphism (residual {report.residual:.3e})")
    stack = np.vstack([c.psi1.ravel(), c.psi2.ravel()])
    norm = np.linalg.norm(stack)
    if norm == 0.0:
        return 0
    sv = np.linalg.svd(stack / norm, compute_uv=False)
    rank = int(np.sum(sv > 1e-9))
    if rank == 2 and c.algebra.is_abelian:
        raise InconsistentInputError(
            "rank-2 image requires a non-Abelian algebra")
    return rank


def rank1_connection(algebra, q, b, f=(0.0, 0.0)):
    """The family Psi u = q(u) B."""
    q = np.asarray(q, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return LeftInvConn(algebra=algebra, psi1=q[0] * b, psi2=q[1] * b,
                       f=np.asarray(f, dtype=np.float64))


def rank2_normal_connection(f=(0.0, 0.0), w=(1.0, 0.0), wp=(0.0, 1.0)):
    """Rank-2 case on [e1, e2] = e1: Psi e1 = A, Psi e2 = B in the normal
    form determined by the basis (w, wp)."""
    a, b = normal_form_matrices(np.asarray(w, float), np.asarray(wp, float))
    return LeftInvConn(algebra=nonabelian_algebra(), psi1=a, psi2=b,
                       f=np.asarray(f, dtype=np.float64))


# ---------------------------------------------------------------------------
# builtin example connections on plane charts

def halfplane_connection(chart):
    """The left-invariant connection nabla = D - xi (x) Id on a half-plane,
    with D the standard flat connection and xi = y1 dy2 - y2 dy1.  Its
    Ricci tensor is 2 dy1^dy2 and its torsion form is -xi."""
    return sf.make_connection(chart, {
        (0, 0, 0): "y2",
        (1, 0, 1): "y2",
        (0, 1, 0): "-y1",
        (1, 1, 1): "-y1",
    })


def halfplane_xi():
    return sf.OneForm2(ex.parse("-y2"), ex.parse("y1"))


def cnc_connection(chart):
    """The builtin flat connection with torsion defined on the frame
    u = d_1, v = d_1 - exp(-2 y1) d_2 (so [u, v] = 2(u - v)) by

        nabla_u u = u,      nabla_u v = -v,
        nabla_v u = u + v,  nabla_v v = exp(-4 y1) u - v,

    translated into coordinate coefficients through the frame.  The closed
    form xi with xi(u) = xi(v) = 4 is 4 dy1, with potential 4 y1.

    Returns (connection, u, v).
    """
    u = (ex.ONE, ex.ZERO)
    v = (ex.ONE, ex.parse("-exp(-2*y1)"))
    table = (
        ((ex.ONE, ex.ZERO), (ex.ZERO, ex.const(-1.0))),
        ((ex.ONE, ex.ONE), (ex.parse("exp(-4*y1)"), ex.const(-1.0))),
    )
    conn = sf.connection_from_frame_table(chart, (u, v), table)
    return conn, u, v


def cnc_xi():
    return sf.OneForm2(ex.const(4.0), ex.ZERO)
