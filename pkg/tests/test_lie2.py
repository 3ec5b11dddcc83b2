"""Tests for the two-dimensional Lie-algebra module."""

import numpy as np
import pytest

from skewric import expr as ex
from skewric import lie2
from skewric import surface as sf
from skewric.chart import Chart2
from skewric.errors import (
    InconsistentInputError,
    NotAHomomorphismError,
    NotASubalgebraError,
)

A0, B0, C0 = lie2.SL2_BASIS


def _random_traceless(rng):
    m = rng.uniform(-2, 2, size=(2, 2))
    m[1, 1] = -m[0, 0]
    return m


# ---------------------------------------------------------------------------
# invariant pairing and volume form

def test_killing_displayed_basis():
    assert lie2.killing(A0, A0) == -1.0
    assert lie2.killing(C0, C0) == 1.0
    assert lie2.killing(B0, B0) == 1.0


def test_killing_gram_is_exact_diagonal():
    gram = np.array([[lie2.killing(x, y) for y in lie2.SL2_BASIS]
                     for x in lie2.SL2_BASIS])
    assert np.array_equal(gram, np.diag([-1.0, 1.0, 1.0]))
    assert sorted(np.linalg.eigvalsh(gram)) == [-1.0, 1.0, 1.0]


def test_killing_equals_minus_det():
    rng = np.random.default_rng(24389)
    for _ in range(100):
        a = _random_traceless(rng)
        assert abs(lie2.killing(a, a) + np.linalg.det(a)) <= 1e-12


def test_mu_displayed_basis_is_one():
    assert lie2.mu(A0, B0, C0) == 1.0


def test_mu_vanishes_on_repeats():
    assert lie2.mu(A0, A0, C0) == 0.0
    assert lie2.mu(A0, B0, B0) == 0.0


def test_mu_skew_symmetry():
    rng = np.random.default_rng(12)
    for _ in range(50):
        a, b, c = (_random_traceless(rng) for _ in range(3))
        assert abs(lie2.mu(b, a, c) + lie2.mu(a, b, c)) <= 1e-10
        assert abs(lie2.mu(a, c, b) + lie2.mu(a, b, c)) <= 1e-10


def test_bracket_pairs_with_volume_form():
    rng = np.random.default_rng(13)
    for _ in range(50):
        a, b, c = (_random_traceless(rng) for _ in range(3))
        assert abs(lie2.killing(lie2.comm(a, b), c) - 2 * lie2.mu(a, b, c)) <= 1e-10
        # bracket is orthogonal to both arguments
        assert abs(lie2.killing(lie2.comm(a, b), a)) <= 1e-10
        assert abs(lie2.killing(lie2.comm(a, b), b)) <= 1e-10


# ---------------------------------------------------------------------------
# subalgebras

def test_subalgebra_from_vertical_line():
    a, b = lie2.subalgebra_from_line([0.0, 1.0])
    assert np.array_equal(a, np.array([[0.0, 0.0], [1.0, 0.0]]))
    assert np.array_equal(b, np.diag([0.5, -0.5]))


def test_subalgebra_from_horizontal_line_transposed():
    a, b = lie2.subalgebra_from_line([1.0, 0.0])
    assert np.array_equal(a, np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert np.array_equal(b, np.diag([-0.5, 0.5]))


def test_subalgebra_spans_two_dimensions_and_stabilizes():
    rng = np.random.default_rng(3)
    for _ in range(25):
        d = rng.normal(size=2)
        if np.linalg.norm(d) < 0.1:
            continue
        a, b = lie2.subalgebra_from_line(d)
        stack = np.vstack([a.ravel(), b.ravel()])
        assert np.linalg.matrix_rank(stack, tol=1e-10) == 2
        for m in (a, b):
            img = m @ d
            # image stays on the line
            assert abs(img[0] * d[1] - img[1] * d[0]) <= 1e-10
        # the commutant kills the line
        assert np.max(np.abs(lie2.comm(a, b) @ d)) <= 1e-10


def test_classify_normal_case_exact():
    nf = lie2.classify_subalgebra(np.array([[0.0, 0.0], [1.0, 0.0]]),
                                  np.diag([0.5, -0.5]))
    assert np.array_equal(lie2.comm(nf.a, nf.b), nf.a)
    assert np.array_equal(nf.w, np.array([1.0, 0.0]))
    assert np.array_equal(nf.wp, np.array([0.0, 1.0]))


def test_classify_random_conjugations():
    rng = np.random.default_rng(24389)
    base_a = np.array([[0.0, 0.0], [1.0, 0.0]])
    base_b = np.diag([0.5, -0.5])
    for _ in range(100):
        p = rng.normal(size=(2, 2))
        if abs(np.linalg.det(p)) < 0.2:
            continue
        pinv = np.linalg.inv(p)
        # an arbitrary basis of the conjugated span
        m = rng.normal(size=(2, 2))
        while abs(np.linalg.det(m)) < 0.2:
            m = rng.normal(size=(2, 2))
        a_in = p @ (m[0, 0] * base_a + m[0, 1] * base_b) @ pinv
        b_in = p @ (m[1, 0] * base_a + m[1, 1] * base_b) @ pinv
        nf = lie2.classify_subalgebra(a_in, b_in)
        assert np.max(np.abs(lie2.comm(nf.a, nf.b) - nf.a)) <= 1e-9
        assert abs(lie2.killing(nf.a, nf.a)) <= 1e-9
        assert np.max(np.abs(nf.a @ nf.w - nf.wp)) <= 1e-9
        assert np.max(np.abs(nf.a @ nf.wp)) <= 1e-9
        assert np.max(np.abs(nf.b @ nf.w - nf.w / 2)) <= 1e-9
        assert np.max(np.abs(nf.b @ nf.wp + nf.wp / 2)) <= 1e-9


def test_classify_rejects_dependent_input():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(NotASubalgebraError):
        lie2.classify_subalgebra(a, a)


def test_classify_rejects_non_subalgebra():
    with pytest.raises(NotASubalgebraError):
        lie2.classify_subalgebra(A0, C0)


def test_normal_form_matrices_converse_exact():
    rng = np.random.default_rng(77)
    for _ in range(50):
        w = rng.normal(size=2)
        wp = rng.normal(size=2)
        if abs(np.linalg.det(np.column_stack([w, wp]))) < 0.2:
            continue
        a, b = lie2.normal_form_matrices(w, wp)
        assert np.max(np.abs(lie2.comm(a, b) - a)) <= 1e-10
        assert abs(np.trace(a)) <= 1e-12 and abs(np.trace(b)) <= 1e-12


# ---------------------------------------------------------------------------
# left-invariant connections

def test_leftinv_requires_traceless():
    with pytest.raises(InconsistentInputError):
        lie2.LeftInvConn(lie2.abelian_algebra(), np.eye(2), np.zeros((2, 2)),
                         np.zeros(2))


def test_curvature_zero_data():
    conn = lie2.LeftInvConn(lie2.nonabelian_algebra(), np.zeros((2, 2)),
                            np.zeros((2, 2)), np.zeros(2))
    assert np.array_equal(lie2.leftinv_curvature(conn, [1, 0], [0, 1]),
                          np.zeros((2, 2)))


def test_curvature_abelian_commuting_images():
    b = np.array([[0.0, 1.0], [0.0, 0.0]])
    conn = lie2.rank1_connection(lie2.abelian_algebra(), [1.0, 2.0], b,
                                 f=[0.3, -0.7])
    assert np.max(np.abs(lie2.leftinv_curvature(conn, [1, 0], [0, 1]))) == 0.0


def test_curvature_rank2_normal_form_flat_with_zero_f():
    conn = lie2.rank2_normal_connection()
    r = lie2.leftinv_curvature(conn, [1.0, 0.0], [0.0, 1.0])
    assert np.max(np.abs(r)) <= 1e-14


def test_homomorphism_rank2_normal_form():
    assert lie2.is_homomorphism(lie2.rank2_normal_connection()).ok


def test_homomorphism_rank1_kernel_condition():
    b = np.array([[1.0, 2.0], [0.5, -1.0]])
    # q kills the commutant of [e1, e2] = e1, i.e. q(e1) = 0
    good = lie2.rank1_connection(lie2.nonabelian_algebra(), [0.0, 3.0], b)
    assert lie2.is_homomorphism(good).ok
    bad = lie2.rank1_connection(lie2.nonabelian_algebra(), [1.0, 0.0], b)
    assert not lie2.is_homomorphism(bad).ok


def test_rank1_criterion_random():
    rng = np.random.default_rng(24389)
    for _ in range(100):
        algebra = lie2.nonabelian_algebra() if rng.random() < 0.7 else lie2.abelian_algebra()
        q = rng.uniform(-2, 2, size=2)
        b = _random_traceless(rng)
        if np.max(np.abs(b)) < 0.1 or np.max(np.abs(q)) < 0.1:
            continue
        conn = lie2.rank1_connection(algebra, q, b)
        commutant_in_kernel = abs(algebra.c1 * q[0] + algebra.c2 * q[1]) <= 1e-10
        assert lie2.is_homomorphism(conn).ok == commutant_in_kernel


def test_ricci_abelian_vanishes():
    conn = lie2.rank1_connection(lie2.abelian_algebra(), [1.0, 0.0],
                                 np.array([[0.0, 1.0], [0.0, 0.0]]),
                                 f=[2.0, 5.0])
    assert lie2.leftinv_ricci(conn) == 0.0


def test_ricci_nonabelian_functional():
    conn = lie2.LeftInvConn(lie2.nonabelian_algebra(), np.zeros((2, 2)),
                            np.zeros((2, 2)), np.array([3.0, 0.0]))
    assert lie2.leftinv_ricci(conn) == 3.0


def test_ricci_zero_f_flat_normal_form():
    conn = lie2.rank2_normal_connection(f=(0.0, 0.0))
    assert lie2.leftinv_ricci(conn) == 0.0
    assert np.max(np.abs(lie2.leftinv_curvature(conn, [1, 0], [0, 1]))) <= 1e-14


def test_ricci_requires_homomorphism():
    bad = lie2.rank1_connection(lie2.nonabelian_algebra(), [1.0, 0.0],
                                np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(NotAHomomorphismError):
        lie2.leftinv_ricci(bad)


def test_rank_class_values():
    zero = lie2.LeftInvConn(lie2.nonabelian_algebra(), np.zeros((2, 2)),
                            np.zeros((2, 2)), np.zeros(2))
    assert lie2.rank_class(zero) == 0
    one = lie2.rank1_connection(lie2.nonabelian_algebra(), [0.0, 1.0],
                                np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert lie2.rank_class(one) == 1
    assert lie2.rank_class(lie2.rank2_normal_connection()) == 2


def test_rank2_on_abelian_is_inconsistent():
    # only reachable with a loosened homomorphism tolerance: the defensive
    # cross-check still refuses the rank-2/Abelian combination
    conn = lie2.LeftInvConn(lie2.abelian_algebra(), A0, C0, np.zeros(2))
    with pytest.raises(InconsistentInputError):
        lie2.rank_class(conn, tol=100.0)


# ---------------------------------------------------------------------------
# builtin connections

CHART = Chart2(box=((-1.0, 1.0), (-1.0, 1.0)))


def test_halfplane_coefficients():
    c = lie2.halfplane_connection(CHART)
    assert ex.symbolically_equal(c.g(0, 0, 0), ex.parse("y2"))
    assert ex.symbolically_equal(c.g(1, 0, 1), ex.parse("y2"))
    assert ex.symbolically_equal(c.g(0, 1, 0), ex.parse("-y1"))
    assert ex.symbolically_equal(c.g(1, 1, 1), ex.parse("-y1"))
    zero_slots = [(0, 0, 1), (0, 1, 1), (1, 0, 0), (1, 1, 0)]
    for slot in zero_slots:
        assert c.g(*slot).is_zero


def test_halfplane_ricci_and_torsion():
    c = lie2.halfplane_connection(CHART)
    ric = sf.ricci(c)
    assert ex.normal_form(ric[0][1]) is ex.const(2.0)
    theta = sf.torsion_form(c)
    xi = lie2.halfplane_xi()
    assert ex.symbolically_equal(theta.c1, ex.mul(ex.const(-1.0), xi.c1))
    assert ex.symbolically_equal(theta.c2, ex.mul(ex.const(-1.0), xi.c2))


def test_cnc_bracket_identity():
    _, u, v = lie2.cnc_connection(CHART)
    for l in (0, 1):
        bracket = ex.ZERO
        for m in (0, 1):
            bracket = ex.add(bracket, ex.sub(ex.mul(u[m], ex.diff(v[l], m)),
                                             ex.mul(v[m], ex.diff(u[l], m))))
        target = ex.mul(ex.const(2.0), ex.sub(u[l], v[l]))
        assert ex.symbolically_equal(bracket, target)


def test_cnc_xi_pairs_to_four():
    conn, u, v = lie2.cnc_connection(CHART)
    xi = lie2.cnc_xi()
    assert ex.normal_form(xi(u)) is ex.const(4.0)
    assert ex.normal_form(xi(v)) is ex.const(4.0)


def test_cnc_is_flat():
    conn, _, _ = lie2.cnc_connection(CHART)
    assert sf.curvature_residual(conn) <= 1e-10


def test_cnc_torsion_pairing():
    # Theta(u, v) = -3u translates to theta(u) = 0, theta(v) = 3
    conn, u, v = lie2.cnc_connection(CHART)
    theta = sf.torsion_form(conn)
    pts = CHART.sample(n=30)
    assert sf.max_abs_at([theta(u)], pts) <= 1e-12
    assert sf.max_abs_at([ex.sub(theta(v), ex.const(3.0))], pts) <= 1e-12


def test_leftinv_json_roundtrip():
    conn = lie2.rank2_normal_connection(f=(0.25, -1.5))
    back = lie2.leftinv_from_dict(lie2.leftinv_to_dict(conn))
    assert np.array_equal(back.psi1, conn.psi1)
    assert np.array_equal(back.psi2, conn.psi2)
    assert np.array_equal(back.f, conn.f)
    assert back.algebra == conn.algebra
