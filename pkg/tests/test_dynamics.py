"""Tests for geodesic flow, first integrals, and the frame/Hamilton
picture."""

import numpy as np
import pytest

from skewric import dynamics as dyn
from skewric import expr as ex
from skewric import surface as sf
from skewric.chart import Chart2
from skewric.errors import (
    AdmissibleSetError,
    MagnitudeCollapseError,
    SingularPointError,
)

CHART = Chart2(box=((-3.0, 3.0), (-3.0, 3.0)))
PHI = ex.parse("y1*y2")
WONG = sf.wong_connection(PHI, CHART)
OMEGA = dyn.wong_first_integral(PHI)


# ---------------------------------------------------------------------------
# geodesic integration

def test_flat_geodesic_is_straight_line():
    c = sf.flat_connection(CHART)
    traj = dyn.integrate_geodesic(c, dyn.GeodesicState((0, 0), (1, 2)), 1.0, 1e-2)
    assert not traj.exited
    assert np.max(np.abs(traj.y - np.outer(traj.t, [1.0, 2.0]))) <= 1e-12
    assert np.max(np.abs(traj.v - [1.0, 2.0])) <= 1e-12


def test_zero_velocity_is_constant_curve():
    traj = dyn.integrate_geodesic(WONG, dyn.GeodesicState((0.3, -0.2), (0, 0)),
                                  1.0, 1e-2)
    assert np.max(np.abs(traj.y - [0.3, -0.2])) == 0.0


def test_rk4_step_halving_convergence():
    s0 = dyn.GeodesicState((0, 0), (1, 0))
    end_a = dyn.integrate_geodesic(WONG, s0, 1.0, 1e-3).y[-1]
    end_b = dyn.integrate_geodesic(WONG, s0, 1.0, 5e-4).y[-1]
    assert np.max(np.abs(end_a - end_b)) <= 1e-8


def test_chart_exit_flagged():
    tight = Chart2(box=((-0.5, 0.5), (-0.5, 0.5)))
    c = sf.flat_connection(tight)
    traj = dyn.integrate_geodesic(c, dyn.GeodesicState((0, 0), (1, 0)), 2.0, 1e-2)
    assert traj.exited
    assert traj.t[-1] < 2.0
    assert np.all(np.abs(traj.y) <= 0.5)


def test_time_reversal_retraces():
    s0 = dyn.GeodesicState((0.1, -0.1), (1.0, 0.8))
    fwd = dyn.integrate_geodesic(WONG, s0, 1.0, 1e-3)
    back = dyn.integrate_geodesic(
        WONG, dyn.GeodesicState(tuple(fwd.y[-1]), tuple(-fwd.v[-1])), 1.0, 1e-3)
    assert np.max(np.abs(back.y[-1] - fwd.y[0])) <= 1e-8


# ---------------------------------------------------------------------------
# first integral

def test_wong_first_integral_at_zero_potential():
    om = dyn.wong_first_integral(ex.ZERO)
    assert om.re.c1 is ex.ONE and om.re.c2.is_zero
    assert om.im.c1.is_zero and om.im.c2 is ex.ONE


def test_wong_first_integral_components():
    assert ex.symbolically_equal(OMEGA.re.c1, ex.parse("exp(-(y1*y2))"))
    assert OMEGA.re.c2.is_zero


def test_first_integral_is_parallel_for_decomposition():
    d, _ = sf.decompose_with(WONG, sf.wong_gauge(PHI))
    pts = CHART.sample(n=50)
    for form in (OMEGA.re, OMEGA.im):
        cov = sf.covariant_d_oneform(d, form)
        assert sf.max_abs_at([cov[j][k] for j in (0, 1) for k in (0, 1)],
                             pts) <= 1e-10


def test_drift_zero_for_flat_line():
    c = sf.flat_connection(CHART)
    traj = dyn.integrate_geodesic(c, dyn.GeodesicState((0, 0), (1, 1)), 1.0, 1e-2)
    om = dyn.wong_first_integral(ex.ZERO)
    rep = dyn.first_integral_drift(om, traj)
    assert rep.max_drift == 0.0 and not rep.zero_branch


def test_drift_small_along_wong_geodesic():
    traj = dyn.integrate_geodesic(WONG, dyn.GeodesicState((0, 0), (1, 1)), 1.0, 1e-3)
    rep = dyn.first_integral_drift(OMEGA, traj)
    assert not rep.zero_branch
    assert rep.max_drift <= 1e-6


def test_drift_large_for_non_geodesic():
    ts = np.arange(0.0, 1.0 + 1e-12, 1e-3)
    states = np.column_stack([ts, ts ** 2, np.ones_like(ts), 2 * ts])
    fake = dyn.Trajectory(t=ts, states=states)
    assert dyn.first_integral_drift(OMEGA, fake).max_drift > 1e-2


def test_drift_zero_branch():
    traj = dyn.integrate_geodesic(WONG, dyn.GeodesicState((0.2, 0.1), (0, 0)),
                                  0.5, 1e-2)
    rep = dyn.first_integral_drift(OMEGA, traj)
    assert rep.zero_branch


def test_drift_collapse_raises():
    ts = np.linspace(0.0, 1.0, 11)
    vs = np.linspace(1.0, -1.0, 11)
    states = np.column_stack([np.zeros((11, 2)), vs, vs])
    fake = dyn.Trajectory(t=ts, states=states)
    with pytest.raises(MagnitudeCollapseError):
        dyn.first_integral_drift(dyn.wong_first_integral(ex.ZERO), fake)


def test_dichotomy_on_seeded_geodesics():
    rng = np.random.default_rng(24389)
    for _ in range(10):
        y0 = rng.uniform(-0.3, 0.3, 2)
        v0 = rng.uniform(0.5, 1.5, 2)
        traj = dyn.integrate_geodesic(WONG, dyn.GeodesicState(tuple(y0), tuple(v0)),
                                      1.0, 1e-3)
        rep = dyn.first_integral_drift(OMEGA, traj)
        assert rep.zero_branch or rep.max_drift <= 1e-6


# ---------------------------------------------------------------------------
# Legendre transformation

def test_legendre_example_values():
    assert dyn.legendre(1.0, 2.0) == (-2.0, 1.0)
    assert dyn.legendre(1.0, 0.0) == (0.0, 1.0)


def test_legendre_roundtrip_seeded():
    rng = np.random.default_rng(24389)
    worst = 0.0
    for _ in range(100):
        a = rng.uniform(0.1, 3.0) * rng.choice([-1.0, 1.0])
        b = rng.uniform(-3.0, 3.0)
        r, s = dyn.legendre(a, b)
        a2, b2 = dyn.legendre_inverse(r, s)
        worst = max(worst, abs(a - a2), abs(b - b2))
        # H composed with the fibre map is -L
        assert abs(r / s + b / a) <= 1e-12 * (1 + abs(b / a))
    assert worst <= 1e-14


def test_legendre_rejects_kernel():
    with pytest.raises(AdmissibleSetError):
        dyn.legendre(0.0, 1.0)
    with pytest.raises(AdmissibleSetError):
        dyn.legendre_inverse(1.0, 0.0)


# ---------------------------------------------------------------------------
# frame flow and Hamilton flow

def coordinate_frame_data():
    return dyn.FrameData(CHART, (ex.ONE, ex.ZERO), (ex.ZERO, ex.ONE))


def test_frame_flow_torsionfree_constant_coefficients():
    fd = coordinate_frame_data()
    tangent = dyn.frame_flow_field(fd, np.array([0.1, 0.2, 1.5, -0.7]))
    assert tangent[2] == 0.0 and tangent[3] == 0.0
    assert np.allclose(tangent[0:2], [1.5, -0.7])


def test_frame_flow_fixed_point():
    fd = dyn.wong_frame_data(PHI, CHART)
    tangent = dyn.frame_flow_field(fd, np.array([0.3, 0.4, 0.0, 0.0]))
    assert np.array_equal(tangent, np.zeros(4))


def test_frame_flow_projects_to_torsion_geodesics():
    # finite-difference covariant-acceleration oracle for the projected
    # curve: D_y' y' = tau(y') y'
    fd = dyn.wong_frame_data(PHI, CHART)
    dt = 1e-4
    traj = dyn.integrate_frame_flow(fd, [0.0, 0.0, 1.0, 1.0], 0.3, dt)
    ys = traj.states[:, 0:2]
    frame_ev = ex.Evaluator([*fd.v, *fd.w, fd.tau.c1, fd.tau.c2])
    gamma_ev = ex.Evaluator(fd.conn_d.coefficient_fields())
    worst = 0.0
    for i in range(1, len(ys) - 1, 50):
        a, b = traj.states[i, 2], traj.states[i, 3]
        vals = frame_ev.at(ys[i])
        ydot = a * vals[0:2] + b * vals[2:4]
        ydd = (ys[i + 1] - 2 * ys[i] + ys[i - 1]) / dt ** 2
        gam = gamma_ev.at(ys[i]).reshape(2, 2, 2)
        cov = ydd + np.einsum("ljk,j,k->l", gam, ydot, ydot)
        tau_ydot = vals[4] * ydot[0] + vals[5] * ydot[1]
        worst = max(worst, float(np.max(np.abs(cov - tau_ydot * ydot))))
    assert worst <= 1e-7


def test_hamilton_conserves_h():
    fd = coordinate_frame_data()
    traj = dyn.integrate_hamilton(fd, [0.0, 0.0, 0.4, 1.0], 1.0, 1e-3)
    h = traj.states[:, 2] / traj.states[:, 3]
    assert np.max(np.abs(h - h[0])) <= 1e-8


def test_hamilton_conserves_h_wong():
    fd = dyn.wong_frame_data(PHI, CHART)
    traj = dyn.integrate_hamilton(fd, [0.1, -0.2, 0.4, 1.0], 1.0, 1e-3)
    h = traj.states[:, 2] / traj.states[:, 3]
    assert np.max(np.abs(h - h[0])) <= 1e-8


def test_hamilton_field_rejects_zero_s():
    fd = coordinate_frame_data()
    with pytest.raises(AdmissibleSetError):
        dyn.hamilton_field(fd, np.array([0.0, 0.0, 1.0, 0.0]))


def test_admissibility_guard_flags():
    fd = dyn.wong_frame_data(PHI, CHART)
    traj = dyn.integrate_frame_flow(fd, [0.0, 0.0, 0.01, 1.0], 1.0, 1e-2)
    assert traj.exited
    assert len(traj.t) == 1


def test_symplectic_residual_seeded_states():
    fd = dyn.wong_frame_data(PHI, CHART)
    rng = np.random.default_rng(24389)
    states = np.column_stack([
        rng.uniform(-0.5, 0.5, (100, 2)),
        rng.uniform(-1.5, 1.5, (100, 1)),
        rng.uniform(0.2, 1.5, (100, 1)) * rng.choice([-1.0, 1.0], (100, 1)),
    ])
    assert dyn.symplectic_residual(fd, states) <= 1e-9


def test_pushforward_matches_hamilton_field():
    fd = dyn.wong_frame_data(PHI, CHART)
    rng = np.random.default_rng(7)
    states = np.column_stack([
        rng.uniform(-0.5, 0.5, (100, 2)),
        rng.uniform(0.1, 1.5, (100, 1)) * rng.choice([-1.0, 1.0], (100, 1)),
        rng.uniform(-1.5, 1.5, (100, 1)),
    ])
    assert dyn.legendre_pushforward_residual(fd, states) <= 1e-7


# ---------------------------------------------------------------------------
# Euler-Lagrange / geodesic equivalence

def test_equivalence_flat_trivial():
    c = sf.flat_connection(CHART)
    fd = coordinate_frame_data()
    dev = dyn.euler_lagrange_equivalence(c, fd, dyn.GeodesicState((0, 0), (1, 1)),
                                         1.0, 1e-2)
    assert dev <= 1e-12


def test_equivalence_wong():
    fd = dyn.wong_frame_data(PHI, CHART)
    s0 = dyn.GeodesicState((0, 0), (1, 1))
    dev = dyn.euler_lagrange_equivalence(WONG, fd, s0, 1.0, 1e-3)
    assert dev <= 1e-6
    dev_half = dyn.euler_lagrange_equivalence(WONG, fd, s0, 1.0, 5e-4)
    assert dev_half <= 1e-6


def test_equivalence_negative_control_wrong_torsion():
    fd = dyn.wong_frame_data(PHI, CHART)

    class NegatedTorsion:
        chart = fd.chart

        def frame_at(self, y):
            v, w, p, q = fd.frame_at(y)
            return v, w, -p, -q

        def fit_fibre(self, y, vec):
            return fd.fit_fibre(y, vec)

    dev = dyn.euler_lagrange_equivalence(WONG, NegatedTorsion(),
                                         dyn.GeodesicState((0, 0), (1, 1)),
                                         1.0, 1e-3)
    assert dev > 1e-2


def test_lagrangian_is_fractional_linear():
    # L on each fibre is the ratio of the two independent coframe pairings;
    # the dual pairings hold symbolically
    fd = dyn.wong_frame_data(PHI, CHART)
    assert ex.symbolically_equal(fd.zeta(fd.v), ex.ONE)
    assert ex.symbolically_equal(fd.zeta(fd.w), ex.ZERO)
    assert ex.symbolically_equal(fd.eta(fd.w), ex.ONE)
    assert ex.symbolically_equal(fd.eta(fd.v), ex.ZERO)
    y = np.array([0.3, -0.4])
    zeta, eta = fd.coframe_at(y)
    assert abs(np.linalg.det(np.vstack([zeta, eta]))) > 1e-6


def test_dual_coframe_is_parallel():
    fd = dyn.wong_frame_data(PHI, CHART)
    pts = CHART.sample(n=50)
    for form in (fd.zeta, fd.eta):
        cov = sf.covariant_d_oneform(fd.conn_d, form)
        assert sf.max_abs_at([cov[j][k] for j in (0, 1) for k in (0, 1)],
                             pts) <= 1e-9


def test_geodesic_singular_locus_hit():
    chart = Chart2(box=((-2.0, 2.0), (-2.0, 2.0)), excluded=(ex.parse("y1"),))
    c = sf.make_connection(chart, {(0, 0, 0): "1/y1"})
    with pytest.raises(SingularPointError):
        dyn.integrate_geodesic(c, dyn.GeodesicState((0.0, 0.0), (1.0, 0.0)),
                               1.0, 1e-2)


# ---------------------------------------------------------------------------
# CSV output

def test_trajectory_csv_format(tmp_path):
    traj = dyn.integrate_geodesic(WONG, dyn.GeodesicState((0, 0), (1, 1)), 0.1, 1e-2)
    path = tmp_path / "traj.csv"
    dyn.write_trajectory_csv(path, traj, OMEGA)
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    assert rows.shape == (len(traj.t), 8)
    with open(path) as fh:
        header = fh.readline().strip()
    assert header == "t,y1,y2,v1,v2,re_omega,im_omega,arg_drift"
    # 17 significant digits survive a round trip
    assert np.array_equal(rows[:, 1:3], traj.y)
