"""Geodesic flow, angular first integrals, and the Lagrangian/Hamiltonian
picture of the fibrewise fractional-linear case.

Geodesics are integrated with classical fixed-step RK4 (step halving is
the convergence oracle used by the tests; adaptivity would make runs
nondeterministic).  The frame-flow and Hamilton-flow integrators guard the
admissible set: the frame coefficient `a` (respectively the fibre
coordinate `s`) must stay at least 0.05 in magnitude, otherwise the run
stops and is flagged instead of extrapolating across a kernel locus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from . import surface as sf
from .errors import AdmissibleSetError, DegenerateFrameError, MagnitudeCollapseError
from .expr import add, diff, mul, sub

ADMISSIBLE_MIN = 0.05


@dataclass(frozen=True)
class GeodesicState:
    y: tuple
    v: tuple

    def as_array(self):
        return np.array([*self.y, *self.v], dtype=np.float64)


@dataclass(frozen=True)
class Trajectory:
    """Sampled curve: times, states (n, k), and an exit flag set when the
    integration left the chart box (the trajectory is then partial)."""

    t: np.ndarray
    states: np.ndarray
    exited: bool = False

    @property
    def y(self):
        return self.states[:, 0:2]

    @property
    def v(self):
        return self.states[:, 2:4]


def _rk4(deriv, state0, t_end, dt, keep_going=None):
    n_steps = max(1, int(round(t_end / dt)))
    states = np.empty((n_steps + 1, len(state0)), dtype=np.float64)
    times = np.empty(n_steps + 1, dtype=np.float64)
    states[0] = state0
    times[0] = 0.0
    flagged = False
    count = 1
    s = np.asarray(state0, dtype=np.float64)
    for i in range(n_steps):
        k1 = deriv(s)
        k2 = deriv(s + 0.5 * dt * k1)
        k3 = deriv(s + 0.5 * dt * k2)
        k4 = deriv(s + dt * k3)
        s = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if keep_going is not None and not keep_going(s):
            flagged = True
            break
        states[count] = s
        times[count] = (i + 1) * dt
        count += 1
    return times[:count], states[:count], flagged


def integrate_geodesic(c, state0, t_end, dt):
    """RK4 integration of the geodesic system
    (dy^l = v^l, dv^l = -Gamma^l_jk v^j v^k); halts at chart exit."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    ev = ex.Evaluator(c.coefficient_fields())
    chart = c.chart

    def deriv(s):
        g = ev.at(s[0:2]).reshape(2, 2, 2)
        acc = -np.einsum("ljk,j,k->l", g, s[2:4], s[2:4])
        return np.concatenate([s[2:4], acc])

    t, states, exited = _rk4(deriv, state0.as_array(), t_end, dt,
                             keep_going=lambda s: chart.contains(s[0:2]))
    return Trajectory(t=t, states=states, exited=exited)


# ---------------------------------------------------------------------------
# the angular first integral

@dataclass(frozen=True)
class ComplexForm:
    re: sf.OneForm2
    im: sf.OneForm2


def wong_first_integral(phi):
    """omega = exp(-phi) dy1 + i dy2: parallel for the flat decomposition
    of the canonical connection with potential phi, so the phase of
    omega(dy/dt) is constant along geodesics."""
    if isinstance(phi, str):
        phi = ex.parse(phi)
    re = sf.OneForm2(ex.exp(mul(ex.const(-1.0), phi)), ex.ZERO)
    im = sf.OneForm2(ex.ZERO, ex.ONE)
    return ComplexForm(re=re, im=im)


def omega_values(omega, traj):
    """Complex values omega(dy/dt) along a trajectory."""
    ev = ex.Evaluator([omega.re.c1, omega.re.c2, omega.im.c1, omega.im.c2])
    vals = ev.at_many(traj.y)
    v = traj.v
    re = vals[0] * v[:, 0] + vals[1] * v[:, 1]
    im = vals[2] * v[:, 0] + vals[3] * v[:, 1]
    return re + 1j * im


@dataclass(frozen=True)
class DriftReport:
    max_drift: float
    zero_branch: bool
    min_abs: float


def first_integral_drift(omega, traj, zero_eps=1e-10, collapse_eps=1e-12):
    """Maximal deviation of arg(omega(dy/dt)) from its initial phase, in
    radians.  If |omega(dy/dt)| stays below `zero_eps` the zero branch of
    the dichotomy is reported instead; a collapse below `collapse_eps`
    only part-way is an error."""
    z = omega_values(omega, traj)
    mags = np.abs(z)
    if float(np.max(mags)) < zero_eps:
        return DriftReport(max_drift=0.0, zero_branch=True, min_abs=float(np.min(mags)))
    if float(np.min(mags)) < collapse_eps:
        raise MagnitudeCollapseError(
            f"|omega(dy/dt)| collapsed to {float(np.min(mags)):.3e} mid-trajectory")
    angles = np.angle(z * np.conj(z[0]))
    return DriftReport(max_drift=float(np.max(np.abs(angles))),
                       zero_branch=False, min_abs=float(np.min(mags)))


def arg_drift_series(omega, traj):
    """Per-sample angular deviation (for CSV output); NaN where the
    magnitude vanishes."""
    z = omega_values(omega, traj)
    out = np.full(len(z), np.nan)
    good = np.abs(z) > 0
    if good[0]:
        out[good] = np.angle(z[good] * np.conj(z[0]))
    return out


# ---------------------------------------------------------------------------
# Legendre transformation of the fractional-linear Lagrangian L = b/a

def legendre(a, b):
    """Fibre map (a, b) -> (r, s) = (-b/a^2, 1/a)."""
    if abs(a) < 1e-300:
        raise AdmissibleSetError("Legendre map undefined at a = 0")
    return (-b / (a * a), 1.0 / a)


def legendre_inverse(r, s):
    """Fibre map (r, s) -> (a, b) = (1/s, -r/s^2)."""
    if abs(s) < 1e-300:
        raise AdmissibleSetError("inverse Legendre map undefined at s = 0")
    return (1.0 / s, -r / (s * s))


def legendre_jacobian(a, b):
    """d(r, s)/d(a, b) at a fibre point."""
    return np.array([[2.0 * b / a ** 3, -1.0 / a ** 2],
                     [-1.0 / a ** 2, 0.0]])


# ---------------------------------------------------------------------------
# frame data: a parallel frame for a flat connection plus its torsion
# functions

class FrameData:
    """Frame fields v, w with the flat connection D making them parallel,
    the dual coframe (zeta, eta), and the torsion functions P = tau(v),
    Q = tau(w) for the torsion form tau of D."""

    def __init__(self, chart, v, w, points=None, tol=1e-9):
        self.chart = chart
        self.v = tuple(v)
        self.w = tuple(w)
        self.conn_d = sf.connection_with_parallel_frame(self.v, self.w, chart,
                                                        points=points)
        if points is None:
            points = chart.sample()
        residual = _parallel_residual(self.conn_d, (self.v, self.w), points)
        if residual > tol:
            raise DegenerateFrameError(
                f"frame is not parallel for the derived connection "
                f"(residual {residual:.3e})")
        self.parallel_residual = residual
        tau = sf.torsion_form(self.conn_d)
        self.tau = tau
        self.p = tau(self.v)
        self.q = tau(self.w)
        det = sub(mul(self.v[0], self.w[1]), mul(self.v[1], self.w[0]))
        self.zeta = sf.OneForm2(ex.div(self.w[1], det),
                                ex.div(mul(ex.const(-1.0), self.w[0]), det))
        self.eta = sf.OneForm2(ex.div(mul(ex.const(-1.0), self.v[1]), det),
                               ex.div(self.v[0], det))
        self._frame_ev = ex.Evaluator([*self.v, *self.w, self.p, self.q])
        self._coframe_ev = ex.Evaluator([self.zeta.c1, self.zeta.c2,
                                         self.eta.c1, self.eta.c2])

    def frame_at(self, y):
        """(v, w, P, Q) at a base point: two vectors and two scalars."""
        vals = self._frame_ev.at(y)
        return vals[0:2], vals[2:4], vals[4], vals[5]

    def coframe_at(self, y):
        vals = self._coframe_ev.at(y)
        return vals[0:2], vals[2:4]

    def fit_fibre(self, y, vec):
        """Coefficients (a, b) with a v(y) + b w(y) = vec."""
        v, w, _, _ = self.frame_at(y)
        m = np.column_stack([v, w])
        if abs(np.linalg.det(m)) < 1e-12:
            raise DegenerateFrameError("frame degenerate at the base point")
        return np.linalg.solve(m, np.asarray(vec, dtype=np.float64))


def _parallel_residual(conn_d, frame, points):
    fields = []
    for fv in frame:
        for j in (0, 1):
            for l in (0, 1):
                cov = add(diff(fv[l], j),
                          add(mul(conn_d.g(l, j, 0), fv[0]),
                              mul(conn_d.g(l, j, 1), fv[1])))
                fields.append(cov)
    return sf.max_abs_at(fields, points)


def wong_frame_data(phi, chart, points=None):
    """Frame (exp(phi) d_1, d_2), parallel for the flat decomposition of
    the canonical connection with potential phi."""
    if isinstance(phi, str):
        phi = ex.parse(phi)
    v = (ex.exp(phi), ex.ZERO)
    w = (ex.ZERO, ex.ONE)
    return FrameData(chart, v, w, points=points)


# ---------------------------------------------------------------------------
# the two flows

def frame_flow_field(fd, state):
    """Tangent of (y1, y2, a, b): dy = a v + b w, da = (aP + bQ) a,
    db = (aP + bQ) b."""
    y, a, b = state[0:2], state[2], state[3]
    v, w, p, q = fd.frame_at(y)
    factor = a * p + b * q
    dy = a * v + b * w
    return np.array([dy[0], dy[1], factor * a, factor * b])


def hamilton_field(fd, state):
    """Tangent of (y1, y2, r, s): s^-2 (phi x - s v + r w) with
    phi = sP - rQ and x the radial fibre field."""
    y, r, s = state[0:2], state[2], state[3]
    if abs(s) < 1e-300:
        raise AdmissibleSetError("Hamilton field undefined at s = 0")
    v, w, p, q = fd.frame_at(y)
    phi = s * p - r * q
    inv_s2 = 1.0 / (s * s)
    dy = inv_s2 * (-s * v + r * w)
    return np.array([dy[0], dy[1], inv_s2 * phi * r, inv_s2 * phi * s])


def integrate_frame_flow(fd, state0, t_end, dt, guard=ADMISSIBLE_MIN):
    chart = fd.chart
    t, states, flagged = _rk4(
        lambda s: frame_flow_field(fd, s),
        np.asarray(state0, dtype=np.float64), t_end, dt,
        keep_going=lambda s: chart.contains(s[0:2]) and abs(s[2]) >= guard)
    return Trajectory(t=t, states=states, exited=flagged)


def integrate_hamilton(fd, state0, t_end, dt, guard=ADMISSIBLE_MIN):
    chart = fd.chart
    t, states, flagged = _rk4(
        lambda s: hamilton_field(fd, s),
        np.asarray(state0, dtype=np.float64), t_end, dt,
        keep_going=lambda s: chart.contains(s[0:2]) and abs(s[3]) >= guard)
    return Trajectory(t=t, states=states, exited=flagged)


# ---------------------------------------------------------------------------
# structural residuals

def symplectic_matrix(fd, state):
    """The symplectic form phi zeta^eta - zeta^dr - eta^ds as a 4x4
    antisymmetric matrix in the basis (d_y1, d_y2, d_r, d_s)."""
    y, r, s = state[0:2], state[2], state[3]
    zeta, eta = fd.coframe_at(y)
    _, _, p, q = fd.frame_at(y)
    phi = s * p - r * q
    sigma = np.zeros((4, 4))
    for i in (0, 1):
        for j in (0, 1):
            sigma[i, j] = phi * (zeta[i] * eta[j] - zeta[j] * eta[i])
    for i in (0, 1):
        sigma[i, 2] = -zeta[i]
        sigma[2, i] = zeta[i]
        sigma[i, 3] = -eta[i]
        sigma[3, i] = eta[i]
    return sigma


def symplectic_residual(fd, states):
    """Max over the states of |sigma(X_H, .) - dH|."""
    worst = 0.0
    for state in np.atleast_2d(states):
        r, s = state[2], state[3]
        xh = hamilton_field(fd, state)
        sigma = symplectic_matrix(fd, state)
        dh = np.array([0.0, 0.0, 1.0 / s, -r / (s * s)])
        # sigma(X_H, .)_j = X_H^i sigma[i, j]
        worst = max(worst, float(np.max(np.abs(sigma.T @ xh - dh))))
    return worst


def legendre_pushforward_residual(fd, states):
    """Max over (y, a, b) states of the difference between the pushforward
    of -Z under the Legendre transformation and the Hamilton field at the
    image point."""
    worst = 0.0
    for state in np.atleast_2d(states):
        y, a, b = state[0:2], state[2], state[3]
        minus_z = -frame_flow_field(fd, state)
        jac = legendre_jacobian(a, b)
        pushed = np.concatenate([minus_z[0:2], jac @ minus_z[2:4]])
        r, s = legendre(a, b)
        xh = hamilton_field(fd, np.array([y[0], y[1], r, s]))
        worst = max(worst, float(np.max(np.abs(pushed - xh))))
    return worst


def euler_lagrange_equivalence(c, fd, state0, t_end, dt):
    """Sup-norm distance between the geodesic base curve of `c` and the
    projected frame-flow base curve started from matched initial data."""
    a0, b0 = fd.fit_fibre(state0.y, state0.v)
    geo = integrate_geodesic(c, state0, t_end, dt)
    flow = integrate_frame_flow(fd, [state0.y[0], state0.y[1], a0, b0], t_end, dt)
    n = min(len(geo.t), len(flow.t))
    return float(np.max(np.abs(geo.y[:n] - flow.states[:n, 0:2])))


# ---------------------------------------------------------------------------
# CSV output

def write_trajectory_csv(path, traj, omega=None):
    """Rows of t, y1, y2, v1, v2, re_omega, im_omega, arg_drift with 17
    significant digits; the omega columns are NaN when no first integral
    is supplied."""
    n = len(traj.t)
    if omega is not None:
        z = omega_values(omega, traj)
        re, im = z.real, z.imag
        drift = arg_drift_series(omega, traj)
    else:
        re = im = drift = np.full(n, np.nan)
    table = np.column_stack([traj.t, traj.y, traj.v, re, im, drift])
    header = "t,y1,y2,v1,v2,re_omega,im_omega,arg_drift"
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=header, comments="")
