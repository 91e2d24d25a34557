"""Nonsingular fast terminal sliding-mode tracking controller.

Per axis k in (x, y, z, roll, pitch, yaw), with tracking error e = ref - actual:

    S_k = e'_k + xi_k e_k + eta_k |e_k|^a sgn(e_k)

The control cancels the known dynamics and adds a reaching term
lam1 S + lam2 * switch(S), where switch is sgn(S) or the boundary-layer
saturation sat(S/Phi).  The position axes produce virtual accelerations
(u_x, u_y, u_z) that are realized through total thrust and a desired
roll/pitch extracted with the tangent map; the attitude axes produce the
three body moments directly.

The controller treats Euler-angle rates as equal to the body rates (valid
near hover); the plant in `dynamics` does not make that approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .dynamics import AngleGuardError, EulerAngles, SystemParams, SystemState

AXES = ("x", "y", "z", "phi", "theta", "psi")

SIGN_MODE = "sign"
SATURATION_MODE = "saturation"


class DegenerateThrustError(RuntimeError):
    """Vertical virtual control too small to extract a desired attitude."""


def _positive6(name: str, values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (6,):
        raise ValueError(f"{name} must have six per-axis entries")
    if np.any(arr <= 0):
        raise ValueError(f"{name} entries must be strictly positive")
    return arr


@dataclass
class ControlGains:
    """Per-axis surface and reaching gains (x, y, z, phi, theta, psi order)."""

    xi: np.ndarray
    eta: np.ndarray
    a: float
    lam1: np.ndarray
    lam2: np.ndarray
    boundary_layer: float = 0.1
    psi_d: float = 0.0
    switch_mode: str = SATURATION_MODE

    def __post_init__(self):
        self.xi = _positive6("xi", self.xi)
        self.eta = _positive6("eta", self.eta)
        self.lam1 = _positive6("lambda1", self.lam1)
        self.lam2 = _positive6("lambda2", self.lam2)
        if self.a < 1.0:
            raise ValueError("exponent a must be >= 1")
        if not 0.0 < self.boundary_layer < 1.0:
            raise ValueError("boundary layer must lie in (0, 1)")
        if self.switch_mode not in (SIGN_MODE, SATURATION_MODE):
            raise ValueError(f"unknown switch mode {self.switch_mode!r}")


@dataclass
class TrackingError:
    e: np.ndarray
    de: np.ndarray

    def __post_init__(self):
        self.e = np.asarray(self.e, dtype=float)
        self.de = np.asarray(self.de, dtype=float)


@dataclass
class SlidingState:
    S: np.ndarray

    def __post_init__(self):
        self.S = np.asarray(self.S, dtype=float)


@dataclass
class ReferenceSignal:
    """Desired pose [x,y,z,phi,theta,psi] with first and second derivatives."""

    chi_d: np.ndarray
    chi_d_dot: np.ndarray
    chi_d_ddot: np.ndarray

    def __post_init__(self):
        self.chi_d = np.asarray(self.chi_d, dtype=float)
        self.chi_d_dot = np.asarray(self.chi_d_dot, dtype=float)
        self.chi_d_ddot = np.asarray(self.chi_d_ddot, dtype=float)
        stacked = np.concatenate([self.chi_d, self.chi_d_dot, self.chi_d_ddot])
        if not np.all(np.isfinite(stacked)):
            raise ValueError("reference signal must be finite")


def sgn_pow(e: float, a: float) -> float:
    """Odd power |e|^a sgn(e); continuous for a >= 1, sgn(0) = 0."""
    if e == 0.0:
        return 0.0
    return abs(e) ** a * math.copysign(1.0, e)


def sgn_pow_rate(e: float, a: float, de: float) -> float:
    """Time derivative of sgn_pow along e(t): a |e|^(a-1) e'.

    At e = 0 with a = 1 the limit convention returns e' (|e|^0 taken as 1).
    """
    if a == 1.0:
        return de
    if e == 0.0:
        return 0.0
    return a * abs(e) ** (a - 1.0) * de


def sliding_surface(err: TrackingError, gains: ControlGains) -> SlidingState:
    e, de = err.e, err.de
    S = de + gains.xi * e + gains.eta * np.abs(e) ** gains.a * np.sign(e)
    return SlidingState(S=S)


def saturate(s: float, width: float) -> float:
    """Boundary-layer saturation: linear inside |s| <= width, +-1 outside."""
    if abs(s) <= width:
        return s / width
    return math.copysign(1.0, s)


def switch_term(S: np.ndarray, gains: ControlGains) -> np.ndarray:
    """Reaching term lam1 S + lam2 * (sgn(S) or sat(S/Phi))."""
    S = np.asarray(S, dtype=float)
    if gains.switch_mode == SIGN_MODE:
        sw = np.sign(S)
    else:
        sw = np.array([saturate(s, gains.boundary_layer) for s in S])
    return gains.lam1 * S + gains.lam2 * sw


def _reaching(e: float, de: float, axis: int, gains: ControlGains) -> float:
    """Scalar surface feedback for one axis: (xi + eta a |e|^(a-1)) e' + switch."""
    S = de + gains.xi[axis] * e + gains.eta[axis] * sgn_pow(e, gains.a)
    if gains.switch_mode == SIGN_MODE:
        sw = math.copysign(1.0, S) if S != 0.0 else 0.0
    else:
        sw = saturate(S, gains.boundary_layer)
    return (gains.xi[axis] * de + gains.eta[axis] * sgn_pow_rate(e, gains.a, de)
            + gains.lam1[axis] * S + gains.lam2[axis] * sw)


def position_virtual_controls(state: SystemState, ref: ReferenceSignal,
                              gains: ControlGains, params: SystemParams,
                              dist_estimate: np.ndarray | None = None):
    """Virtual accelerations realized by thrust tilt, one per position axis.

    u_k = m_t * chi_ddot_d,k + drag_k - d_k + m_t * reaching_k, with the
    gravity feedforward m_t g on the vertical axis; the same m_t factor is
    applied on all three axes so that u_z / (c.phi c.theta) is the thrust.
    """
    d_hat = np.zeros(3) if dist_estimate is None else np.asarray(dist_estimate, dtype=float)
    u = np.empty(3)
    for k in range(3):
        e = ref.chi_d[k] - state.p[k]
        de = ref.chi_d_dot[k] - state.v[k]
        u[k] = (params.m_t * ref.chi_d_ddot[k]
                + params.k_l_drag[k] * state.v[k] - d_hat[k]
                + params.m_t * _reaching(e, de, k, gains))
    u[2] += params.m_t * params.g
    return u[0], u[1], u[2]


def thrust_from_virtual(u_z: float, angles: EulerAngles) -> float:
    """Total thrust realizing the vertical virtual control at this attitude."""
    if not angles.inside_guard():
        raise AngleGuardError(
            f"attitude beyond guard: phi={angles.phi:.4f}, theta={angles.theta:.4f}")
    return u_z / (math.cos(angles.phi) * math.cos(angles.theta))


def thrust_command(state: SystemState, ref: ReferenceSignal, gains: ControlGains,
                   params: SystemParams,
                   dist_estimate: np.ndarray | None = None) -> float:
    """Total thrust U_1 = u_z / (cos(phi) cos(theta)); positive in normal flight."""
    _, _, u_z = position_virtual_controls(state, ref, gains, params, dist_estimate)
    return thrust_from_virtual(u_z, state.angles)


def desired_attitude(u_x: float, u_y: float, u_z: float, psi_d: float):
    """Desired roll and pitch realizing (u_x, u_y) at yaw psi_d.

    Tangent-map extraction, both outputs in (-pi/2, pi/2).  Exact inverse of
    the thrust-tilt map only to second order in the commanded angles.
    """
    if abs(u_z) < 1e-6:
        raise DegenerateThrustError(f"u_z={u_z} too small for attitude extraction")
    cps, sps = math.cos(psi_d), math.sin(psi_d)
    theta_d = math.atan((u_x * cps + u_y * sps) / u_z)
    phi_d = math.atan(math.cos(theta_d) * (u_x * sps - u_y * cps) / u_z)
    return phi_d, theta_d


def attitude_moments(state: SystemState, att_ref: ReferenceSignal,
                     gains: ControlGains, params: SystemParams,
                     dist_estimate: np.ndarray | None = None):
    """Body moments (U_2, U_3, U_4) tracking the desired attitude.

    att_ref carries the full 6-vector reference; only the attitude entries
    (indices 3..5) are used.  Euler-angle rates are taken equal to the body
    rates.
    """
    d_hat = np.zeros(3) if dist_estimate is None else np.asarray(dist_estimate, dtype=float)
    jx, jy, jz = params.J_t
    kr = params.k_r_drag
    wx, wy, wz = state.omega
    eul = state.angles.as_array()
    gyro = np.array([(jy - jz) / jx * wy * wz,
                     (jz - jx) / jy * wx * wz,
                     (jx - jy) / jz * wx * wy])
    inertia = (jx, jy, jz)
    U = np.empty(3)
    for k in range(3):
        axis = 3 + k
        e = att_ref.chi_d[axis] - eul[k]
        de = att_ref.chi_d_dot[axis] - state.omega[k]
        U[k] = inertia[k] * (att_ref.chi_d_ddot[axis] - gyro[k]
                             + kr[k] / inertia[k] * state.omega[k]
                             - d_hat[k] / inertia[k]
                             + _reaching(e, de, axis, gains))
    return U[0], U[1], U[2]


def reaching_time_bound(V0: float, lam1: float, lam2: float) -> float:
    """Upper bound on the time to reach S = 0 from Lyapunov value V0."""
    if V0 < 0:
        raise ValueError("V0 must be nonnegative")
    if lam1 <= 0 or lam2 <= 0:
        raise ValueError("reaching gains must be positive")
    gamma = math.sqrt(2.0) * lam2
    return math.log(abs((2.0 * lam1 * math.sqrt(V0) + gamma) / gamma)) / lam1


class SecondOrderTracker:
    """Critically damped second-order tracker producing smooth derivatives.

    Used to turn the discrete desired-attitude sequence into a consistent
    (value, rate, acceleration) triple; the states are advanced with the
    exact zero-order-hold discretization so the rate is the true derivative
    of the tracked value.
    """

    def __init__(self, cutoff_hz: float, dt: float):
        if cutoff_hz <= 0 or dt <= 0:
            raise ValueError("cutoff and dt must be positive")
        self.omega_c = 2.0 * math.pi * cutoff_hz
        wc = self.omega_c
        A = np.array([[0.0, 1.0, 0.0],
                      [-wc * wc, -2.0 * wc, wc * wc],
                      [0.0, 0.0, 0.0]])
        Phi = expm(A * dt)
        self._Ad = Phi[:2, :2]
        self._Bd = Phi[:2, 2]
        self.y = 0.0
        self.dy = 0.0

    def reset(self, value: float, rate: float = 0.0):
        self.y = value
        self.dy = rate

    def accel(self, target: float) -> float:
        wc = self.omega_c
        return wc * wc * (target - self.y) - 2.0 * wc * self.dy

    def step(self, target: float):
        """Advance one step; returns (value, rate, accel) after the update."""
        ynew = self._Ad[0, 0] * self.y + self._Ad[0, 1] * self.dy + self._Bd[0] * target
        dynew = self._Ad[1, 0] * self.y + self._Ad[1, 1] * self.dy + self._Bd[1] * target
        self.y, self.dy = ynew, dynew
        return self.y, self.dy, self.accel(target)


@dataclass
class ControlOutput:
    """One control step: wrench, surfaces, and the reference actually tracked."""

    U: np.ndarray                 # (U_1 thrust, U_2..U_4 moments)
    S: np.ndarray                 # six sliding surface values
    chi_d: np.ndarray             # reference pose tracked this step
    chi_d_dot: np.ndarray
    u_virtual: np.ndarray         # (u_x, u_y, u_z)
    negative_thrust: bool


class NftsmController:
    """Position + attitude cascade; owns the attitude-reference smoothing state."""

    def __init__(self, gains: ControlGains, params: SystemParams, dt: float,
                 attitude_filter_hz: float = 20.0):
        self.gains = gains
        self.params = params
        self.dt = dt
        self._phi_track = SecondOrderTracker(attitude_filter_hz, dt)
        self._theta_track = SecondOrderTracker(attitude_filter_hz, dt)
        self._primed = False

    def prime(self, state: SystemState, pos_ref: ReferenceSignal):
        """Initialize the attitude trackers at the first commanded attitude."""
        u_x, u_y, u_z = position_virtual_controls(state, pos_ref, self.gains, self.params)
        phi_d, theta_d = desired_attitude(u_x, u_y, u_z, self.gains.psi_d)
        self._phi_track.reset(phi_d)
        self._theta_track.reset(theta_d)
        self._primed = True

    def step(self, state: SystemState, pos_ref: ReferenceSignal) -> ControlOutput:
        """Compute the total wrench for one control period.

        pos_ref carries the translational reference in entries 0..2 of a
        6-vector (attitude entries ignored on input).
        """
        if not self._primed:
            self.prime(state, pos_ref)
        gains, params = self.gains, self.params
        u_x, u_y, u_z = position_virtual_controls(state, pos_ref, gains, params)
        U1 = thrust_from_virtual(u_z, state.angles)
        phi_raw, theta_raw = desired_attitude(u_x, u_y, u_z, gains.psi_d)
        phi_d, dphi_d, ddphi_d = self._phi_track.step(phi_raw)
        theta_d, dtheta_d, ddtheta_d = self._theta_track.step(theta_raw)

        chi_d = np.array([pos_ref.chi_d[0], pos_ref.chi_d[1], pos_ref.chi_d[2],
                          phi_d, theta_d, gains.psi_d])
        chi_d_dot = np.array([pos_ref.chi_d_dot[0], pos_ref.chi_d_dot[1],
                              pos_ref.chi_d_dot[2], dphi_d, dtheta_d, 0.0])
        chi_d_ddot = np.array([pos_ref.chi_d_ddot[0], pos_ref.chi_d_ddot[1],
                               pos_ref.chi_d_ddot[2], ddphi_d, ddtheta_d, 0.0])
        full_ref = ReferenceSignal(chi_d, chi_d_dot, chi_d_ddot)

        U2, U3, U4 = attitude_moments(state, full_ref, gains, params)

        chi = np.concatenate([state.p, state.angles.as_array()])
        chi_dot = np.concatenate([state.v, state.omega])
        err = TrackingError(e=chi_d - chi, de=chi_d_dot - chi_dot)
        S = sliding_surface(err, gains).S

        return ControlOutput(U=np.array([U1, U2, U3, U4]), S=S,
                             chi_d=chi_d, chi_d_dot=chi_d_dot,
                             u_virtual=np.array([u_x, u_y, u_z]),
                             negative_thrust=U1 < 0.0)
