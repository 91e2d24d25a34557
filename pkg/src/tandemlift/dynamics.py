"""Rigid-body types and combined dynamics of the two-quadrotor beam assembly.

The two quadrotors are rigidly bolted to the ends of a circular-section beam,
so the whole assembly moves as a single rigid body:

    m_t v' = R [0,0,F_t]^T - [0,0,m_t g]^T - K_l v + D_l
    J_t w' = U_t - w x (J_t w) - K_r w + D_r

with R the Z-X-Y Euler rotation (yaw about Z, then roll about X, then pitch
about Y), w the body rates, F_t the total thrust along the body z axis and
U_t the total body moments.  Attitude kinematics use the full body-rate
mapping; the small-angle shortcut is left to the controller.

Also provides per-component oracles (single quadrotor, payload, rigid-link
kinematics) used by the test suite to cross-validate the combined model.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

GRAVITY = 9.81

# Simulation aborts beyond this roll/pitch magnitude: the thrust law divides
# by cos(phi) cos(theta).
ANGLE_GUARD_RAD = math.radians(80.0)

_HALF_PI = math.pi / 2.0


class SingularMappingError(RuntimeError):
    """Body-rate to Euler-rate mapping is not invertible at this attitude."""


class AngleGuardError(RuntimeError):
    """Roll or pitch left the guarded domain during simulation."""


@dataclass
class EulerAngles:
    """Roll, pitch, yaw in radians (Z-X-Y convention)."""

    phi: float
    theta: float
    psi: float

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, self.theta, self.psi])

    def inside_guard(self, guard: float = ANGLE_GUARD_RAD) -> bool:
        return abs(self.phi) <= guard and abs(self.theta) <= guard


@dataclass
class SystemState:
    """Pose and twist of the combined rigid body.

    p: position [m], v: velocity [m/s] (inertial frame),
    angles: Euler attitude, omega: body rates p,q,r [rad/s].
    """

    p: np.ndarray
    v: np.ndarray
    angles: EulerAngles
    omega: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)
        vec = np.concatenate([self.p, self.v, self.angles.as_array(), self.omega])
        if not np.all(np.isfinite(vec)):
            raise ValueError("system state must be finite")

    def as_vector(self) -> np.ndarray:
        """Flat layout [x,y,z, vx,vy,vz, phi,theta,psi, p,q,r]."""
        return np.concatenate([self.p, self.v, self.angles.as_array(), self.omega])

    @classmethod
    def from_vector(cls, y: np.ndarray) -> "SystemState":
        y = np.asarray(y, dtype=float)
        return cls(p=y[0:3].copy(), v=y[3:6].copy(),
                   angles=EulerAngles(y[6], y[7], y[8]), omega=y[9:12].copy())


@dataclass
class QuadParams:
    """Single quadrotor constants (both vehicles are identical)."""

    m: float
    J: np.ndarray            # positive diagonal entries, kg m^2
    l: float                 # arm length, m
    k_t: float               # thrust constant, N/rpm^2
    k_m: float               # moment constant, N*m/rpm^2

    def __post_init__(self):
        self.J = np.asarray(self.J, dtype=float)
        if self.m <= 0 or self.l <= 0 or self.k_t <= 0 or self.k_m <= 0:
            raise ValueError("quad parameters must be strictly positive")
        if self.J.shape != (3,) or np.any(self.J <= 0):
            raise ValueError("quad inertia must be 3 positive diagonal entries")

    @property
    def mu(self) -> float:
        return self.k_m / self.k_t


@dataclass
class PayloadParams:
    """Circular-section beam payload."""

    m: float
    J: np.ndarray
    length: float
    radius: float

    def __post_init__(self):
        self.J = np.asarray(self.J, dtype=float)
        if self.m <= 0 or self.length <= 0 or self.radius <= 0:
            raise ValueError("payload parameters must be strictly positive")
        if self.J.shape != (3,) or np.any(self.J <= 0):
            raise ValueError("payload inertia must be 3 positive diagonal entries")


@dataclass
class SystemParams:
    """Combined-body constants used by the plant and the control laws."""

    m_t: float
    J_t: np.ndarray          # diagonal (J_x, J_y, J_z)
    d_1: np.ndarray          # CoM offsets of each quadrotor from the payload CoM
    d_2: np.ndarray
    k_l_drag: np.ndarray     # translational drag diagonal, N s/m
    k_r_drag: np.ndarray     # rotational drag diagonal, N m s
    g: float = GRAVITY

    def __post_init__(self):
        self.J_t = np.asarray(self.J_t, dtype=float)
        self.d_1 = np.asarray(self.d_1, dtype=float)
        self.d_2 = np.asarray(self.d_2, dtype=float)
        self.k_l_drag = np.asarray(self.k_l_drag, dtype=float)
        self.k_r_drag = np.asarray(self.k_r_drag, dtype=float)
        if self.m_t <= 0 or np.any(self.J_t <= 0):
            raise ValueError("total mass and inertia must be strictly positive")
        if np.any(self.k_l_drag < 0) or np.any(self.k_r_drag < 0):
            raise ValueError("drag diagonals must be nonnegative")


@dataclass
class Disturbance:
    """Lumped external disturbance wrench (translational D_l, rotational D_r)."""

    d_l: np.ndarray = field(default_factory=lambda: np.zeros(3))
    d_r: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.d_l = np.asarray(self.d_l, dtype=float)
        self.d_r = np.asarray(self.d_r, dtype=float)


ZERO_DISTURBANCE = Disturbance()


def rotation_matrix(angles: EulerAngles) -> np.ndarray:
    """Body-to-inertial rotation, Z-X-Y convention (equals Rz(psi)Rx(phi)Ry(theta))."""
    cph, sph = math.cos(angles.phi), math.sin(angles.phi)
    cth, sth = math.cos(angles.theta), math.sin(angles.theta)
    cps, sps = math.cos(angles.psi), math.sin(angles.psi)
    return np.array([
        [cth * cps - sph * sth * sps, -cph * sps, sth * cps + sph * cth * sps],
        [cth * sps + sph * sth * cps,  cph * cps, sth * sps - sph * cth * cps],
        [-cph * sth,                   sph,       cph * cth],
    ])


def body_rate_matrix(angles: EulerAngles) -> np.ndarray:
    """Matrix W with omega = W * dTheta/dt.  det(W) = cos(phi)."""
    cph, sph = math.cos(angles.phi), math.sin(angles.phi)
    cth, sth = math.cos(angles.theta), math.sin(angles.theta)
    return np.array([
        [cth, 0.0, -cph * sth],
        [0.0, 1.0, sph],
        [sth, 0.0, cph * cth],
    ])


def body_rate_from_euler_rate(angles: EulerAngles, euler_rate: np.ndarray) -> np.ndarray:
    """Map Euler-angle rates to body rates p,q,r."""
    return body_rate_matrix(angles) @ np.asarray(euler_rate, dtype=float)


def euler_rate_from_body_rate(angles: EulerAngles, omega: np.ndarray) -> np.ndarray:
    """Invert the body-rate mapping.

    Valid on the guarded attitude domain |phi| < pi/2, |theta| < pi/2; the
    mapping determinant is cos(phi), so it degenerates at |phi| = pi/2.
    """
    if abs(angles.phi) >= _HALF_PI or abs(angles.theta) >= _HALF_PI:
        raise SingularMappingError(
            f"attitude outside invertible domain: phi={angles.phi:.4f}, theta={angles.theta:.4f}")
    if abs(math.cos(angles.phi)) < 1e-9:
        raise SingularMappingError(f"body-rate mapping singular at phi={angles.phi:.6f}")
    return np.linalg.solve(body_rate_matrix(angles), np.asarray(omega, dtype=float))


def derivative_vector(y, F_t: float, U_t, d_l, d_r, params: SystemParams) -> np.ndarray:
    """Combined-body state derivative on the flat 12-vector layout.

    Scalar math in the body of this function keeps the fixed-step loop cheap;
    `system_derivative` is the typed wrapper with identical results.
    """
    vx, vy, vz = y[3], y[4], y[5]
    phi, theta, psi = y[6], y[7], y[8]
    wx, wy, wz = y[9], y[10], y[11]

    cph, sph = math.cos(phi), math.sin(phi)
    cth, sth = math.cos(theta), math.sin(theta)
    cps, sps = math.cos(psi), math.sin(psi)

    m_t = params.m_t
    klx, kly, klz = params.k_l_drag
    krx, kry, krz = params.k_r_drag
    jx, jy, jz = params.J_t

    # translational: thrust along the rotated body z axis
    ax = ((sth * cps + sph * cth * sps) * F_t - klx * vx + d_l[0]) / m_t
    ay = ((sth * sps - sph * cth * cps) * F_t - kly * vy + d_l[1]) / m_t
    az = ((cph * cth) * F_t - m_t * params.g - klz * vz + d_l[2]) / m_t

    # attitude kinematics: full inverse mapping, det = cos(phi)
    if abs(phi) >= _HALF_PI or abs(theta) >= _HALF_PI or abs(cph) < 1e-9:
        raise SingularMappingError(
            f"attitude outside invertible domain: phi={phi:.4f}, theta={theta:.4f}")
    # analytic inverse of the body-rate matrix (adjugate / cos(phi))
    dphi = cth * wx + sth * wz
    dpsi = (-sth * wx + cth * wz) / cph
    dtheta = wy - sph * dpsi

    # rotational: diagonal inertia, gyroscopic + drag + disturbance
    dwx = (U_t[0] - (jz - jy) * wy * wz - krx * wx + d_r[0]) / jx
    dwy = (U_t[1] - (jx - jz) * wx * wz - kry * wy + d_r[1]) / jy
    dwz = (U_t[2] - (jy - jx) * wx * wy - krz * wz + d_r[2]) / jz

    return np.array([vx, vy, vz, ax, ay, az, dphi, dtheta, dpsi, dwx, dwy, dwz])


def system_derivative(state: SystemState, F_t: float, U_t: np.ndarray,
                      dist: Disturbance, params: SystemParams) -> SystemState:
    """Time derivative of the combined-body state (fields hold derivatives)."""
    dy = derivative_vector(state.as_vector(), F_t, np.asarray(U_t, dtype=float),
                           dist.d_l, dist.d_r, params)
    return SystemState.from_vector(dy)


def parallel_axis_inertia(quad: QuadParams, payload: PayloadParams,
                          d_1: np.ndarray, d_2: np.ndarray) -> np.ndarray:
    """Diagonal inertia of the assembly by parallel-axis composition.

    Cross-check only: the configured J_t wins when provided, since the two
    can legitimately disagree (quad inertia is specified about its own CoM
    with unknown internal mass layout).
    """
    d_1 = np.asarray(d_1, dtype=float)
    d_2 = np.asarray(d_2, dtype=float)
    total = payload.J.copy()
    for d in (d_1, d_2):
        total = total + quad.J + quad.m * (np.dot(d, d) - d * d)
    return total


def compose_system_params(q1: QuadParams, q2: QuadParams, payload: PayloadParams,
                          d_1: np.ndarray, d_2: np.ndarray,
                          k_l_drag: np.ndarray, k_r_drag: np.ndarray,
                          g: float = GRAVITY,
                          J_t: np.ndarray | None = None) -> SystemParams:
    """Combine component parameters into the rigid-assembly record.

    The two quadrotors must be identical and mounted symmetrically
    (d_1 = -d_2).  m_t is the exact sum of the component masses.
    """
    d_1 = np.asarray(d_1, dtype=float)
    d_2 = np.asarray(d_2, dtype=float)
    if q1.m != q2.m or not np.array_equal(q1.J, q2.J) or q1.l != q2.l:
        raise ValueError("the two quadrotors must be identical")
    if not np.allclose(d_1, -d_2, atol=1e-12):
        raise ValueError(f"asymmetric geometry: d_1={d_1} is not -d_2={d_2}")
    m_t = q1.m + q2.m + payload.m
    estimate = parallel_axis_inertia(q1, payload, d_1, d_2)
    if J_t is None:
        J_t = estimate
    else:
        J_t = np.asarray(J_t, dtype=float)
        rel = np.abs(estimate - J_t) / np.abs(J_t)
        logger.info("configured J_t %s; parallel-axis estimate %s (rel dev %s)",
                    J_t, estimate, rel)
    return SystemParams(m_t=m_t, J_t=J_t, d_1=d_1, d_2=d_2,
                        k_l_drag=np.asarray(k_l_drag, dtype=float),
                        k_r_drag=np.asarray(k_r_drag, dtype=float), g=g)


def rigid_link_kinematics(p_L: np.ndarray, v_L: np.ndarray, a_L: np.ndarray,
                          angles: EulerAngles, omega: np.ndarray,
                          omega_dot: np.ndarray, d_i: np.ndarray):
    """Position, velocity, acceleration of a quadrotor CoM rigidly offset by d_i.

    d_i is fixed in the body frame, so the offset terms rotate with R; at
    R = I they reduce to the plain cross-product forms.
    """
    p_L = np.asarray(p_L, dtype=float)
    v_L = np.asarray(v_L, dtype=float)
    a_L = np.asarray(a_L, dtype=float)
    omega = np.asarray(omega, dtype=float)
    omega_dot = np.asarray(omega_dot, dtype=float)
    d_i = np.asarray(d_i, dtype=float)
    R = rotation_matrix(angles)
    p_i = p_L + R @ d_i
    v_i = v_L + R @ np.cross(omega, d_i)
    a_i = a_L + R @ (np.cross(omega_dot, d_i) + np.cross(omega, np.cross(omega, d_i)))
    return p_i, v_i, a_i


def component_dynamics_residual(angles: EulerAngles, omega: np.ndarray,
                                omega_dot: np.ndarray, thrusts: tuple[float, float],
                                quad: QuadParams, payload: PayloadParams,
                                d_1: np.ndarray, d_2: np.ndarray,
                                internal_split: np.ndarray | None = None,
                                g: float = GRAVITY) -> float:
    """Residual of eliminating the interconnection forces between components.

    Test-only oracle (drag and disturbances zero).  Builds a motion consistent
    with the combined translational equation, computes the interconnection
    forces from the payload equation with an arbitrary split, and returns the
    norm of the summed per-quadrotor equation residuals.  Zero residual means
    the component models compose exactly into the combined model.
    """
    omega = np.asarray(omega, dtype=float)
    omega_dot = np.asarray(omega_dot, dtype=float)
    d_1 = np.asarray(d_1, dtype=float)
    d_2 = np.asarray(d_2, dtype=float)
    rho = np.zeros(3) if internal_split is None else np.asarray(internal_split, dtype=float)

    R = rotation_matrix(angles)
    F_t = thrusts[0] + thrusts[1]
    m_t = 2.0 * quad.m + payload.m

    # payload CoM acceleration from the combined translational equation
    # (it coincides with the assembly CoM under the symmetric mounting)
    a_L = (R @ np.array([0.0, 0.0, F_t]) - np.array([0.0, 0.0, m_t * g])) / m_t

    # interconnection force sum from the payload equation, arbitrary split
    F_sum = payload.m * a_L + np.array([0.0, 0.0, payload.m * g])
    F = (0.5 * F_sum + rho, 0.5 * F_sum - rho)

    residual = np.zeros(3)
    for d_i, u1, F_i in zip((d_1, d_2), thrusts, F):
        _, _, a_i = rigid_link_kinematics(np.zeros(3), np.zeros(3), a_L,
                                          angles, omega, omega_dot, d_i)
        # per-quadrotor translational equation, moved to one side
        residual = residual + quad.m * a_i - (
            R @ np.array([0.0, 0.0, u1]) - np.array([0.0, 0.0, quad.m * g]) - F_i)
    return float(np.linalg.norm(residual))
