"""Force-to-motion reference generation via a virtual mass-damper-spring.

A gated human interaction force drives, per axis,

    M (T_r'' - T_d'') + C (T_r' - T_d') + K (T_r - T_d) = F

with the desired-trajectory derivatives held at zero, so the reference
accelerates with the force, coasts out with time constant M/C, and (for
K > 0) is pulled back toward the held desired point.  With K = 0 the steady
reference velocity is F/C per axis.  Position hold is implemented by
resetting the held point T_d to the reference once the force gate closes
and the reference velocity has decayed.

Each axis is a linear time-invariant system, so the fixed-step update uses
the exact zero-order-hold discretization rather than a numerical integrator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

HOLD_VELOCITY = 0.02  # m/s; reference considered at rest below this


@dataclass
class AdmittanceConfig:
    """Virtual mass/damping/stiffness diagonals and the force gate threshold."""

    M: np.ndarray
    C: np.ndarray
    K: np.ndarray
    threshold: float = 0.5

    def __post_init__(self):
        self.M = np.asarray(self.M, dtype=float)
        self.C = np.asarray(self.C, dtype=float)
        self.K = np.asarray(self.K, dtype=float)
        for name, arr in (("M", self.M), ("C", self.C), ("K", self.K)):
            if arr.shape != (3,):
                raise ValueError(f"admittance {name} needs three diagonal entries")
        if np.any(self.M <= 0) or np.any(self.C <= 0):
            raise ValueError("virtual mass and damping must be strictly positive")
        if np.any(self.K < 0):
            raise ValueError("virtual stiffness must be nonnegative")
        if self.threshold < 0:
            raise ValueError("force threshold must be nonnegative")


@dataclass
class AdmittanceState:
    """Reference trajectory sample plus the held desired position."""

    T_r: np.ndarray
    T_r_dot: np.ndarray
    T_r_ddot: np.ndarray
    T_d: np.ndarray

    def __post_init__(self):
        self.T_r = np.asarray(self.T_r, dtype=float)
        self.T_r_dot = np.asarray(self.T_r_dot, dtype=float)
        self.T_r_ddot = np.asarray(self.T_r_ddot, dtype=float)
        self.T_d = np.asarray(self.T_d, dtype=float)

    @classmethod
    def at_rest(cls, position) -> "AdmittanceState":
        p = np.asarray(position, dtype=float)
        return cls(T_r=p.copy(), T_r_dot=np.zeros(3), T_r_ddot=np.zeros(3),
                   T_d=p.copy())


def gate_force(F_ext, threshold: float) -> np.ndarray:
    """Pass the force through only when its norm exceeds the threshold.

    Gating on the vector norm avoids per-axis chatter near the threshold.
    """
    F = np.asarray(F_ext, dtype=float)
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    if np.linalg.norm(F) > threshold:
        return F.copy()
    return np.zeros(3)


def _zoh_matrices(m: float, c: float, k: float, dt: float):
    """Exact discretization of [offset, velocity] under a held force."""
    A = np.array([[0.0, 1.0, 0.0],
                  [-k / m, -c / m, 1.0 / m],
                  [0.0, 0.0, 0.0]])
    Phi = expm(A * dt)
    return Phi[:2, :2], Phi[:2, 2]


_DISC_CACHE: dict = {}


def _discretization(cfg: AdmittanceConfig, dt: float):
    key = (tuple(cfg.M), tuple(cfg.C), tuple(cfg.K), dt)
    if key not in _DISC_CACHE:
        _DISC_CACHE[key] = [
            _zoh_matrices(cfg.M[k], cfg.C[k], cfg.K[k], dt) for k in range(3)
        ]
    return _DISC_CACHE[key]


def admittance_step(state: AdmittanceState, F_gated, cfg: AdmittanceConfig,
                    dt: float) -> AdmittanceState:
    """Advance the reference one step under the (already gated) force.

    Per axis: T_r'' = (F - C T_r' - K (T_r - T_d)) / M, integrated exactly
    over the step with F held constant.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    F = np.asarray(F_gated, dtype=float)
    disc = _discretization(cfg, dt)
    offset = state.T_r - state.T_d
    new_offset = np.empty(3)
    new_vel = np.empty(3)
    for k in range(3):
        Ad, Bd = disc[k]
        x0, v0 = offset[k], state.T_r_dot[k]
        new_offset[k] = Ad[0, 0] * x0 + Ad[0, 1] * v0 + Bd[0] * F[k]
        new_vel[k] = Ad[1, 0] * x0 + Ad[1, 1] * v0 + Bd[1] * F[k]
    accel = (F - cfg.C * new_vel - cfg.K * new_offset) / cfg.M
    return AdmittanceState(T_r=state.T_d + new_offset, T_r_dot=new_vel,
                           T_r_ddot=accel, T_d=state.T_d.copy())


def hold_reset(state: AdmittanceState) -> AdmittanceState:
    """Re-anchor the held desired position at the current reference."""
    return AdmittanceState(T_r=state.T_r.copy(), T_r_dot=state.T_r_dot.copy(),
                           T_r_ddot=state.T_r_ddot.copy(), T_d=state.T_r.copy())


class AdmittanceChannel:
    """Stateful per-loop wrapper: gate, integrate, and auto hold-reset.

    The hold fires once per force episode: after the gate closes, the first
    time the reference velocity drops below HOLD_VELOCITY the desired point
    is re-anchored, so the position controller holds station there.
    """

    def __init__(self, cfg: AdmittanceConfig, dt: float, initial_position):
        self.cfg = cfg
        self.dt = dt
        self.state = AdmittanceState.at_rest(initial_position)
        self._armed = False

    def update(self, F_ext) -> tuple[AdmittanceState, bool]:
        F_gated = gate_force(F_ext, self.cfg.threshold)
        gated = bool(np.any(F_gated != 0.0))
        self.state = admittance_step(self.state, F_gated, self.cfg, self.dt)
        if gated:
            self._armed = True
        elif self._armed and float(np.linalg.norm(self.state.T_r_dot)) < HOLD_VELOCITY:
            self.state = hold_reset(self.state)
            self._armed = False
        return self.state, gated
