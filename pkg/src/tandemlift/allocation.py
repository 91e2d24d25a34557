"""Wrench allocation across the two quadrotors and their rotors.

The controller produces one total wrench [F_t, U_t]; the assembly has eight
inputs (thrust + three moments per quadrotor), so the map B u_q = [F_t, U_t]
is underdetermined.  The weighted minimum-norm solution

    u_q* = H^-2 B^T (B H^-2 B^T)^-1 [F_t, U_t]^T

is exact and optimal for the quadratic cost ||H u_q||^2.  Each quadrotor's
four inputs are then inverted through the plus-configuration mixer into four
rotor thrusts and speeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "AllocationGeometry", "WrenchCommand", "build_B", "build_H", "allocate",
    "mixer_matrix", "quad_mixer_inverse", "rotor_forward", "rotor_speeds",
]


def build_B(d_1, d_2) -> np.ndarray:
    """4x8 wrench map, one 4x4 block per quadrotor mounted at offset d_i.

    Thrust at a lateral offset contributes roll/pitch moments through
    d_i(2) and -d_i(1); any z component of d_i does not enter.
    """
    blocks = []
    for d in (np.asarray(d_1, dtype=float), np.asarray(d_2, dtype=float)):
        blocks.append(np.array([
            [1.0, 0.0, 0.0, 0.0],
            [d[1], 1.0, 0.0, 0.0],
            [-d[0], 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]))
    return np.hstack(blocks)


def build_H(costs) -> np.ndarray:
    """Diagonal square-root cost matrix: ||H u||^2 = sum_j c_j u_j^2."""
    c = np.asarray(costs, dtype=float)
    if c.shape != (8,):
        raise ValueError("allocation costs must have eight entries")
    if np.any(c <= 0):
        raise ValueError(f"allocation costs must be strictly positive, got {c}")
    return np.diag(np.sqrt(c))


@dataclass
class AllocationGeometry:
    """Immutable allocation data with the normal-matrix factorization cached."""

    B: np.ndarray
    H: np.ndarray
    _M: np.ndarray = field(init=False, repr=False)       # H^-2 B^T
    _cho: tuple = field(init=False, repr=False)          # factor of B H^-2 B^T

    def __post_init__(self):
        self.B = np.asarray(self.B, dtype=float)
        self.H = np.asarray(self.H, dtype=float)
        if self.B.shape != (4, 8) or self.H.shape != (8, 8):
            raise ValueError("geometry shapes must be B(4x8), H(8x8)")
        if np.linalg.matrix_rank(self.B) < 4:
            raise ValueError("B must have full row rank 4")
        h2inv = 1.0 / np.diag(self.H) ** 2
        self._M = self.B.T * h2inv[:, None]
        normal = self.B @ self._M
        try:
            self._cho = cho_factor(normal)
        except np.linalg.LinAlgError as exc:  # degenerate geometry, defensive
            raise ValueError(f"singular allocation normal matrix: {exc}") from exc

    @classmethod
    def build(cls, d_1, d_2, costs=None) -> "AllocationGeometry":
        costs = np.ones(8) if costs is None else costs
        return cls(B=build_B(d_1, d_2), H=build_H(costs))


def allocate(F_t: float, U_t, geometry: AllocationGeometry) -> np.ndarray:
    """Weighted minimum-norm inputs u_q with B u_q = [F_t, U_t] exactly."""
    w = np.array([F_t, U_t[0], U_t[1], U_t[2]])
    return geometry._M @ cho_solve(geometry._cho, w)


def mixer_matrix(l: float, mu: float) -> np.ndarray:
    """Plus-configuration map from four rotor thrusts to (u_1..u_4)."""
    return np.array([
        [1.0, 1.0, 1.0, 1.0],
        [0.0, l, 0.0, -l],
        [-l, 0.0, l, 0.0],
        [mu, -mu, mu, -mu],
    ])


@lru_cache(maxsize=8)
def _mixer_inverse(l: float, mu: float) -> np.ndarray:
    try:
        return np.linalg.inv(mixer_matrix(l, mu))
    except np.linalg.LinAlgError as exc:  # cannot occur for l, mu > 0
        raise ValueError(f"singular mixer for l={l}, mu={mu}") from exc


def quad_mixer_inverse(u_i, l: float, mu: float):
    """Rotor thrusts realizing one quadrotor's inputs.

    Returns (f_clamped, f_raw, clamped): negative solutions are clamped to
    zero with the flag set; the raw solution is kept for telemetry.
    """
    if l <= 0 or mu <= 0:
        raise ValueError("arm length and moment ratio must be positive")
    f = _mixer_inverse(l, mu) @ np.asarray(u_i, dtype=float)
    clamped = bool(f[0] < 0 or f[1] < 0 or f[2] < 0 or f[3] < 0)
    return np.maximum(f, 0.0), f, clamped


def rotor_forward(f, l: float, mu: float) -> np.ndarray:
    """Inputs produced by the given rotor thrusts (mixer forward map)."""
    return mixer_matrix(l, mu) @ np.asarray(f, dtype=float)


def rotor_speeds(f, k_t: float) -> np.ndarray:
    """Rotor speeds in rpm from thrusts f = k_t Omega^2."""
    f = np.asarray(f, dtype=float)
    if k_t <= 0:
        raise ValueError("thrust constant must be positive")
    if np.any(f < 0):
        raise ValueError("rotor thrusts must be clamped nonnegative before speeds")
    return np.sqrt(f / k_t)


@dataclass
class WrenchCommand:
    """Total wrench with its allocation down to rotor level."""

    F_t: float
    U_t: np.ndarray
    u_q: np.ndarray
    f: np.ndarray
    omega_rotor: np.ndarray
    clamped: bool
    residual: float = 0.0     # |B u_q - [F_t, U_t]|_inf at allocation time

    def __post_init__(self):
        self.U_t = np.asarray(self.U_t, dtype=float)
        self.u_q = np.asarray(self.u_q, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        self.omega_rotor = np.asarray(self.omega_rotor, dtype=float)


def allocate_wrench(F_t: float, U_t, geometry: AllocationGeometry,
                    l: float, mu: float, k_t: float) -> WrenchCommand:
    """Full allocation chain: inputs, rotor thrusts (clamped), rotor speeds."""
    U_t = np.asarray(U_t, dtype=float)
    u_q = allocate(F_t, U_t, geometry)
    w = np.array([F_t, U_t[0], U_t[1], U_t[2]])
    residual = float(np.max(np.abs(geometry.B @ u_q - w)))
    f_all = np.empty(8)
    clamped = False
    for i in range(2):
        f_cl, _, cl = quad_mixer_inverse(u_q[4 * i:4 * i + 4], l, mu)
        f_all[4 * i:4 * i + 4] = f_cl
        clamped = clamped or cl
    return WrenchCommand(F_t=F_t, U_t=U_t, u_q=u_q, f=f_all,
                         omega_rotor=rotor_speeds(f_all, k_t),
                         clamped=clamped, residual=residual)
