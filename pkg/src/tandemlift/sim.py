"""Deterministic fixed-step closed-loop runner and telemetry handling.

Each step applies, in order: scripted + live force summation, the force
gate, the admittance reference update, the position and attitude control
laws, wrench allocation down to rotor level, and one RK4 step of the rigid
body under the held wrench and scheduled disturbances.  Telemetry is one
record per step with a fixed CSV column order, so two runs of the same
scenario produce bit-identical logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .admittance import AdmittanceChannel
from .allocation import allocate_wrench
from .config import DisturbanceEvent, ForceProfile, ScenarioConfig
from .control import DegenerateThrustError, NftsmController, ReferenceSignal
from .dynamics import (ANGLE_GUARD_RAD, AngleGuardError, SingularMappingError,
                       SystemState, derivative_vector)

REACH_TOLERANCE = 1e-3


class NonFiniteStateError(RuntimeError):
    """Integration produced a non-finite state."""


def rk4_step(f, y: np.ndarray, dt: float, t: float = 0.0) -> np.ndarray:
    """Classical fourth-order step of y' = f(t, y)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFiniteStateError(f"non-finite state after step at t={t}")
    return out


def gaussian_force(t: float, profile: ForceProfile) -> np.ndarray:
    """Gaussian pulse force at time t."""
    arg = (t - profile.t0) / profile.sigma
    return profile.amplitude * math.exp(-0.5 * arg * arg) * profile.direction


def scripted_force(t: float, profiles: list[ForceProfile]) -> np.ndarray:
    total = np.zeros(3)
    for p in profiles:
        total = total + gaussian_force(t, p)
    return total


def disturbance_at(t: float, events: list[DisturbanceEvent]) -> tuple[np.ndarray, np.ndarray]:
    """Sum of scheduled disturbance wrenches active at time t.

    All kinds act inside their [t0, t1] window; a step simply has an open
    end, and a sinusoid scales by sin(2 pi f (t - t0)).
    """
    d_l = np.zeros(3)
    d_r = np.zeros(3)
    for ev in events:
        if not ev.t0 <= t <= ev.t1:
            continue
        scale = (math.sin(2.0 * math.pi * ev.freq_hz * (t - ev.t0))
                 if ev.kind == "sinusoid" else 1.0)
        d_l = d_l + scale * ev.d_l
        d_r = d_r + scale * ev.d_r
    return d_l, d_r


CSV_COLUMNS = [
    "t", "x", "y", "z", "vx", "vy", "vz", "phi", "theta", "psi", "p", "q", "r",
    "xd", "yd", "zd", "phid", "thetad", "psid",
    "Sx", "Sy", "Sz", "Sphi", "Stheta", "Spsi",
    "U1", "U2", "U3", "U4",
    "u11", "u21", "u31", "u41", "u12", "u22", "u32", "u42",
    "f11", "f21", "f31", "f41", "f12", "f22", "f32", "f42",
    "Fx", "Fy", "Fz", "gated", "clampflag",
]


@dataclass
class TelemetryRecord:
    """One control period: state, references, surfaces, and actuator detail."""

    t: float
    state: SystemState
    chi_d: np.ndarray
    S: np.ndarray
    U: np.ndarray
    u_q: np.ndarray
    f: np.ndarray
    F_ext: np.ndarray
    gated: bool
    clamped: bool
    omega_rotor: np.ndarray | None = None

    @property
    def V(self) -> np.ndarray:
        """Per-axis Lyapunov value 0.5 S^2."""
        return 0.5 * self.S ** 2

    def to_row(self) -> list:
        sv = self.state.as_vector()
        return ([self.t] + list(sv) + list(self.chi_d) + list(self.S)
                + list(self.U) + list(self.u_q) + list(self.f) + list(self.F_ext)
                + [int(self.gated), int(self.clamped)])

    @classmethod
    def from_row(cls, values: list[float]) -> "TelemetryRecord":
        v = list(values)
        return cls(t=v[0], state=SystemState.from_vector(np.array(v[1:13])),
                   chi_d=np.array(v[13:19]), S=np.array(v[19:25]),
                   U=np.array(v[25:29]), u_q=np.array(v[29:37]),
                   f=np.array(v[37:45]), F_ext=np.array(v[45:48]),
                   gated=bool(int(v[48])), clamped=bool(int(v[49])))


@dataclass
class TelemetryLog:
    records: list[TelemetryRecord] = field(default_factory=list)

    def append(self, rec: TelemetryRecord):
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        idx = CSV_COLUMNS.index(name)
        return np.array([rec.to_row()[idx] for rec in self.records])

    def times(self) -> np.ndarray:
        return np.array([rec.t for rec in self.records])


def _format(value) -> str:
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def export_log(log: TelemetryLog, path: str):
    """Write the log as CSV with the fixed column order."""
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for rec in log.records:
                fh.write(",".join(_format(v) for v in rec.to_row()) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write telemetry to {path}: {exc}") from exc


def import_log(path: str) -> TelemetryLog:
    """Read a CSV produced by export_log; schema mismatches name the column."""
    log = TelemetryLog()
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if header != CSV_COLUMNS:
                missing = [c for c in CSV_COLUMNS if c not in header]
                extra = [c for c in header if c not in CSV_COLUMNS]
                bad = (missing or extra or ["<order>"])[0]
                raise ValueError(f"telemetry schema mismatch at column {bad!r}")
            for line in fh:
                if not line.strip():
                    continue
                log.append(TelemetryRecord.from_row([float(x) for x in line.split(",")]))
    except OSError as exc:
        raise OSError(f"cannot read telemetry from {path}: {exc}") from exc
    return log


@dataclass
class RunResult:
    log: TelemetryLog
    summary: dict


def reach_times(log: TelemetryLog, tolerance: float = REACH_TOLERANCE) -> list[float | None]:
    """First time each surface reaches |S| <= tolerance.

    S is continuous along the trajectory, so a sign change between samples
    or a sampled dip below the tolerance means the threshold was crossed
    inside the interval; the crossing instant is estimated by linear
    interpolation between the bracketing samples.
    """
    n_axes = 6
    out: list[float | None] = [None] * n_axes
    if not log.records:
        return out
    S = np.array([rec.S for rec in log.records])
    t = log.times()
    for k in range(n_axes):
        s = S[:, k]
        if abs(s[0]) <= tolerance:
            out[k] = float(t[0])
            continue
        hit = np.abs(s[1:]) <= tolerance
        crossed = np.sign(s[1:]) * np.sign(s[:-1]) < 0
        idx = np.nonzero(hit | crossed)[0]
        if idx.size == 0:
            continue
        i = int(idx[0])  # event inside (t[i], t[i+1])
        a, b = abs(s[i]), abs(s[i + 1])
        if crossed[i]:
            # |S| passes through zero: interpolate the zero of S itself
            frac = a / (a + b) if (a + b) > 0 else 0.0
            t_zero = t[i] + frac * (t[i + 1] - t[i])
            # the tolerance band is entered a little before the zero
            frac_tol = max(a - tolerance, 0.0) / (a + b) if (a + b) > 0 else 0.0
            out[k] = float(t[i] + frac_tol * (t[i + 1] - t[i]))
            out[k] = min(out[k], float(t_zero))
        else:
            frac = (a - tolerance) / (a - b) if a > b else 1.0
            out[k] = float(t[i] + frac * (t[i + 1] - t[i]))
    return out


def lyapunov_increments(log: TelemetryLog) -> np.ndarray:
    """Per-step, per-axis difference of V = 0.5 S^2 (rows: steps-1, cols: 6)."""
    V = np.array([rec.V for rec in log.records])
    return np.diff(V, axis=0)


def total_variation(values: np.ndarray) -> float:
    return float(np.sum(np.abs(np.diff(np.asarray(values, dtype=float)))))


def run_scenario(cfg: ScenarioConfig, live_force=None, frame_sink=None) -> RunResult:
    """Run the closed loop for the configured duration.

    live_force, when given, is called once per step with the current time and
    returns a held force vector (or None); it is summed with the scripted
    profiles and recorded, so a replay of the log is deterministic.
    Aborts (angle guard, non-finite state) terminate the loop with the
    telemetry collected so far and are reported in the summary.
    """
    sim = cfg.sim
    dt = sim.dt
    n_steps = int(math.floor(sim.duration / dt + 1e-9))

    controller = NftsmController(cfg.gains, cfg.params, dt,
                                 attitude_filter_hz=cfg.attitude_filter_hz)
    anchor = sim.reference_position if sim.reference_position is not None else sim.initial.p
    admittance = AdmittanceChannel(cfg.admittance, dt, anchor)
    params = cfg.params
    mu = cfg.quad.mu

    y = sim.initial.as_vector().copy()
    log = TelemetryLog()
    aborted = None
    clamp_count = 0
    negative_thrust_count = 0
    max_alloc_residual = 0.0
    landing = sim.landing
    landing_z0 = None
    thrust_cut = False
    settled = False

    for n in range(n_steps + 1):
        t = n * dt
        state = SystemState.from_vector(y)

        F_live = np.zeros(3)
        if live_force is not None:
            sampled = live_force(t)
            if sampled is not None:
                F_live = np.asarray(sampled, dtype=float)
        F_total = scripted_force(t, cfg.forces) + F_live

        adm_state, gated = admittance.update(F_total)

        chi_d_pos = adm_state.T_r.copy()
        chi_d_dot_pos = adm_state.T_r_dot.copy()
        chi_d_ddot_pos = adm_state.T_r_ddot.copy()
        if landing is not None and t >= landing.t_start:
            if landing_z0 is None:
                landing_z0 = chi_d_pos[2]
            z_ref = max(landing_z0 - landing.descent_rate * (t - landing.t_start), 0.0)
            chi_d_pos[2] = z_ref
            chi_d_dot_pos[2] = -landing.descent_rate if z_ref > 0.0 else 0.0
            chi_d_ddot_pos[2] = 0.0
            if state.p[2] < landing.cutoff_altitude:
                thrust_cut = True

        pos_ref = ReferenceSignal(
            chi_d=np.concatenate([chi_d_pos, np.zeros(3)]),
            chi_d_dot=np.concatenate([chi_d_dot_pos, np.zeros(3)]),
            chi_d_ddot=np.concatenate([chi_d_ddot_pos, np.zeros(3)]))

        try:
            out = controller.step(state, pos_ref)
        except (AngleGuardError, DegenerateThrustError) as exc:
            aborted = f"controller abort: {exc}"
            break
        except (ValueError, OverflowError) as exc:
            # non-finite values propagating through the control math
            aborted = f"non-finite control: {exc}"
            break

        if out.negative_thrust:
            negative_thrust_count += 1

        wrench = allocate_wrench(out.U[0], out.U[1:4], cfg.geometry,
                                 cfg.quad.l, mu, cfg.quad.k_t)
        max_alloc_residual = max(max_alloc_residual, wrench.residual)
        if wrench.clamped:
            clamp_count += 1

        rec = TelemetryRecord(t=t, state=state, chi_d=out.chi_d, S=out.S,
                              U=out.U, u_q=wrench.u_q, f=wrench.f,
                              F_ext=F_total, gated=gated,
                              clamped=wrench.clamped,
                              omega_rotor=wrench.omega_rotor)
        log.append(rec)
        if frame_sink is not None:
            frame_sink(rec)

        if n == n_steps:
            break

        F_t = 0.0 if (thrust_cut or settled) else float(out.U[0])
        U_t = np.zeros(3) if (thrust_cut or settled) else out.U[1:4]

        if settled:
            continue

        def deriv(tt, yy):
            d_l, d_r = disturbance_at(tt, cfg.disturbances)
            return derivative_vector(yy, F_t, U_t, d_l, d_r, params)

        try:
            y = rk4_step(deriv, y, dt, t)
        except NonFiniteStateError as exc:
            aborted = f"non-finite state: {exc}"
            break
        except SingularMappingError as exc:
            aborted = f"singular attitude kinematics: {exc}"
            break

        if abs(y[6]) > ANGLE_GUARD_RAD or abs(y[7]) > ANGLE_GUARD_RAD:
            aborted = (f"angle guard: phi={y[6]:.4f}, theta={y[7]:.4f} "
                       f"exceeded {ANGLE_GUARD_RAD:.4f} rad at t={t + dt:.4f}")
            break

        if thrust_cut and y[2] <= 0.0:
            # scripted landing clamp: grounded, zero out motion
            y[2] = 0.0
            y[3:6] = 0.0
            y[9:12] = 0.0
            settled = True

    final = log.records[-1] if log.records else None
    summary = {
        "steps": len(log),
        "dt": dt,
        "duration": sim.duration,
        "aborted": aborted,
        "final_position_error": (
            float(np.linalg.norm(final.chi_d[0:3] - final.state.p)) if final else None),
        "final_errors": (
            [float(x) for x in (final.chi_d[0:3] - final.state.p)] if final else None),
        "final_U1": float(final.U[0]) if final else None,
        "max_abs_S": ([float(x) for x in np.max(
            np.abs(np.array([r.S for r in log.records])), axis=0)] if final else None),
        "reach_times": reach_times(log),
        "clamp_count": clamp_count,
        "negative_thrust_count": negative_thrust_count,
        "max_allocation_residual": max_alloc_residual,
        "landed": settled,
    }
    return RunResult(log=log, summary=summary)
