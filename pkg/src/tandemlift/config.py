"""Scenario configuration: YAML loading, validation, and built-in defaults.

A scenario file has sections `system`, `controller`, `admittance`,
`allocation`, `forces`, `disturbances`, and `sim`.  System keys follow the
nomenclature symbols (m_i, J_x ... J_z, l, m_L, J_Lx ... J_Lz, L, r_L, k_t,
k_m, drag coefficients, g); controller keys use the conventional sliding-mode gain names
(xi, eta, a, lambda1, lambda2).  Parse errors carry the offending key path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .admittance import AdmittanceConfig
from .allocation import AllocationGeometry
from .control import ControlGains
from .dynamics import (EulerAngles, PayloadParams, QuadParams, SystemParams,
                       SystemState, compose_system_params)


class ConfigError(ValueError):
    """Configuration problem, message prefixed with the key path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# k_t / k_m are placeholder rotor constants; only the rotor-speed telemetry
# stage consumes them, and it does not loop back into the dynamics.
DEFAULT_SYSTEM = {
    "m_i": 1.5,
    "J_x": 2.9125e-2, "J_y": 2.9125e-2, "J_z": 5.5225e-2,
    "l": 0.25,
    "m_L": 0.5,
    "J_Lx": 16.6667e-2, "J_Ly": 6.25e-4, "J_Lz": 16.6667e-2,
    "L": 2.0, "r_L": 0.05,
    "J_tx": 3.227327, "J_ty": 0.061286, "J_tz": 3.277117,
    "k_l_drag_x": 6e-3, "k_l_drag_y": 6e-3, "k_l_drag_z": 6e-3,
    "k_r_drag_phi": 6e-3, "k_r_drag_theta": 6e-3, "k_r_drag_psi": 6e-3,
    "g": 9.81,
    "k_t": 8.54858e-6,
    "k_m": 1.3677728e-7,
}

DEFAULT_CONTROLLER = {
    "xi": [4.0, 2.0, 11.0, 25.0, 80.0, 25.0],
    "eta": [0.2, 0.1, 0.2, 0.2, 0.2, 0.2],
    "a": 3.0,
    "lambda1": [0.2, 0.1, 200.0, 40.0, 40.0, 40.0],
    "lambda2": [2.0, 1.0, 100.0, 30.0, 30.0, 30.0],
    "boundary_layer": 0.1,
    "psi_d": 0.0,
    "switch_mode": "saturation",
    "attitude_filter_hz": 20.0,
}

DEFAULT_ADMITTANCE = {"M": [1.0, 1.0, 1.0], "C": [1.6, 1.6, 1.6],
                      "K": [0.0, 0.0, 0.0], "threshold": 0.5}

DEFAULT_ALLOCATION = {"d1": [0.0, 1.0, 0.0], "d2": [0.0, -1.0, 0.0],
                      "costs": [1.0] * 8}


@dataclass
class ForceProfile:
    """Gaussian force pulse: amplitude * exp(-(t-t0)^2 / (2 sigma^2)) * direction."""

    t0: float
    sigma: float
    amplitude: float
    direction: np.ndarray

    def __post_init__(self):
        self.direction = np.asarray(self.direction, dtype=float)
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        norm = float(np.linalg.norm(self.direction))
        if norm == 0.0 or not math.isfinite(norm):
            raise ValueError("direction must be a nonzero finite vector")
        self.direction = self.direction / norm


@dataclass
class DisturbanceEvent:
    """Scripted disturbance: constant, step, or sinusoid over a time window."""

    kind: str                         # constant | step | sinusoid
    d_l: np.ndarray = field(default_factory=lambda: np.zeros(3))
    d_r: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t0: float = 0.0
    t1: float = float("inf")
    freq_hz: float = 1.0

    def __post_init__(self):
        self.d_l = np.asarray(self.d_l, dtype=float)
        self.d_r = np.asarray(self.d_r, dtype=float)
        if self.kind not in ("constant", "step", "sinusoid"):
            raise ValueError(f"unknown disturbance kind {self.kind!r}")


@dataclass
class LandingPlan:
    """Scripted descent of the vertical reference with a thrust cutoff."""

    t_start: float
    descent_rate: float = 0.3
    cutoff_altitude: float = 0.02


@dataclass
class SimSettings:
    duration: float = 10.0
    dt: float = 1e-3
    initial: SystemState = field(default_factory=lambda: SystemState(
        p=np.array([0.0, 0.0, 1.0]), v=np.zeros(3),
        angles=EulerAngles(0.0, 0.0, 0.0), omega=np.zeros(3)))
    reference_position: np.ndarray | None = None   # admittance anchor; defaults to initial.p
    disturbance_bound: float = float("inf")        # assumed bound on scheduled wrenches
    landing: LandingPlan | None = None
    out_csv: str | None = None
    out_summary: str | None = None

    def __post_init__(self):
        if self.reference_position is not None:
            self.reference_position = np.asarray(self.reference_position, dtype=float)
        if not (1e-4 <= self.dt <= 1e-2):
            raise ValueError(f"dt must lie in [1e-4, 1e-2], got {self.dt}")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.disturbance_bound < 0:
            raise ValueError("disturbance bound must be nonnegative")


@dataclass
class ScenarioConfig:
    params: SystemParams
    quad: QuadParams
    payload: PayloadParams
    gains: ControlGains
    admittance: AdmittanceConfig
    geometry: AllocationGeometry
    attitude_filter_hz: float
    forces: list[ForceProfile]
    disturbances: list[DisturbanceEvent]
    sim: SimSettings


def _get(section: dict, path: str, key: str, default=None):
    if key in section:
        return section[key]
    if default is not None:
        return default
    raise ConfigError(f"{path}.{key}", "missing required key")


def _build_system(raw: dict, d1, d2) -> tuple[SystemParams, QuadParams, PayloadParams]:
    merged = {**DEFAULT_SYSTEM, **raw}
    unknown = set(raw) - set(DEFAULT_SYSTEM)
    if unknown:
        raise ConfigError(f"system.{sorted(unknown)[0]}", "unknown key")
    try:
        quad = QuadParams(m=float(merged["m_i"]),
                          J=[merged["J_x"], merged["J_y"], merged["J_z"]],
                          l=float(merged["l"]), k_t=float(merged["k_t"]),
                          k_m=float(merged["k_m"]))
        payload = PayloadParams(m=float(merged["m_L"]),
                                J=[merged["J_Lx"], merged["J_Ly"], merged["J_Lz"]],
                                length=float(merged["L"]), radius=float(merged["r_L"]))
        params = compose_system_params(
            quad, quad, payload, d1, d2,
            k_l_drag=[merged["k_l_drag_x"], merged["k_l_drag_y"], merged["k_l_drag_z"]],
            k_r_drag=[merged["k_r_drag_phi"], merged["k_r_drag_theta"],
                      merged["k_r_drag_psi"]],
            g=float(merged["g"]),
            J_t=[merged["J_tx"], merged["J_ty"], merged["J_tz"]])
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("system", str(exc)) from exc
    return params, quad, payload


def _build_gains(raw: dict) -> tuple[ControlGains, float]:
    merged = {**DEFAULT_CONTROLLER, **raw}
    unknown = set(raw) - set(DEFAULT_CONTROLLER)
    if unknown:
        raise ConfigError(f"controller.{sorted(unknown)[0]}", "unknown key")
    try:
        gains = ControlGains(xi=merged["xi"], eta=merged["eta"], a=float(merged["a"]),
                             lam1=merged["lambda1"], lam2=merged["lambda2"],
                             boundary_layer=float(merged["boundary_layer"]),
                             psi_d=float(merged["psi_d"]),
                             switch_mode=str(merged["switch_mode"]))
    except (ValueError, TypeError) as exc:
        raise ConfigError("controller", str(exc)) from exc
    return gains, float(merged["attitude_filter_hz"])


def _build_admittance(raw: dict) -> AdmittanceConfig:
    merged = {**DEFAULT_ADMITTANCE, **raw}
    unknown = set(raw) - set(DEFAULT_ADMITTANCE)
    if unknown:
        raise ConfigError(f"admittance.{sorted(unknown)[0]}", "unknown key")

    def tri(v):
        return [v, v, v] if np.isscalar(v) else v

    try:
        return AdmittanceConfig(M=tri(merged["M"]), C=tri(merged["C"]),
                                K=tri(merged["K"]),
                                threshold=float(merged["threshold"]))
    except (ValueError, TypeError) as exc:
        raise ConfigError("admittance", str(exc)) from exc


def _build_forces(raw_list) -> list[ForceProfile]:
    out = []
    for i, raw in enumerate(raw_list):
        try:
            out.append(ForceProfile(t0=float(raw["t0"]), sigma=float(raw["sigma"]),
                                    amplitude=float(raw["amplitude"]),
                                    direction=raw["direction"]))
        except KeyError as exc:
            raise ConfigError(f"forces[{i}].{exc.args[0]}", "missing required key") from exc
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"forces[{i}]", str(exc)) from exc
    return out


def _build_disturbances(raw_list) -> list[DisturbanceEvent]:
    out = []
    for i, raw in enumerate(raw_list):
        try:
            out.append(DisturbanceEvent(
                kind=str(raw.get("kind", "constant")),
                d_l=raw.get("d_l", [0.0, 0.0, 0.0]), d_r=raw.get("d_r", [0.0, 0.0, 0.0]),
                t0=float(raw.get("t0", 0.0)), t1=float(raw.get("t1", float("inf"))),
                freq_hz=float(raw.get("freq_hz", 1.0))))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"disturbances[{i}]", str(exc)) from exc
    return out


def _build_sim(raw: dict) -> SimSettings:
    known = {"duration", "dt", "initial", "reference_position",
             "disturbance_bound", "landing", "out_csv", "out_summary"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"sim.{sorted(unknown)[0]}", "unknown key")
    init_raw = raw.get("initial", {})
    try:
        initial = SystemState(
            p=np.asarray(init_raw.get("p", [0.0, 0.0, 1.0]), dtype=float),
            v=np.asarray(init_raw.get("v", [0.0, 0.0, 0.0]), dtype=float),
            angles=EulerAngles(*[float(x) for x in init_raw.get("angles", [0, 0, 0])]),
            omega=np.asarray(init_raw.get("omega", [0.0, 0.0, 0.0]), dtype=float))
    except (ValueError, TypeError) as exc:
        raise ConfigError("sim.initial", str(exc)) from exc
    landing = None
    if raw.get("landing") is not None:
        lr = raw["landing"]
        try:
            landing = LandingPlan(t_start=float(lr["t_start"]),
                                  descent_rate=float(lr.get("descent_rate", 0.3)),
                                  cutoff_altitude=float(lr.get("cutoff_altitude", 0.02)))
        except KeyError as exc:
            raise ConfigError(f"sim.landing.{exc.args[0]}", "missing required key") from exc
    ref_pos = raw.get("reference_position")
    try:
        return SimSettings(duration=float(raw.get("duration", 10.0)),
                           dt=float(raw.get("dt", 1e-3)), initial=initial,
                           reference_position=(np.asarray(ref_pos, dtype=float)
                                               if ref_pos is not None else None),
                           disturbance_bound=float(raw.get("disturbance_bound",
                                                           float("inf"))),
                           landing=landing, out_csv=raw.get("out_csv"),
                           out_summary=raw.get("out_summary"))
    except (ValueError, TypeError) as exc:
        raise ConfigError("sim", str(exc)) from exc


def build_scenario(doc: dict) -> ScenarioConfig:
    """Assemble a scenario from a parsed mapping (all sections optional)."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "scenario must be a mapping of sections")
    known = {"system", "controller", "admittance", "allocation", "forces",
             "disturbances", "sim"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")

    alloc_raw = {**DEFAULT_ALLOCATION, **doc.get("allocation", {})}
    unknown = set(doc.get("allocation", {})) - set(DEFAULT_ALLOCATION)
    if unknown:
        raise ConfigError(f"allocation.{sorted(unknown)[0]}", "unknown key")
    try:
        geometry = AllocationGeometry.build(alloc_raw["d1"], alloc_raw["d2"],
                                            alloc_raw["costs"])
    except (ValueError, TypeError) as exc:
        raise ConfigError("allocation", str(exc)) from exc

    params, quad, payload = _build_system(doc.get("system", {}),
                                          alloc_raw["d1"], alloc_raw["d2"])
    gains, filter_hz = _build_gains(doc.get("controller", {}))
    adm = _build_admittance(doc.get("admittance", {}))
    forces = _build_forces(doc.get("forces", []) or [])
    dists = _build_disturbances(doc.get("disturbances", []) or [])
    sim = _build_sim(doc.get("sim", {}) or {})
    for i, ev in enumerate(dists):
        mag = max(float(np.linalg.norm(ev.d_l)), float(np.linalg.norm(ev.d_r)))
        if mag > sim.disturbance_bound:
            raise ConfigError(f"disturbances[{i}]",
                              f"magnitude {mag} exceeds the assumed bound "
                              f"{sim.disturbance_bound}")
    return ScenarioConfig(params=params, quad=quad, payload=payload, gains=gains,
                          admittance=adm, geometry=geometry,
                          attitude_filter_hz=filter_hz, forces=forces,
                          disturbances=dists, sim=sim)


def load_scenario(path: str) -> ScenarioConfig:
    """Load and validate a YAML scenario file."""
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError("<yaml>", str(exc)) from exc
    return build_scenario(doc if doc is not None else {})


def default_scenario(**sim_overrides) -> ScenarioConfig:
    """Scenario with the default parameter set and no scripted inputs."""
    cfg = build_scenario({})
    if sim_overrides:
        cfg.sim = replace(cfg.sim, **sim_overrides)
    return cfg
