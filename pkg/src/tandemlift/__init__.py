"""Dual-quadrotor rigid payload transport simulator and control stack."""

__version__ = "0.1.0"

from .admittance import AdmittanceConfig, AdmittanceState, admittance_step, gate_force
from .allocation import AllocationGeometry, WrenchCommand, allocate
from .control import ControlGains, NftsmController, ReferenceSignal, sliding_surface
from .dynamics import (Disturbance, EulerAngles, QuadParams, PayloadParams,
                       SystemParams, SystemState, compose_system_params,
                       rotation_matrix, system_derivative)

__all__ = [
    "AdmittanceConfig", "AdmittanceState", "admittance_step", "gate_force",
    "AllocationGeometry", "WrenchCommand", "allocate",
    "ControlGains", "NftsmController", "ReferenceSignal", "sliding_surface",
    "Disturbance", "EulerAngles", "QuadParams", "PayloadParams",
    "SystemParams", "SystemState", "compose_system_params",
    "rotation_matrix", "system_derivative",
]
