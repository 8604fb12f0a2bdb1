"""Simulator and verifier for elastic flows of closed curves in R^n."""
from curveflow.config import FlowConfig, parse_config
from curveflow.energies import EnergyBreakdown, energies
from curveflow.errors import ConfigError, CurveflowError, DegenerateGrid, IoError, NonFinite
from curveflow.flow import FlowVariant, Integrator, StepPolicy, Termination, Trajectory, evolve, rhs, stable_dt, step
from curveflow.grid import CurveState, GeometryCache, dx, ds, geometry, normal_project
from curveflow.presets import PRESETS, make_preset

__all__ = [
    "ConfigError", "CurveState", "CurveflowError", "DegenerateGrid", "EnergyBreakdown", "FlowConfig", "FlowVariant",
    "GeometryCache", "Integrator", "IoError", "NonFinite", "PRESETS", "StepPolicy", "Termination",
    "Trajectory", "ds", "dx", "energies", "evolve", "geometry", "make_preset", "normal_project", "parse_config", "rhs",
    "stable_dt", "step",
]
