"""Seeded agent-based simulator for camera-triggered contact tracing.

Cameras report social-distancing violations; each violation triggers a scan
of the base-station cells behind that camera, quarantine of registered
patients found there, or self-isolation notices around people whose wearable
shows persistent high symptoms.
"""

from ._accel import BACKEND
from .config import PRESETS, ConfigError, SimConfig, build_config, preset
from .orchestrator import EventLedger, Metrics, Simulation, run_scenario

__all__ = [
    "BACKEND",
    "PRESETS",
    "ConfigError",
    "EventLedger",
    "Metrics",
    "SimConfig",
    "Simulation",
    "build_config",
    "preset",
    "run_scenario",
]

__version__ = "0.1.0"
