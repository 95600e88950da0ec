"""Hierarchical temporal planning for hoist scheduling on electroplating lines."""

from .core import Instance, Plan, validate_plan
from .hierarchy import HitConfig, HitSession, run_hit
from .sim import run_simulation

__version__ = "0.1.0"

__all__ = ["HitConfig", "HitSession", "Instance", "Plan", "run_hit", "run_simulation", "validate_plan"]
