"""Single-threaded simulation of monitored node programs over lossy or
FIFO channels with scripted crashes."""

from .faults import FaultPlan
from .sim import TraceLog, check_global, no_fabrication, replay_against_model, run_sim

__all__ = ["FaultPlan", "TraceLog", "check_global", "no_fabrication", "replay_against_model",
           "run_sim"]
