"""Executable event-system models of distributed protocols, their I/O
specifications as heaps of permissions, runtime monitors that enforce them,
and a seeded network simulator to exercise monitored node programs."""

from .kernel import (EventSystem, GuardedEvent, GuardedEventSystem, SyncMap, check_refinement,
                     compose_parallel, compose_trace_sets, enumerate_traces, interleave,
                     interleave_family)
from .monitor import Backend, Monitor
from .process import IOEvent, IOGuardedES, Typing, proc_of_ges
from .values import SKIP, UNIT, Action, Event, Indexed

__version__ = "0.1.0"

__all__ = [
    "Action", "Backend", "Event", "EventSystem", "GuardedEvent", "GuardedEventSystem",
    "IOEvent", "IOGuardedES", "Indexed", "Monitor", "SKIP", "SyncMap", "Typing", "UNIT",
    "check_refinement", "compose_parallel", "compose_trace_sets", "enumerate_traces",
    "interleave", "interleave_family", "proc_of_ges",
]
