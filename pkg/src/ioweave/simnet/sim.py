"""Seeded discrete-event simulation of monitored node programs, replay of
the resulting logs against a model, and global property checks."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional

from ..errors import MonitorViolation, StepLimit
from ..kernel import SKIP, EventSystem
from ..monitor import Backend, Monitor
from ..values import UNIT, Action, Event, Indexed, event_from_json, to_json
from .faults import FaultPlan
from .worlds import WORLDS, World

MAX_STEPS = 1_000_000


@dataclass(frozen=True)
class Record:
    step: int
    node: Any
    kind: str  # io | ghost | env | deny
    action: Optional[Action]
    event: Optional[Event]

    def to_json(self) -> dict:
        return {"step": self.step, "node": to_json(self.node), "kind": self.kind,
                "action": None if self.action is None else to_json(self.action),
                "event": None if self.event is None else to_json(self.event)}


@dataclass
class TraceLog:
    records: list = field(default_factory=list)

    def append(self, r: Record) -> None:
        self.records.append(r)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def global_trace(self) -> tuple:
        """Ghost-inclusive sequence of global events."""
        return tuple(r.event for r in self.records if r.event is not None)

    def node_trace(self, node) -> tuple:
        return tuple(r.action for r in self.records
                     if r.node == node and r.kind in ("io", "ghost"))

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_json(), sort_keys=True, ensure_ascii=False) + "\n"
                       for r in self.records)


@dataclass
class SimResult:
    log: TraceLog
    counts: dict
    monitor_verdicts: dict
    property_violations: list
    violation: Optional[MonitorViolation] = None
    denials: int = 0
    steps: int = 0
    world: Optional[World] = None
    monitors: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.violation is None and self.denials == 0 and not self.property_violations

    def summary(self) -> dict:
        return {"steps": self.steps, "violations": self.denials + len(self.property_violations),
                "monitor_denials": self.denials,
                "property_violations": list(self.property_violations),
                **{k: v for k, v in sorted(self.counts.items())}}

    def raise_for_violation(self) -> None:
        if self.violation is not None:
            raise self.violation


def run_sim(scenario: dict, fault_plan: Optional[FaultPlan] = None, seed: int = 0,
            max_steps: Optional[int] = None, strict: bool = True,
            backend: Backend | str = Backend.ES) -> SimResult:
    """Run the scenario's node programs under monitors.

    Each step the scheduler picks a live, unfinished node at random and
    executes its next call. In strict mode a denied call halts the run
    before it takes effect; in audit mode it is performed anyway, counted
    and logged.
    """
    max_steps = int(scenario.get("steps", 1000) if max_steps is None else max_steps)
    if max_steps < 0 or max_steps > MAX_STEPS:
        raise StepLimit(f"step budget must be within 0..{MAX_STEPS}")
    plan = fault_plan if fault_plan is not None else FaultPlan.from_json(scenario.get("faults"))
    rng = random.Random(seed)
    world = WORLDS[scenario["protocol"]](scenario, plan, rng)
    nodes = world.nodes()
    order = list(nodes)
    monitors = {x: Monitor.new(ges, backend=backend) for x, (ges, _p) in nodes.items()}
    for m in monitors.values():
        m.record_requests = False
    programs = {x: prog for x, (_g, prog) in nodes.items()}
    pending: dict = {}
    for x in order:
        try:
            pending[x] = next(programs[x])
        except StopIteration:
            pass
    log = TraceLog()
    history: list = []
    problems: list = []
    violation = None
    denials = 0
    step = 0
    for step in range(max_steps):
        for ev in world.before_step(step):
            log.append(Record(step, None, "env", None, ev))
            history.append(ev)
        runnable = [x for x in order if x in pending and world.alive(x)]
        if not runnable:
            break
        x = runnable[rng.randrange(len(runnable))]
        call = pending[x]
        mon = monitors[x]
        verdict = mon.request(call.bio, call.out)
        if not verdict and strict:
            violation = MonitorViolation(x, Action(call.bio, call.out), verdict.reason.value)
            log.append(Record(step, x, "deny", Action(call.bio, call.out), None))
            denials += 1
            break
        w = UNIT if call.ghost else world.perform(x, call, step)
        if w is not None:
            action = Action(call.bio, call.out, w)
            committed = mon.ghost(call.bio, call.out) if call.ghost else mon.commit(call.bio, call.out, w)
            if committed:
                env = SKIP if call.ghost else world.env_event(x, action)
                event = world.chi_e(Indexed(x, action), env)
                log.append(Record(step, x, "ghost" if call.ghost else "io", action, event))
                history.append(event)
                problems += [f"step {step}: {p}" for p in world.check(x, event, monitors, history)]
            else:
                denials += 1
                log.append(Record(step, x, "deny", action, None))
                if strict:
                    violation = MonitorViolation(x, action, committed.reason.value)
                    break
        try:
            pending[x] = programs[x].send(w)
        except StopIteration:
            del pending[x]
    verdicts = {str(x): {"denials": sum(1 for r in m.log if not r["verdict"].startswith("PERMIT")),
                         "commits": len(m.state.trace)} for x, m in monitors.items()}
    return SimResult(log, dict(world.counts), verdicts, problems, violation, denials,
                     step + 1 if max_steps else 0, world, monitors)


# --------------------------------------------------------------------------
# checking logs


@dataclass(frozen=True)
class ReplayVerdict:
    ok: bool
    index: Optional[int] = None
    event: Any = None
    states: int = 0

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {"status": "PASS" if self.ok else "FAIL", "index": self.index,
                "event": None if self.event is None else to_json(self.event)}


def replay_against_model(log: TraceLog | Iterable, interface: EventSystem,
                         gamma: Optional[Callable] = None) -> ReplayVerdict:
    """Whether the log's global trace runs in ``interface``.

    Nondeterminism is resolved by tracking the set of possible states.
    ``gamma`` optionally maps each logged event before replay. On failure
    the verdict names the first event that cannot be taken.
    """
    trace = log.global_trace() if isinstance(log, TraceLog) else tuple(log)
    states = set(interface.initial)
    for k, e in enumerate(trace):
        if gamma is not None:
            e = gamma(e)
        nxt: set = set()
        for s in states:
            nxt.update(interface.successors(s, e))
        if not nxt:
            return ReplayVerdict(False, k, e, len(states))
        states = nxt
    return ReplayVerdict(True, None, None, len(states))


def check_global(log: TraceLog | Iterable, prop: Callable[[tuple], bool]) -> bool:
    trace = log.global_trace() if isinstance(log, TraceLog) else tuple(log)
    return bool(prop(trace))


def no_fabrication(log: TraceLog, world: World) -> bool:
    """Every delivered message was sent before it was received."""
    sent: dict = {}
    for r in log:
        if r.event is None:
            continue
        tagged = world.channel_key(r.event)
        if tagged is None:
            continue
        kind, key = tagged
        if kind == "send":
            sent[key] = sent.get(key, 0) + 1
        elif sent.get(key, 0) <= 0:
            return False
        elif world.consuming:
            sent[key] -= 1
    return True


def load_log(lines: Iterable[str], types: Iterable[type] = ()) -> list:
    """Global events from a JSON-lines log written by :meth:`TraceLog.to_jsonl`;
    message classes in ``types`` are decoded back into objects."""
    out = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        d = json.loads(line)
        if d.get("event") is not None:
            out.append(event_from_json(d["event"], types))
    return out
