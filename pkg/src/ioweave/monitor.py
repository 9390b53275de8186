"""Runtime monitors that admit a component's I/O calls only when its model
allows them.

Every call goes through two phases. ``request_output`` asks whether an
operation with a given output may run now; it must be answerable before the
input exists. ``commit`` then records the observed input. Two backends make
the decision:

* ``es`` evaluates the component's guards on its current model state;
* ``heap`` pushes a token through the canonical permission heap of the
  component's process, unfolding only the permissions at the token's place.
  Its input schedule is the witness schedule of the observed trace, so a
  committed input never contradicts a prediction.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from .heap import BOTTOM, ROOT, Heap, Perm, Token, heap_step
from .process import Choice, Prefix, Process, Typing, IOGuardedES, force, proc_of_ges
from .values import UNIT, Action, stable_hash, to_json


class Backend(str, enum.Enum):
    ES = "es"
    HEAP = "heap"


class DenyReason(str, enum.Enum):
    NO_ENABLED_GUARD = "no enabled guard"
    ILL_TYPED_INPUT = "ill-typed input"
    NO_PERMISSION = "no permission at token"


@dataclass(frozen=True)
class Verdict:
    permit: bool
    reason: Optional[DenyReason] = None

    def __bool__(self) -> bool:
        return self.permit

    def __str__(self) -> str:
        return "PERMIT" if self.permit else f"DENY({self.reason.value})"


PERMIT = Verdict(True)


def deny(reason: DenyReason) -> Verdict:
    return Verdict(False, reason)


@dataclass(frozen=True)
class HeapCursor:
    """Token position in the lazily unfolded canonical model."""

    proc: Process
    place: str = ROOT


@dataclass(frozen=True)
class TraceEntry:
    action: Action
    ghost: bool = False


@dataclass(frozen=True)
class MonitorState:
    model: IOGuardedES
    current: Any
    typing: Typing
    backend: Backend
    trace: tuple = ()
    cursor: Optional[HeapCursor] = None

    def state_hash(self) -> str:
        return stable_hash(self.current)


def monitor_new(ges: IOGuardedES, s0: Any = None, typing: Optional[Typing] = None,
                backend: Backend | str = Backend.ES) -> MonitorState:
    """Monitor for ``ges`` starting at ``s0`` (default: its initial state)."""
    s0 = ges.initial if s0 is None else s0
    typing = typing or ges.typing
    backend = Backend(backend)
    ges.check_guards(s0)
    cursor = HeapCursor(proc_of_ges(ges, s0)) if backend is Backend.HEAP else None
    return MonitorState(ges, s0, typing, backend, (), cursor)


# --------------------------------------------------------------------------
# heap backend helpers


def _frontier(p: Process, place: str) -> list:
    """``(prefix, source place, target place)`` for the permissions at
    ``place``, placed exactly as the canonical model places them."""
    out = []
    stack = [(p, place)]
    while stack:
        node, cp = stack.pop()
        q = force(node)
        if isinstance(q, Prefix):
            out.append((q, cp + "L"))
        elif isinstance(q, Choice):
            stack.append((q.right, cp + "R"))
            stack.append((q.left, cp + "L"))
    return out


def _local_heap(cur: HeapCursor, typing: Typing, predicted: dict) -> tuple[Heap, dict]:
    """Token plus the permissions at its place. ``predicted`` maps
    ``(bio, out)`` to the input the schedule fixes for this step."""
    chunks: list = [Token(cur.place)]
    by_dst = {}
    for q, dst in _frontier(cur.proc, cur.place):
        try:
            w = predicted.get((q.bio, q.out), typing.ty(q.bio, q.out)[0])
        except (KeyError, ValueError):
            continue
        chunks.append(Perm(q.bio, cur.place, q.out, w, dst))
        by_dst[dst] = q
    return Heap(chunks), by_dst


def _heap_outputs(cur: HeapCursor, typing: Typing) -> set:
    h, _ = _local_heap(cur, typing, {})
    return {(c.bio, c.out) for c in h.perms_from(cur.place)}


# --------------------------------------------------------------------------
# operations


def permitted_outputs(m: MonitorState) -> set:
    """All ``(bio, v)`` pairs the monitor would currently permit."""
    if m.backend is Backend.HEAP:
        return _heap_outputs(m.cursor, m.typing)
    return set(m.model.enabled_outputs(m.current))


def request_output(m: MonitorState, bio: str, v: Any = UNIT) -> Verdict:
    if m.backend is Backend.HEAP:
        ok = (bio, v) in _heap_outputs(m.cursor, m.typing)
        return PERMIT if ok else deny(DenyReason.NO_PERMISSION)
    m.model.check_guards(m.current)
    return PERMIT if m.model.guard_holds(m.current, bio, v) else deny(DenyReason.NO_ENABLED_GUARD)


def _commit(m: MonitorState, bio: str, v: Any, w: Any, ghost: bool) -> tuple[Verdict, MonitorState]:
    verdict = request_output(m, bio, v)
    if not verdict:
        return verdict, m
    if not m.typing.well_typed(Action(bio, v, w)):
        return deny(DenyReason.ILL_TYPED_INPUT), m
    ev = m.model.event(bio)
    nxt = ev.update(m.current, v, w)
    cursor = m.cursor
    if m.backend is Backend.HEAP:
        h, by_dst = _local_heap(cursor, m.typing, {(bio, v): w})
        succ = [s for s in heap_step(h, Action(bio, v, w), m.typing) if s is not BOTTOM]
        if not succ:
            return deny(DenyReason.NO_PERMISSION), m
        place = min(succ[0].tokens())
        cursor = HeapCursor(by_dst[place].after(w), place)
    entry = TraceEntry(Action(bio, v, w), ghost)
    return PERMIT, replace(m, current=nxt, trace=m.trace + (entry,), cursor=cursor)


def commit(m: MonitorState, bio: str, v: Any = UNIT, w: Any = UNIT) -> tuple[Verdict, MonitorState]:
    """Record an I/O call with output ``v`` that returned ``w``."""
    return _commit(m, bio, v, w, ghost=False)


def commit_ghost(m: MonitorState, event: str, params: Any = UNIT) -> tuple[Verdict, MonitorState]:
    """Record an internal step, modelled as a ghost action without input."""
    ev = m.model.event(event)
    if ev is None or not ev.ghost:
        return deny(DenyReason.NO_ENABLED_GUARD if m.backend is Backend.ES
                    else DenyReason.NO_PERMISSION), m
    return _commit(m, event, params, UNIT, ghost=True)


def observed_trace(m: MonitorState, include_ghost: bool = True) -> tuple:
    return tuple(e.action for e in m.trace if include_ghost or not e.ghost)


# --------------------------------------------------------------------------
# stateful wrapper with an event log


@dataclass
class Monitor:
    """Mutable monitor that also keeps the JSON-lines event log."""

    state: MonitorState
    log: list = field(default_factory=list)
    record_requests: bool = True

    @classmethod
    def new(cls, ges: IOGuardedES, s0: Any = None, typing: Optional[Typing] = None,
            backend: Backend | str = Backend.ES) -> "Monitor":
        return cls(monitor_new(ges, s0, typing, backend))

    def _record(self, kind: str, bio: str, v: Any, w: Any, verdict: Verdict) -> None:
        self.log.append({"seq": len(self.log), "kind": kind, "bio": bio, "out": to_json(v),
                         "in": to_json(w), "verdict": str(verdict),
                         "state_hash": self.state.state_hash()})

    def request(self, bio: str, v: Any = UNIT) -> Verdict:
        verdict = request_output(self.state, bio, v)
        if self.record_requests:
            self._record("request", bio, v, None, verdict)
        return verdict

    def commit(self, bio: str, v: Any = UNIT, w: Any = UNIT) -> Verdict:
        verdict, self.state = commit(self.state, bio, v, w)
        self._record("commit", bio, v, w, verdict)
        return verdict

    def ghost(self, event: str, params: Any = UNIT) -> Verdict:
        verdict, self.state = commit_ghost(self.state, event, params)
        self._record("ghost", event, params, None, verdict)
        return verdict

    @property
    def current(self) -> Any:
        return self.state.current

    def trace(self, include_ghost: bool = True) -> tuple:
        return observed_trace(self.state, include_ghost)

    def jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.log)
