"""Sequential process calculus over I/O actions.

Processes are ``Inactive``, an I/O prefix ``bio(v, z).P`` whose continuation
is a function of the received input, or a binary ``Choice``. Continuations
are unfolded lazily and memoised per input, which is how non-terminating
(co-recursive) processes are represented.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Optional

from .errors import BudgetExceeded, GuardDependsOnInput
from .kernel import EventSystem
from .values import UNIT, Action, canonical, sort_key


@dataclass(frozen=True, eq=False)
class Typing:
    """Finite typing discipline for I/O operations.

    ``outputs`` lists, per I/O operation, the output values in the configured
    domain; ``inputs(bio, v)`` returns the non-empty set of accepted inputs.
    """

    outputs: Mapping[str, tuple]
    inputs: Callable[[str, Any], Iterable]
    _memo: dict = field(default_factory=dict, repr=False)

    def ty(self, bio: str, v: Any) -> tuple:
        key = (bio, v)
        try:
            return self._memo[key]
        except KeyError:
            pass
        ws = tuple(canonical(set(self.inputs(bio, v))))
        if not ws:
            raise ValueError(f"empty input type for {bio}({v!r})")
        self._memo[key] = ws
        return ws

    @property
    def bios(self) -> tuple:
        return tuple(sorted(self.outputs))

    def well_typed(self, a: Action) -> bool:
        return a.bio in self.outputs and a.inp in self.ty(a.bio, a.out)

    def in_domain(self, bio: str, v: Any) -> bool:
        return bio in self.outputs and v in self.outputs[bio]

    def actions(self) -> list[Action]:
        """Every well-typed action over the configured domain."""
        return [Action(b, v, w) for b in self.bios
                for v in canonical(self.outputs[b]) for w in self.ty(b, v)]

    @classmethod
    def from_table(cls, table: Mapping[tuple, Iterable]) -> "Typing":
        outs: dict[str, list] = {}
        for (b, v) in table:
            outs.setdefault(b, []).append(v)
        frozen = {k: frozenset(v) for k, v in table.items()}
        return cls({b: tuple(canonical(vs)) for b, vs in outs.items()},
                   lambda b, v: frozen[(b, v)])


class Process:
    __slots__ = ()


class _Inactive(Process):
    __slots__ = ()

    def __repr__(self) -> str:
        return "Null"


INACTIVE = _Inactive()


class Prefix(Process):
    """``bio(out, z).cont(z)``; ``cont`` is called at most once per input."""

    __slots__ = ("bio", "out", "_cont", "_memo", "_lock")

    def __init__(self, bio: str, out: Any, cont: Callable[[Any], Process]):
        self.bio = bio
        self.out = out
        self._cont = cont
        self._memo: dict = {}
        self._lock = threading.Lock()

    def after(self, w: Any) -> Process:
        try:
            return self._memo[w]
        except KeyError:
            pass
        with self._lock:
            if w not in self._memo:
                self._memo[w] = self._cont(w)
            return self._memo[w]

    def __repr__(self) -> str:
        return f"{self.bio}({self.out!r},z).…"


class Choice(Process):
    __slots__ = ("left", "right")

    def __init__(self, left: Process, right: Process):
        self.left = left
        self.right = right

    def __repr__(self) -> str:
        return f"({self.left!r} ⊕ {self.right!r})"


def prefix(bio: str, out: Any = UNIT, cont: Optional[Callable[[Any], Process]] = None) -> Prefix:
    return Prefix(bio, out, cont if cont is not None else (lambda _w: INACTIVE))


def finite_choice(values: Iterable, body: Callable[[Any], Process]) -> Process:
    """Right fold of ``Choice`` over ``values`` in canonical order."""
    vs = canonical(set(values))
    acc: Process = INACTIVE
    for v in reversed(vs):
        acc = Choice(body(v), acc)
    return acc


def process_successors(p: Process, typing: Typing) -> list[tuple[Action, Process]]:
    out: list[tuple[Action, Process]] = []
    seen: set = set()
    stack = [p]
    while stack:
        q = force(stack.pop())
        if isinstance(q, Prefix):
            for w in typing.ty(q.bio, q.out):
                succ = q.after(w)
                key = (Action(q.bio, q.out, w), id(succ))
                if key not in seen:
                    seen.add(key)
                    out.append((Action(q.bio, q.out, w), succ))
        elif isinstance(q, Choice):
            stack.append(q.right)
            stack.append(q.left)
    out.sort(key=lambda pair: sort_key(pair[0]))
    return out


def enumerate_process_traces(p: Process, typing: Typing, depth: int,
                             node_limit: Optional[int] = None) -> frozenset:
    level: dict[tuple, dict[int, Process]] = {(): {id(p): p}}
    result: set[tuple] = {()}
    for _ in range(depth):
        nxt: dict[tuple, dict[int, Process]] = {}
        for tr, procs in level.items():
            for q in procs.values():
                for a, q2 in process_successors(q, typing):
                    nxt.setdefault(tr + (a,), {})[id(q2)] = q2
            if node_limit is not None and len(result) + len(nxt) > node_limit:
                raise BudgetExceeded(f"more than {node_limit} traces")
        result.update(nxt)
        level = nxt
    return frozenset(result)


# --------------------------------------------------------------------------
# I/O-guarded event systems


@dataclass(frozen=True)
class EventText:
    """Symbolic rendering hints for one event: names bound to the output
    and the input, the guard over ``s`` and the state update."""

    outputs: tuple = ()
    input: Optional[str] = None
    guard: str = "true"
    update: str = "s"


@dataclass(frozen=True)
class IOEvent:
    """One I/O operation of a component model.

    ``outputs(s)`` enumerates candidate output values, ``guard(s, v, w)``
    must not depend on the input ``w`` and ``update(s, v, w)`` returns the
    successor state. Ghost events model internal steps.
    """

    bio: str
    outputs: Callable[[Any], Iterable]
    guard: Callable[[Any, Any, Any], bool]
    update: Callable[[Any, Any, Any], Any]
    ghost: bool = False
    text: Optional[EventText] = field(default=None, compare=False)


@dataclass(frozen=True, eq=False)
class IOGuardedES:
    events: tuple[IOEvent, ...]
    initial: Any
    typing: Typing
    name: str = ""
    _checked: set = field(default_factory=set, repr=False)

    def __post_init__(self):
        bios = [e.bio for e in self.events]
        if len(set(bios)) != len(bios):
            raise ValueError("duplicate I/O operation in component model")

    @property
    def ghost_bios(self) -> frozenset:
        return frozenset(e.bio for e in self.events if e.ghost)

    def event(self, bio: str) -> Optional[IOEvent]:
        for e in self.events:
            if e.bio == bio:
                return e
        return None

    def check_guards(self, s: Any) -> None:
        """Raise if some guard at ``s`` distinguishes two well-typed inputs."""
        if s in self._checked:
            return
        for ev in self.events:
            for v in ev.outputs(s):
                results = {bool(ev.guard(s, v, w)) for w in self.typing.ty(ev.bio, v)}
                if len(results) > 1:
                    raise GuardDependsOnInput(f"{ev.bio}({v!r}) at {s!r}")
        self._checked.add(s)

    def guard_holds(self, s: Any, bio: str, v: Any) -> bool:
        ev = self.event(bio)
        if ev is None or not self.typing.in_domain(bio, v):
            return False
        w0 = self.typing.ty(bio, v)[0]
        return bool(ev.guard(s, v, w0))

    def enabled_outputs(self, s: Any) -> list[tuple[str, Any]]:
        self.check_guards(s)
        out = []
        for ev in self.events:
            for v in canonical(set(ev.outputs(s))):
                if self.guard_holds(s, ev.bio, v):
                    out.append((ev.bio, v))
        return out

    def transitions(self, s: Any):
        for bio, v in self.enabled_outputs(s):
            ev = self.event(bio)
            for w in self.typing.ty(bio, v):
                yield Action(bio, v, w), ev.update(s, v, w)

    def as_event_system(self, stutter: bool = True) -> EventSystem:
        return EventSystem(self.transitions, frozenset([self.initial]), self.name, stutter)


class Deferred(Process):
    """A process computed on first use; see :func:`force`."""

    __slots__ = ("_thunk", "_value", "_lock", "label")

    def __init__(self, thunk: Callable[[], Process], label: str = ""):
        self._thunk = thunk
        self._value: Optional[Process] = None
        self._lock = threading.Lock()
        self.label = label

    def __repr__(self) -> str:
        return self.label or "Deferred(…)"


def force(p: Process) -> Process:
    """Unfold deferred nodes until a concrete constructor is exposed."""
    while isinstance(p, Deferred):
        if p._value is None:
            with p._lock:
                if p._value is None:
                    p._value = p._thunk()
        p = p._value
    return p


def proc_of_ges(ges: IOGuardedES, s: Any, _cache: Optional[dict] = None) -> Process:
    """Translate a component model in state ``s`` into a process.

    Only output pairs with a satisfiable guard are folded into the choice;
    the others would contribute ``Null`` branches.
    """
    cache = {} if _cache is None else _cache
    if s in cache:
        return cache[s]

    def unfold() -> Process:
        pairs = ges.enabled_outputs(s)

        def branch(i: int) -> Process:
            bio, v = pairs[i]
            ev = ges.event(bio)
            return Prefix(bio, v, lambda w: proc_of_ges(ges, ev.update(s, v, w), cache))

        return finite_choice(range(len(pairs)), branch)

    node = Deferred(unfold, f"proc({ges.name}, {s!r})")
    cache[s] = node
    return node
