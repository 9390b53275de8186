"""Event systems, bounded trace enumeration, forward-simulation refinement
checking and synchronised parallel composition.

States and events are arbitrary hashable values; every set that is iterated
is first sorted with :func:`ioweave.values.sort_key` so results (and
counterexamples in particular) are reproducible.
"""

from __future__ import annotations

import enum
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Mapping, Optional

from .errors import BudgetExceeded
from .values import SKIP, Event, Indexed, canonical, sort_key

State = Hashable
Trace = tuple

DEFAULT_NODE_LIMIT = 1_000_000


@dataclass(frozen=True, eq=False)
class EventSystem:
    """A labelled transition system with a set of initial states.

    ``transitions(s)`` yields the non-stuttering ``(event, successor)`` pairs;
    when ``stutter`` is set, the ``skip`` self-loop is added at every state.
    """

    transitions: Callable[[State], Iterable[tuple[Any, State]]]
    initial: frozenset
    name: str = ""
    stutter: bool = True
    fire: Optional[Callable[[State, Any], Iterable[State]]] = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def step(self, s: State) -> list[tuple[Any, State]]:
        try:
            return self._cache[s]
        except KeyError:
            pass
        succ = set(self.transitions(s))
        if self.stutter:
            succ.add((SKIP, s))
        out = _sorted_pairs(succ)
        self._cache[s] = out
        return out

    def enabled(self, s: State) -> list:
        return canonical({e for e, _ in self.step(s)})

    def with_initial(self, initial: Iterable[State]) -> "EventSystem":
        return EventSystem(self.transitions, frozenset(initial), self.name, self.stutter,
                           self.fire)

    def successors(self, s: State, e: Any) -> list[State]:
        """States reached from ``s`` by event ``e``."""
        if e == SKIP and self.stutter:
            return [s]
        if self.fire is not None:
            return list(self.fire(s, e))
        return [t for e2, t in self.step(s) if e2 == e]


def _sorted_pairs(pairs: set) -> list:
    """Canonical order of ``(event, state)`` pairs; states are only compared
    when events tie, which keeps sorting cheap for large states."""
    keyed = sorted(((sort_key(e), e, t) for e, t in pairs), key=lambda x: x[0])
    out = []
    k = 0
    while k < len(keyed):
        j = k + 1
        while j < len(keyed) and keyed[j][0] == keyed[k][0]:
            j += 1
        group = [(e, t) for _k, e, t in keyed[k:j]]
        if len(group) > 1:
            group.sort(key=lambda p: sort_key(p[1]))
        out.extend(group)
        k = j
    return out


@dataclass(frozen=True)
class GuardedEvent:
    """A parameterised event with guard and update.

    ``params`` is either a finite iterable of parameter tuples or a function
    from the current state to one (useful when the domain depends on the
    state, e.g. messages currently known to an attacker).
    """

    name: str
    params: Any
    guard: Callable[..., bool]
    update: Callable[..., State]

    def instances(self, s: State) -> Iterable[tuple]:
        ps = self.params(s) if callable(self.params) else self.params
        return ps


@dataclass(frozen=True, eq=False)
class GuardedEventSystem:
    events: tuple[GuardedEvent, ...]
    initial: frozenset
    name: str = ""

    def transitions(self, s: State):
        for ev in self.events:
            for p in ev.instances(s):
                if ev.guard(s, *p):
                    yield Event(ev.name, tuple(p)), ev.update(s, *p)

    def fire(self, s: State, e: Any) -> Iterable[State]:
        """Successors under one given event, without enumerating the others."""
        if not isinstance(e, Event):
            return
        for ev in self.events:
            if ev.name != e.name:
                continue
            if any(tuple(p) == e.params for p in ev.instances(s)) and ev.guard(s, *e.params):
                yield ev.update(s, *e.params)

    def as_event_system(self) -> EventSystem:
        return EventSystem(self.transitions, frozenset(self.initial), self.name, fire=self.fire)


@dataclass(frozen=True)
class TraceProperty:
    accepts: Callable[[Trace], bool]
    name: str = "P"

    def __call__(self, trace: Trace) -> bool:
        return bool(self.accepts(tuple(trace)))


ALL_TRACES = TraceProperty(lambda t: True, "all")


class SyncMap:
    """Partial event combinator for parallel composition.

    The stuttering pair always combines to ``skip`` so the composed system
    keeps its stutter self-loops.
    """

    def __init__(self, combine: Callable[[Any, Any], Optional[Any]], name: str = "chi"):
        self._combine = combine
        self.name = name

    def __call__(self, e1, e2):
        if e1 == SKIP and e2 == SKIP:
            return SKIP
        return self._combine(e1, e2)


def _interleave(e1, e2):
    if e2 == SKIP:
        return e1
    if e1 == SKIP:
        return e2
    return None


CHI_INTERLEAVE = SyncMap(_interleave, "chi_I")


# --------------------------------------------------------------------------
# traces


def enumerate_traces(es: EventSystem, init: Iterable[State], depth: int,
                     node_limit: Optional[int] = None) -> frozenset:
    """All traces of length at most ``depth`` starting in ``init``.

    Raises :class:`BudgetExceeded` once more than ``node_limit`` traces
    have been collected.
    """
    init = frozenset(init)
    if not init:
        return frozenset()
    level: dict[Trace, set] = {(): set(init)}
    result: set[Trace] = {()}
    for _ in range(depth):
        nxt: dict[Trace, set] = defaultdict(set)
        for tr, states in level.items():
            for s in states:
                for e, t in es.step(s):
                    nxt[tr + (e,)].add(t)
            if node_limit is not None and len(result) + len(nxt) > node_limit:
                raise BudgetExceeded(f"more than {node_limit} traces")
        result.update(nxt)
        level = nxt
    return frozenset(result)


@dataclass(frozen=True)
class SatResult:
    holds: bool
    counterexample: Optional[Trace] = None

    def __bool__(self) -> bool:
        return self.holds


def satisfies(es: EventSystem, init: Iterable[State], prop: Callable[[Trace], bool],
              depth: int) -> SatResult:
    """Check every trace up to ``depth``; report a shortest violation."""
    traces = enumerate_traces(es, init, depth)
    by_len: dict[int, list] = defaultdict(list)
    for t in traces:
        by_len[len(t)].append(t)
    for n in sorted(by_len):
        bad = [t for t in by_len[n] if not prop(t)]
        if bad:
            return SatResult(False, min(bad, key=sort_key))
    return SatResult(True)


def reachable(es: EventSystem, init: Iterable[State], depth: int,
              node_limit: int = DEFAULT_NODE_LIMIT) -> dict[State, Trace]:
    """States reachable in at most ``depth`` steps, each with a shortest trace."""
    parent: dict[State, Trace] = {}
    frontier = []
    for s in canonical(init):
        if s not in parent:
            parent[s] = ()
            frontier.append(s)
    for _ in range(depth):
        nxt = []
        for s in frontier:
            for e, t in es.step(s):
                if t not in parent:
                    parent[t] = parent[s] + (e,)
                    nxt.append(t)
                    if len(parent) > node_limit:
                        raise BudgetExceeded(f"more than {node_limit} states")
        frontier = nxt
        if not frontier:
            break
    return parent


@dataclass(frozen=True)
class Violation:
    trace: Trace
    state: State
    event: Any = None


def find_violation(es: EventSystem, init: Iterable[State], depth: int, *,
                   state_ok: Optional[Callable[[State], bool]] = None,
                   step_ok: Optional[Callable[[State, Any, State], bool]] = None,
                   node_limit: int = DEFAULT_NODE_LIMIT) -> Optional[Violation]:
    """Breadth-first search for a state or transition breaking an invariant."""
    seen: dict[State, Trace] = {}
    queue = deque()
    for s in canonical(init):
        if s in seen:
            continue
        seen[s] = ()
        if state_ok is not None and not state_ok(s):
            return Violation((), s)
        queue.append(s)
    while queue:
        s = queue.popleft()
        tr = seen[s]
        if len(tr) >= depth:
            continue
        for e, t in es.step(s):
            if step_ok is not None and not step_ok(s, e, t):
                return Violation(tr + (e,), t, e)
            if t in seen:
                continue
            seen[t] = tr + (e,)
            if state_ok is not None and not state_ok(t):
                return Violation(tr + (e,), t, e)
            if len(seen) > node_limit:
                raise BudgetExceeded(f"more than {node_limit} states")
            queue.append(t)
    return None


# --------------------------------------------------------------------------
# refinement


class Status(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    BUDGET_EXCEEDED = "BUDGET_EXCEEDED"


@dataclass(frozen=True)
class RefinementVerdict:
    status: Status
    condition: Optional[int] = None
    abstract_state: Any = None
    concrete_state: Any = None
    event: Any = None
    trace: Trace = ()
    explored: int = 0

    @property
    def ok(self) -> bool:
        return self.status is Status.PASS


def check_refinement(conc: EventSystem, abs_: EventSystem,
                     related: Callable[[State, State], bool],
                     pi: Callable[[Any], Any], depth: int,
                     node_limit: int = DEFAULT_NODE_LIMIT) -> RefinementVerdict:
    """Bounded forward-simulation check of ``conc`` against ``abs_``.

    ``related(abstract, concrete)`` is the simulation relation and ``pi``
    maps concrete events to abstract ones. Condition (2) is checked for every
    related pair reachable within ``depth`` concrete steps.
    """
    seen: dict[tuple, Trace] = {}
    frontier: list[tuple] = []
    abs_init = canonical(abs_.initial)
    for s2 in canonical(conc.initial):
        matches = [s1 for s1 in abs_init if related(s1, s2)]
        if not matches:
            return RefinementVerdict(Status.FAIL, 1, None, s2, None, (), 0)
        for s1 in matches:
            if (s1, s2) not in seen:
                seen[(s1, s2)] = ()
                frontier.append((s1, s2))
    for _ in range(depth):
        nxt = []
        for s1, s2 in frontier:
            tr = seen[(s1, s2)]
            abs_steps = abs_.step(s1)
            for e2, t2 in conc.step(s2):
                e1 = pi(e2)
                matches = [t1 for e, t1 in abs_steps if e == e1 and related(t1, t2)]
                if not matches:
                    return RefinementVerdict(Status.FAIL, 2, s1, s2, e2, tr + (e2,), len(seen))
                for t1 in matches:
                    if (t1, t2) not in seen:
                        seen[(t1, t2)] = tr + (e2,)
                        nxt.append((t1, t2))
                        if len(seen) > node_limit:
                            return RefinementVerdict(Status.BUDGET_EXCEEDED, explored=len(seen))
        frontier = nxt
        if not frontier:
            break
    return RefinementVerdict(Status.PASS, explored=len(seen))


def map_trace(pi: Callable[[Any], Any], tau: Iterable) -> Trace:
    return tuple(pi(e) for e in tau)


def preimage_property(pi: Callable[[Any], Any], prop: Callable[[Trace], bool]) -> TraceProperty:
    name = getattr(prop, "name", "P")
    return TraceProperty(lambda t: prop(map_trace(pi, t)), f"pi^-1({name})")


def identity(x):
    return x


# --------------------------------------------------------------------------
# composition


def compose_parallel(es1: EventSystem, es2: EventSystem, chi: Callable) -> EventSystem:
    """Synchronised product: both components move, events combined by ``chi``."""

    def transitions(s):
        s1, s2 = s
        steps2 = es2.step(s2)
        for e1, t1 in es1.step(s1):
            for e2, t2 in steps2:
                e = chi(e1, e2)
                if e is not None:
                    yield e, (t1, t2)

    init = frozenset((a, b) for a in es1.initial for b in es2.initial)
    name = f"({es1.name} || {es2.name})"
    return EventSystem(transitions, init, name, stutter=False)


def interleave(es1: EventSystem, es2: EventSystem) -> EventSystem:
    return compose_parallel(es1, es2, CHI_INTERLEAVE)


def interleave_family(family: Mapping[Any, EventSystem]) -> EventSystem:
    """Indexed interleaving: exactly one member takes a non-skip step.

    Composite states are tuples ordered by index; member events are wrapped
    as :class:`Indexed` so the union of event sets is disjoint.
    """
    keys = canonical(family)
    members = [family[k] for k in keys]

    def transitions(s):
        yield SKIP, s
        for pos, (k, es) in enumerate(zip(keys, members)):
            for e, t in es.step(s[pos]):
                if e == SKIP:
                    continue
                yield Indexed(k, e), s[:pos] + (t,) + s[pos + 1:]

    init: set = {()}
    for es in members:
        init = {s + (i,) for s in init for i in es.initial}
    return EventSystem(transitions, frozenset(init), "|||" + ",".join(map(str, keys)),
                       stutter=False)


class _Trie:
    __slots__ = ("children", "terminal")

    def __init__(self):
        self.children: dict = {}
        self.terminal = False


def _build_trie(traces: Iterable[Trace]) -> _Trie:
    root = _Trie()
    for t in traces:
        node = root
        for e in t:
            node = node.children.setdefault(e, _Trie())
        node.terminal = True
    return root


def compose_trace_sets(t1: Iterable[Trace], t2: Iterable[Trace], chi: Callable) -> frozenset:
    """Position-wise combination of equal-length traces under ``chi``."""
    r1, r2 = _build_trie(t1), _build_trie(t2)
    out: set[Trace] = set()
    stack = [(r1, r2, ())]
    while stack:
        n1, n2, tr = stack.pop()
        if n1.terminal and n2.terminal:
            out.add(tr)
        for e1, c1 in n1.children.items():
            for e2, c2 in n2.children.items():
                e = chi(e1, e2)
                if e is not None:
                    stack.append((c1, c2, tr + (e,)))
    return frozenset(out)
