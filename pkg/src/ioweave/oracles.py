"""Randomised instance generators and bounded oracles for the three
compositionality results: composed systems versus composed trace sets,
component models versus their process translation, and processes versus
the heaps of their embedding."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any, Optional

from .canonical import Theorem4Verdict, in_out_drop_process, in_out_drop_typing, theorem4_oracle
from .kernel import (SKIP, EventSystem, SyncMap, compose_parallel, compose_trace_sets,
                     enumerate_traces)
from .process import (INACTIVE, Choice, IOEvent, IOGuardedES, Prefix, Process, Typing,
                      enumerate_process_traces, proc_of_ges)
from .values import Event


@dataclass(frozen=True)
class OracleResult:
    ok: bool
    left: int
    right: int
    witness: Optional[tuple] = None


# --------------------------------------------------------------------------
# composition of event systems


def random_event_system(rng: random.Random, max_states: int = 15,
                        alphabet: tuple = ("a", "b", "c"), name: str = "") -> EventSystem:
    n = rng.randint(1, max_states)
    table: dict = {s: [] for s in range(n)}
    for s in range(n):
        for _ in range(rng.randint(0, 3)):
            table[s].append((Event(rng.choice(alphabet)), rng.randrange(n)))
    init = frozenset(rng.sample(range(n), rng.randint(1, min(2, n))))
    return EventSystem(lambda s: table[s], init, name or f"rand{n}")


def random_sync_map(rng: random.Random, left: tuple = ("a", "b", "c"),
                    right: tuple = ("a", "b", "c"), out: tuple = ("x", "y", "z")) -> SyncMap:
    """A random partial combinator over ``left ∪ {skip}`` × ``right ∪ {skip}``."""
    lhs = [Event(e) for e in left] + [SKIP]
    rhs = [Event(e) for e in right] + [SKIP]
    table = {}
    for e1 in lhs:
        for e2 in rhs:
            if rng.random() < 0.5:
                table[(e1, e2)] = Event(rng.choice(out))
    return SyncMap(lambda e1, e2: table.get((e1, e2)), "chi-rand")


def composition_oracle(es1: EventSystem, es2: EventSystem, chi, depth: int,
                       node_limit: Optional[int] = None) -> OracleResult:
    composed = compose_parallel(es1, es2, chi)
    lhs = enumerate_traces(composed, composed.initial, depth, node_limit)
    rhs = compose_trace_sets(enumerate_traces(es1, es1.initial, depth, node_limit),
                             enumerate_traces(es2, es2.initial, depth, node_limit), chi)
    diff = sorted(lhs ^ rhs, key=len)
    return OracleResult(lhs == rhs, len(lhs), len(rhs), diff[0] if diff else None)


# --------------------------------------------------------------------------
# component models and their process translation


def random_io_guarded(rng: random.Random, n_states: int = 4, n_ops: int = 3,
                      domain: int = 3) -> IOGuardedES:
    """Component model over states ``0..n_states-1`` with random tables.

    Guards read only the state and the output; updates may use the input.
    """
    ops = [f"op{k}" for k in range(n_ops)]
    outs = {b: tuple(range(rng.randint(1, domain))) for b in ops}
    ins = {(b, v): tuple(range(rng.randint(1, domain))) for b in ops for v in outs[b]}
    typing = Typing(outs, lambda b, v: ins[(b, v)])
    events = []
    for b in ops:
        guard_tab = {(s, v): rng.random() < 0.6 for s in range(n_states) for v in outs[b]}
        upd_tab = {(s, v, w): rng.randrange(n_states)
                   for s in range(n_states) for v in outs[b] for w in ins[(b, v)]}
        events.append(IOEvent(
            b, lambda s, b=b: outs[b],
            lambda s, v, w, g=guard_tab: g[(s, v)],
            lambda s, v, w, u=upd_tab: u[(s, v, w)],
            ghost=rng.random() < 0.2))
    return IOGuardedES(tuple(events), rng.randrange(n_states), typing, "rand-ges")


def translation_oracle(ges: IOGuardedES, depth: int,
                       node_limit: Optional[int] = None) -> OracleResult:
    es = ges.as_event_system(stutter=False)
    lhs = enumerate_traces(es, es.initial, depth, node_limit)
    rhs = enumerate_process_traces(proc_of_ges(ges, ges.initial), ges.typing, depth, node_limit)
    diff = sorted(lhs ^ rhs, key=len)
    return OracleResult(lhs == rhs, len(lhs), len(rhs), diff[0] if diff else None)


# --------------------------------------------------------------------------
# finite processes and their canonical heaps


def random_typing(rng: random.Random, domain: int = 3, ops: tuple = ("a", "b")) -> Typing:
    outs = {b: tuple(range(1, rng.randint(1, domain) + 1)) for b in ops}
    ins = {(b, v): tuple(range(1, rng.randint(1, domain) + 1)) for b in ops for v in outs[b]}
    return Typing(outs, lambda b, v: ins[(b, v)])


def random_process(rng: random.Random, typing: Typing, height: int = 3,
                   branching: int = 3) -> Process:
    """Finite process with at most ``height`` prefixes on any path and at
    most ``branching`` alternatives per choice point."""
    if height == 0 or rng.random() < 0.15:
        return INACTIVE
    arms = []
    for _ in range(rng.randint(1, branching)):
        bio = rng.choice(typing.bios)
        v = rng.choice(typing.outputs[bio])
        conts = {w: random_process(rng, typing, height - 1, branching)
                 for w in typing.ty(bio, v)}
        arms.append(Prefix(bio, v, lambda w, c=conts: c[w]))
    proc = arms[-1]
    for arm in reversed(arms[:-1]):
        proc = Choice(arm, proc)
    if rng.random() < 0.2:
        proc = Choice(proc, INACTIVE)
    return proc


def heap_oracle(p: Process, typing: Typing, depth: int, seed: int = 0,
                extra_schedules: int = 2) -> Theorem4Verdict:
    return theorem4_oracle(p, typing, depth, extra_schedules=extra_schedules, seed=seed)


def reference_heap_case() -> tuple[Process, Typing]:
    return in_out_drop_process(), in_out_drop_typing()


def run_random(kind: str, count: int, seed: int = 0, depth: int = 4) -> list[Any]:
    """Run ``count`` random instances of an oracle; results in order."""
    out = []
    for k in range(count):
        rng = random.Random(f"{kind}/{seed}/{k}")
        if kind == "composition":
            es1 = random_event_system(rng, name="es1")
            es2 = random_event_system(rng, name="es2")
            out.append(composition_oracle(es1, es2, random_sync_map(rng), depth))
        elif kind == "translation":
            out.append(translation_oracle(random_io_guarded(rng), depth))
        elif kind == "heap":
            typing = random_typing(rng)
            out.append(heap_oracle(random_process(rng, typing), typing, depth, seed=k))
        else:
            raise ValueError(f"unknown oracle {kind!r}")
    return out
