"""Canonical heap models of processes under input schedules, the witness
schedule read off a trace, and a bounded trace-equivalence oracle relating
a process to the heaps of its embedding.

Places are strings over ``"L"``/``"R"``: a model is the process tree
projected onto the inputs an input schedule prescribes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .assertion import Embedding, assert_sat
from .errors import BoundExceeded
from .heap import BOTTOM, EMPTY, ROOT, Heap, Perm, Place, Token, heap_step
from .kernel import Status
from .process import (INACTIVE, Choice, Prefix, Process, Typing,
                      enumerate_process_traces, force, prefix)
from .values import UNIT, Action, canonical, stable_hash

Schedule = Callable[[tuple, str, Any], Any]


def pm(p: Process, rho: Schedule, tau: tuple, ppos: Place, cpos: Place, pos: Place) -> Heap:
    """The permission (if any) sitting at relative position ``pos``."""
    q = force(p)
    if isinstance(q, Prefix):
        w = rho(tau, q.bio, q.out)
        if pos == "":
            return Heap([Perm(q.bio, ppos, q.out, w, cpos + "L")])
        if pos[0] == "L":
            nxt = cpos + "L"
            return pm(q.after(w), rho, tau + (Action(q.bio, q.out, w),), nxt, nxt, pos[1:])
        return EMPTY
    if isinstance(q, Choice) and pos:
        if pos[0] == "L":
            return pm(q.left, rho, tau, ppos, cpos + "L", pos[1:])
        return pm(q.right, rho, tau, ppos, cpos + "R", pos[1:])
    return EMPTY


def default_bound(depth: int) -> int:
    return 4 * depth + 4


def gmod(p: Process, rho: Schedule, tau: tuple = (), ppos: Place = ROOT, cpos: Place = ROOT,
         bound: int = 64, action_depth: Optional[int] = None) -> Heap:
    """Sum of ``pm`` over all positions below ``cpos``.

    Computed by structural traversal. ``bound`` limits the absolute position
    length and raises :class:`BoundExceeded` when a live node lies beyond
    it. ``action_depth`` optionally stops after that many prefixes on a
    path; traces no longer than it are unaffected.
    """
    chunks: list = []
    stack = [(p, tau, ppos, cpos, 0)]
    while stack:
        node, tr, pp, cp, n = stack.pop()
        q = force(node)
        if q is INACTIVE:
            continue
        if len(cp) > bound:
            raise BoundExceeded(f"process deeper than position bound {bound}")
        if isinstance(q, Prefix):
            w = rho(tr, q.bio, q.out)
            nxt = cp + "L"
            chunks.append(Perm(q.bio, pp, q.out, w, nxt))
            if action_depth is None or n + 1 < action_depth:
                stack.append((q.after(w), tr + (Action(q.bio, q.out, w),), nxt, nxt, n + 1))
        elif isinstance(q, Choice):
            stack.append((q.right, tr, pp, cp + "R", n))
            stack.append((q.left, tr, pp, cp + "L", n))
    return Heap(chunks)


def cmod(p: Process, rho: Schedule, bound: int = 64, action_depth: Optional[int] = None) -> Heap:
    return gmod(p, rho, (), ROOT, ROOT, bound, action_depth)


def cmod_tok(p: Process, rho: Schedule, bound: int = 64,
             action_depth: Optional[int] = None) -> Heap:
    return cmod(p, rho, bound, action_depth).add(Token(ROOT))


def rho_wit(tau: tuple, typing: Typing) -> Schedule:
    """Schedule answering with the input that follows the query prefix in
    ``tau``; any other query gets the least well-typed input."""
    tau = tuple(tau)

    def schedule(query: tuple, bio: str, v: Any) -> Any:
        k = len(query)
        if k < len(tau) and tuple(query) == tau[:k]:
            a = tau[k]
            if a.bio == bio and a.out == v:
                return a.inp
        return typing.ty(bio, v)[0]

    return schedule


def random_schedule(typing: Typing, seed: int) -> Schedule:
    """A well-typed schedule fixing pseudo-random inputs per query."""

    def schedule(query: tuple, bio: str, v: Any) -> Any:
        ws = typing.ty(bio, v)
        rng = random.Random(f"{seed}/{stable_hash([list(query), bio, v])}")
        return ws[rng.randrange(len(ws))]

    return schedule


def _run(h: Heap, tau: tuple, typing: Typing) -> set:
    states = {h}
    for a in tau:
        nxt: set = set()
        for s in states:
            nxt |= heap_step(s, a, typing)
        states = nxt
        if not states:
            break
    return states


@dataclass(frozen=True)
class Theorem4Verdict:
    status: Status
    proc_traces: int
    can_traces: int
    missing: tuple = ()
    spurious: tuple = ()
    prop3: bool = True
    schedules_checked: int = 0
    schedule_failures: tuple = field(default=())

    @property
    def ok(self) -> bool:
        return self.status is Status.PASS


def canonical_traces(p: Process, typing: Typing, depth: int, exhaustive: bool = False,
                     bound: Optional[int] = None) -> frozenset:
    """Traces ``tau`` with ``|tau| <= depth`` that the canonical model for
    the witness schedule of ``tau`` executes without reaching chaos.

    The set is prefix-closed, so it is built by extending members one action
    at a time. Candidate extensions are the operations enabled at the token
    with every well-typed input, or every well-typed action when
    ``exhaustive`` is set.
    """
    bound = default_bound(depth) if bound is None else bound
    found = {()}
    frontier = [()]
    for _ in range(depth):
        nxt = []
        for tau in frontier:
            if exhaustive:
                candidates = typing.actions()
            else:
                base = cmod_tok(p, rho_wit(tau, typing), bound, len(tau) + 1)
                candidates = set()
                for s in _run(base, tau, typing):
                    if s is BOTTOM:
                        continue
                    for t in s.tokens():
                        for perm in s.perms_from(t):
                            for w in typing.ty(perm.bio, perm.out):
                                candidates.add(Action(perm.bio, perm.out, w))
            for a in canonical(candidates):
                ext = tau + (a,)
                h = cmod_tok(p, rho_wit(ext, typing), bound, len(ext))
                if any(s is not BOTTOM for s in _run(h, ext, typing)) and ext not in found:
                    found.add(ext)
                    nxt.append(ext)
        frontier = nxt
    return frozenset(found)


def theorem4_oracle(p: Process, typing: Typing, depth: int, extra_schedules: int = 0,
                    seed: int = 0, exhaustive: bool = False,
                    bound: Optional[int] = None) -> Theorem4Verdict:
    """Bounded check that the process traces equal the canonical-model traces.

    Also checks that the canonical model satisfies the embedding (at the
    witness schedule of every longest process trace and at each sampled
    schedule) and that every process trace runs on the tokenised canonical
    model of each sampled schedule.
    """
    bound = default_bound(depth) if bound is None else bound
    t_proc = enumerate_process_traces(p, typing, depth)
    t_can = canonical_traces(p, typing, depth, exhaustive, bound)
    missing = tuple(sorted(t_proc - t_can, key=len))
    spurious = tuple(sorted(t_can - t_proc, key=len))

    embed = Embedding(typing)
    root = embed(p, ROOT)
    schedules = [rho_wit(tau, typing) for tau in sorted(t_proc, key=repr)
                 if len(tau) == max(map(len, t_proc))][:8]
    sampled = [random_schedule(typing, seed * 7919 + k) for k in range(extra_schedules)]
    prop3 = True
    for rho in schedules + sampled:
        if not assert_sat(cmod(p, rho, bound), root, typing):
            prop3 = False
            break
    failures = []
    for k, rho in enumerate(sampled):
        h = cmod_tok(p, rho, bound, depth)
        for tau in sorted(t_proc, key=repr):
            if not _run(h, tau, typing):
                failures.append((k, tau))
                break
    ok = not missing and not spurious and prop3 and not failures
    return Theorem4Verdict(Status.PASS if ok else Status.FAIL, len(t_proc), len(t_can),
                           missing, spurious, prop3, len(sampled), tuple(failures))


# --------------------------------------------------------------------------
# a small reference process with nested choices


def in_out_drop_process() -> Process:
    """``in(x).Q(x) + fail.Null`` with
    ``Q(x) = out(x).Null + (in(y).out(x+y).Null + drop.Null)``."""

    def q(x):
        return Choice(prefix("out", x),
                      Choice(prefix("in", UNIT, lambda y: prefix("out", x + y)),
                             prefix("drop")))

    return Choice(prefix("in", UNIT, q), prefix("fail"))


def in_out_drop_typing(max_input: int = 3) -> Typing:
    ins = tuple(range(1, max_input + 1))
    return Typing({"in": (UNIT,), "out": tuple(range(1, 2 * max_input + 1)),
                   "fail": (UNIT,), "drop": (UNIT,)},
                  lambda bio, v: ins if bio == "in" else (UNIT,))


def length_schedule(typing: Typing) -> Schedule:
    """Input ``|tau| + 1`` where well-typed, otherwise the least input."""

    def schedule(query: tuple, bio: str, v: Any) -> Any:
        ws = typing.ty(bio, v)
        w = len(query) + 1
        return w if w in ws else ws[0]

    return schedule

