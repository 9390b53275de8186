"""Assertions over I/O heaps, their satisfaction check, and the embedding of
processes into assertions.

Satisfaction is monotone in the heap, so a heap satisfies an assertion iff
it contains one of the assertion's minimal footprints. ``assert_sat``
computes those footprints bottom-up. Assertions may be cyclic (embeddings of
non-terminating processes); cycles are resolved as a greatest fixpoint by
iterating from the "everything satisfies" approximation until stable.
"""

from __future__ import annotations

import threading
from typing import Any, Callable, Iterable, Optional

from .errors import BudgetExceeded
from .heap import EMPTY, Chunk, Heap, Perm, Place, Token
from .process import INACTIVE, Choice, Prefix, Process, Typing, force
from .values import canonical

DEFAULT_BUDGET = 200_000
FRESH_PLACE: Place = "#fresh"


class Assertion:
    __slots__ = ()


class BoolLit(Assertion):
    __slots__ = ("value",)

    def __init__(self, value: bool):
        self.value = bool(value)

    def __repr__(self) -> str:
        return "true" if self.value else "false"


TRUE = BoolLit(True)
FALSE = BoolLit(False)


class ChunkAtom(Assertion):
    __slots__ = ("chunk",)

    def __init__(self, chunk: Chunk):
        self.chunk = chunk

    def __repr__(self) -> str:
        return str(self.chunk)


class Star(Assertion):
    __slots__ = ("left", "right")

    def __init__(self, left: Assertion, right: Assertion):
        self.left = left
        self.right = right

    def __repr__(self) -> str:
        return f"({self.left!r} * {self.right!r})"


class _Binder(Assertion):
    """Quantifier whose body is instantiated lazily, once per value."""

    __slots__ = ("_body", "_memo", "_lock", "label")

    def __init__(self, body: Callable[[Any], Assertion], label: str = ""):
        self._body = body
        self._memo: dict = {}
        self._lock = threading.Lock()
        self.label = label

    def instance(self, x: Any) -> Assertion:
        try:
            return self._memo[x]
        except KeyError:
            pass
        with self._lock:
            if x not in self._memo:
                self._memo[x] = self._body(x)
            return self._memo[x]


class ExistsValue(_Binder):
    __slots__ = ("domain",)

    def __init__(self, domain: Iterable, body: Callable[[Any], Assertion], label: str = ""):
        super().__init__(body, label)
        self.domain = tuple(canonical(set(domain)))

    def __repr__(self) -> str:
        return f"(∃{self.label or 'v'}. …)"


class ExistsPlace(_Binder):
    """Place quantifier; ``candidates=None`` ranges over the places of the
    heap being checked plus one fresh place."""

    __slots__ = ("candidates",)

    def __init__(self, candidates: Optional[Iterable[Place]],
                 body: Callable[[Place], Assertion], label: str = ""):
        super().__init__(body, label)
        self.candidates = None if candidates is None else tuple(canonical(set(candidates)))

    def __repr__(self) -> str:
        return f"(∃{self.label or 't'}. …)"


class LazyAssertion(Assertion):
    __slots__ = ("_thunk", "_value", "_lock", "label")

    def __init__(self, thunk: Callable[[], Assertion], label: str = ""):
        self._thunk = thunk
        self._value: Optional[Assertion] = None
        self._lock = threading.Lock()
        self.label = label

    def __repr__(self) -> str:
        return self.label or "lazy(…)"


def resolve(a: Assertion) -> Assertion:
    while isinstance(a, LazyAssertion):
        if a._value is None:
            with a._lock:
                if a._value is None:
                    a._value = a._thunk()
        a = a._value
    return a


def star_all(parts: Iterable[Assertion]) -> Assertion:
    """Iterated separating conjunction with ``true`` as the unit."""
    acc: Assertion = TRUE
    for p in reversed(list(parts)):
        acc = p if acc is TRUE else Star(p, acc)
    return acc


def forall_star(values: Iterable, body: Callable[[Any], Assertion]) -> Assertion:
    return star_all(body(v) for v in canonical(set(values)))


# --------------------------------------------------------------------------
# satisfaction


def _minimise(fps: Iterable[Heap]) -> frozenset:
    ordered = sorted(set(fps), key=len)
    kept: list[Heap] = []
    for f in ordered:
        if not any(k <= f for k in kept):
            kept.append(f)
    return frozenset(kept)


_TOP = frozenset([EMPTY])


class _Solver:
    def __init__(self, heap: Heap, typing: Optional[Typing], budget: int):
        self.heap = heap
        self.typing = typing
        self.budget = budget
        self.calls = 0
        self.places = tuple(canonical(heap.places() | {FRESH_PLACE}))
        self.approx: dict[int, frozenset] = {}
        self.keep: dict[int, Assertion] = {}

    def run(self, phi: Assertion) -> frozenset:
        while True:
            self.memo: dict[int, frozenset] = {}
            self.active: set[int] = set()
            result = self.fp(phi)
            changed = False
            for k, v in self.memo.items():
                if self.approx.get(k, _TOP) != v:
                    changed = True
                self.approx[k] = v
            if not changed:
                return result

    def fp(self, a: Assertion) -> frozenset:
        a = resolve(a)
        k = id(a)
        if k in self.memo:
            return self.memo[k]
        if k in self.active:
            return self.approx.get(k, _TOP)
        self.calls += 1
        if self.calls > self.budget:
            raise BudgetExceeded(f"satisfaction search exceeded {self.budget} steps")
        self.keep[k] = a
        self.active.add(k)
        try:
            res = self._compute(a)
        finally:
            self.active.discard(k)
        self.memo[k] = res
        return res

    def _compute(self, a: Assertion) -> frozenset:
        h = self.heap
        if isinstance(a, BoolLit):
            return _TOP if a.value else frozenset()
        if isinstance(a, ChunkAtom):
            c = a.chunk
            if c not in h:
                return frozenset()
            if isinstance(c, Perm) and self.typing is not None:
                try:
                    if c.inp not in self.typing.ty(c.bio, c.out):
                        return frozenset()
                except (KeyError, ValueError):
                    return frozenset()
            return frozenset([Heap([c])])
        if isinstance(a, Star):
            left = self.fp(a.left)
            if not left:
                return frozenset()
            right = self.fp(a.right)
            combos = []
            for f1 in left:
                for f2 in right:
                    f = f1 + f2
                    if f <= h:
                        combos.append(f)
            return _minimise(combos)
        if isinstance(a, ExistsValue):
            acc: list[Heap] = []
            for v in a.domain:
                acc.extend(self.fp(a.instance(v)))
            return _minimise(acc)
        if isinstance(a, ExistsPlace):
            acc = []
            for t in (self.places if a.candidates is None else a.candidates):
                acc.extend(self.fp(a.instance(t)))
            return _minimise(acc)
        raise TypeError(f"not an assertion: {a!r}")


def footprints(h: Heap, phi: Assertion, typing: Optional[Typing] = None,
               budget: int = DEFAULT_BUDGET) -> frozenset:
    """Minimal sub-multisets of ``h`` satisfying ``phi``."""
    return _Solver(h, typing, budget).run(phi)


def assert_sat(h: Heap, phi: Assertion, typing: Optional[Typing] = None,
               budget: int = DEFAULT_BUDGET) -> bool:
    """Decide ``h |= phi``; raises :class:`BudgetExceeded` when undecided."""
    return bool(footprints(h, phi, typing, budget))


# --------------------------------------------------------------------------
# embedding of processes


class Embedding:
    """Memoised ``emb(P, t)`` construction for one typing."""

    def __init__(self, typing: Typing):
        self.typing = typing
        self._memo: dict = {}
        self._lock = threading.Lock()

    def __call__(self, p: Process, t: Place) -> Assertion:
        key = (id(p), t)
        with self._lock:
            hit = self._memo.get(key)
            if hit is not None:
                return hit[1]
            node = LazyAssertion(lambda: self._unfold(p, t), f"emb({p!r}, {t!r})")
            self._memo[key] = (p, node)
            return node

    def _unfold(self, p: Process, t: Place) -> Assertion:
        q = force(p)
        if q is INACTIVE:
            return TRUE
        if isinstance(q, Choice):
            return Star(self(q.left, t), self(q.right, t))
        if isinstance(q, Prefix):
            ty = self.typing

            def with_input(z):
                return ExistsPlace(None, lambda t2: Star(
                    ChunkAtom(Perm(q.bio, t, q.out, z, t2)), self(q.after(z), t2)), "t'")

            return ExistsValue(ty.ty(q.bio, q.out), with_input, "z'")
        raise TypeError(f"not a process: {q!r}")

    def token(self, p: Process) -> Assertion:
        return ExistsPlace(None, lambda t: Star(ChunkAtom(Token(t)), self(p, t)), "t")


def emb(p: Process, t: Place, typing: Typing) -> Assertion:
    return Embedding(typing)(p, t)


def emb_tok(p: Process, typing: Typing) -> Assertion:
    return Embedding(typing).token(p)
