"""I/O permission heaps and their token-pushing transition semantics.

A heap is a finite multiset of chunks. A permission ``bio(t, v, w, t')``
allows the operation ``bio`` with output ``v`` from place ``t`` and predicts
input ``w``; a ``token(t)`` marks the place that may act next. Places are
plain strings; canonical models use strings over ``"L"``/``"R"``.
"""

from __future__ import annotations

from collections import Counter
from typing import Any, Iterable, NamedTuple, Optional, Union

from .errors import EmptySet
from .kernel import EventSystem, enumerate_traces
from .process import Typing
from .values import Action, canonical, sort_key, to_json

Place = str
ROOT: Place = ""


class Perm(NamedTuple):
    bio: str
    src: Place
    out: Any
    inp: Any
    dst: Place

    def __str__(self) -> str:
        return f"{self.bio}({_place(self.src)},{self.out!r},{self.inp!r},{_place(self.dst)})"


class Token(NamedTuple):
    at: Place

    def __str__(self) -> str:
        return f"token({_place(self.at)})"


Chunk = Union[Perm, Token]


def _place(p: Place) -> str:
    return p if p else "⟨⟩"


class Heap:
    """Immutable multiset of chunks."""

    __slots__ = ("_counts", "_hash", "_by_src")

    def __init__(self, chunks: Iterable[Chunk] = ()):
        counts = Counter(chunks)
        self._counts = {c: n for c, n in counts.items() if n > 0}
        self._hash: Optional[int] = None
        self._by_src: Optional[dict] = None

    @classmethod
    def _from_counts(cls, counts: dict) -> "Heap":
        h = cls.__new__(cls)
        h._counts = counts
        h._hash = None
        h._by_src = None
        return h

    def __eq__(self, other) -> bool:
        return isinstance(other, Heap) and self._counts == other._counts

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._counts.items()))
        return self._hash

    def __len__(self) -> int:
        return sum(self._counts.values())

    def __iter__(self):
        for c in canonical(self._counts):
            for _ in range(self._counts[c]):
                yield c

    def __contains__(self, c) -> bool:
        return c in self._counts

    def __add__(self, other: "Heap") -> "Heap":
        counts = dict(self._counts)
        for c, n in other._counts.items():
            counts[c] = counts.get(c, 0) + n
        return Heap._from_counts(counts)

    def __le__(self, other: "Heap") -> bool:
        """Sub-multiset test."""
        return all(other._counts.get(c, 0) >= n for c, n in self._counts.items())

    def __repr__(self) -> str:
        return "{" + ", ".join(str(c) for c in self) + "}"

    def count(self, c: Chunk) -> int:
        return self._counts.get(c, 0)

    def distinct(self) -> list:
        return canonical(self._counts)

    def items(self) -> list[tuple[Chunk, int]]:
        return [(c, self._counts[c]) for c in self.distinct()]

    def add(self, *chunks: Chunk) -> "Heap":
        counts = dict(self._counts)
        for c in chunks:
            counts[c] = counts.get(c, 0) + 1
        return Heap._from_counts(counts)

    def remove(self, *chunks: Chunk) -> "Heap":
        counts = dict(self._counts)
        for c in chunks:
            n = counts.get(c, 0)
            if n == 0:
                raise KeyError(c)
            if n == 1:
                del counts[c]
            else:
                counts[c] = n - 1
        return Heap._from_counts(counts)

    def tokens(self) -> list[Place]:
        return canonical({c.at for c in self._counts if isinstance(c, Token)})

    def perms_from(self, place: Place) -> list[Perm]:
        if self._by_src is None:
            idx: dict = {}
            for c in self.distinct():
                if isinstance(c, Perm):
                    idx.setdefault(c.src, []).append(c)
            self._by_src = idx
        return self._by_src.get(place, [])

    def places(self) -> set[Place]:
        out: set[Place] = set()
        for c in self._counts:
            if isinstance(c, Token):
                out.add(c.at)
            else:
                out.add(c.src)
                out.add(c.dst)
        return out

    def sort_key(self) -> tuple:
        return tuple((sort_key(c), n) for c, n in self.items())


EMPTY = Heap()


class _Bottom:
    """The chaos state reached after a contradicted input prediction."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "⊥"

    def __reduce__(self):
        return (_Bottom, ())


BOTTOM = _Bottom()


def heap_step(hs, action: Action, typing: Typing, regular: bool = False) -> frozenset:
    """Successor states of ``hs`` under ``action``.

    With ``regular`` set, the contradiction and chaos rules are disabled and
    only ordinary permission consumption remains.
    """
    if not typing.well_typed(action):
        return frozenset()
    if hs is BOTTOM:
        return frozenset() if regular else frozenset([BOTTOM])
    out = set()
    for t in hs.tokens():
        for p in hs.perms_from(t):
            if p.bio != action.bio or p.out != action.out:
                continue
            if p.inp == action.inp:
                out.add(hs.remove(Token(t), p).add(Token(p.dst)))
            elif not regular and typing.well_typed(Action(p.bio, p.out, p.inp)):
                out.add(BOTTOM)
    return frozenset(out)


def heap_transitions(hs, typing: Typing, regular: bool = False):
    """All ``(action, successor)`` pairs of a heap state."""
    if hs is BOTTOM:
        if not regular:
            for a in typing.actions():
                yield a, BOTTOM
        return
    for t in hs.tokens():
        for p in hs.perms_from(t):
            if p.bio not in typing.outputs:
                continue
            try:
                ws = typing.ty(p.bio, p.out)
            except (KeyError, ValueError):
                continue
            if p.inp in ws:
                yield Action(p.bio, p.out, p.inp), hs.remove(Token(t), p).add(Token(p.dst))
                if not regular:
                    for w in ws:
                        if w != p.inp:
                            yield Action(p.bio, p.out, w), BOTTOM


def heap_event_system(typing: Typing, regular: bool = False) -> EventSystem:
    return EventSystem(lambda hs: heap_transitions(hs, typing, regular),
                       frozenset(), "H", stutter=False)


def heap_traces(hs, typing: Typing, depth: int, regular: bool = False) -> frozenset:
    return enumerate_traces(heap_event_system(typing, regular), [hs], depth)


def heapset_traces(hs_set: Iterable, typing: Typing, depth: int,
                   regular: bool = False) -> frozenset:
    """Traces executable in every heap of the set."""
    hs_list = list(hs_set)
    if not hs_list:
        raise EmptySet("trace intersection over an empty heap set")
    es = heap_event_system(typing, regular)
    result: Optional[frozenset] = None
    for hs in hs_list:
        ts = enumerate_traces(es, [hs], depth)
        result = ts if result is None else result & ts
    return result


def chunk_to_json(c: Chunk) -> dict:
    if isinstance(c, Token):
        return {"kind": "token", "at": c.at}
    return {"kind": "perm", "bio": c.bio, "src": c.src, "out": to_json(c.out),
            "in": to_json(c.inp), "dst": c.dst}


def heap_to_json(hs) -> Any:
    if hs is BOTTOM:
        return "bottom"
    return [dict(chunk_to_json(c), count=n) for c, n in hs.items()]
