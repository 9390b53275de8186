"""Shared value vocabulary: events, I/O actions, the unit value and a
canonical ordering used wherever sets must be iterated deterministically."""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
from typing import Any, Iterable, NamedTuple


class _Unit:
    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "•"

    def __reduce__(self):
        return (_Unit, ())


UNIT = _Unit()


class Event(NamedTuple):
    """A named event with positional parameters, e.g. ``elect(3)``."""

    name: str
    params: tuple = ()

    def __str__(self) -> str:
        return f"{self.name}({','.join(_fmt(p) for p in self.params)})"


SKIP = Event("skip")


class Action(NamedTuple):
    """An I/O action ``bio(out, inp)``."""

    bio: str
    out: Any = UNIT
    inp: Any = UNIT

    def __str__(self) -> str:
        return f"{self.bio}({_fmt(self.out)},{_fmt(self.inp)})"


class Indexed(NamedTuple):
    """An event of one member of an indexed interleaving family."""

    index: Any
    event: Any

    def __str__(self) -> str:
        return f"{self.event}@{_fmt(self.index)}"


def _fmt(v: Any) -> str:
    if isinstance(v, tuple) and not hasattr(v, "_fields"):
        return "(" + ",".join(_fmt(x) for x in v) + ")"
    if isinstance(v, frozenset):
        return "{" + ",".join(_fmt(x) for x in sorted(v, key=sort_key)) + "}"
    return str(v)


def sort_key(x: Any) -> tuple:
    """Total order over the value universe used by the toolkit.

    Works across mixed types and is independent of hash randomisation, so
    iteration over sets sorted with it is reproducible between runs.
    """
    if x is None or x is UNIT:
        return (0,)
    if isinstance(x, bool):
        return (1, int(x))
    if isinstance(x, (int, float)):
        return (2, x)
    if isinstance(x, str):
        return (3, x)
    if isinstance(x, enum.Enum):
        return (4, type(x).__name__, sort_key(x.value))
    if isinstance(x, tuple):
        name = type(x).__name__ if hasattr(x, "_fields") else ""
        return (5, name, tuple(sort_key(e) for e in x))
    if isinstance(x, (frozenset, set)):
        return (6, tuple(sorted(sort_key(e) for e in x)))
    if dataclasses.is_dataclass(x):
        return (7, type(x).__name__,
                tuple(sort_key(getattr(x, f.name)) for f in dataclasses.fields(x)))
    return (9, type(x).__name__, repr(x))


def canonical(xs: Iterable) -> list:
    return sorted(xs, key=sort_key)


def to_json(x: Any) -> Any:
    """Encode toolkit values as plain JSON data."""
    if x is None or x is UNIT:
        return None
    if isinstance(x, (bool, int, float, str)):
        return x
    if isinstance(x, Event):
        return {"name": x.name, "params": [to_json(p) for p in x.params]}
    if isinstance(x, Action):
        return {"name": x.bio, "params": [to_json(x.out), to_json(x.inp)]}
    if isinstance(x, Indexed):
        inner = to_json(x.event)
        return {"name": inner["name"], "index": to_json(x.index),
                "params": inner["params"]}
    if isinstance(x, enum.Enum):
        return x.value
    if isinstance(x, tuple) and hasattr(x, "_asdict"):
        return {k: to_json(v) for k, v in x._asdict().items()}
    if isinstance(x, (tuple, list)):
        return [to_json(e) for e in x]
    if isinstance(x, (frozenset, set)):
        return [to_json(e) for e in canonical(x)]
    if isinstance(x, dict):
        return {str(k): to_json(v) for k, v in x.items()}
    if dataclasses.is_dataclass(x):
        return {"type": type(x).__name__,
                **{f.name: to_json(getattr(x, f.name)) for f in dataclasses.fields(x)}}
    return repr(x)


def trace_to_json(trace: Iterable) -> list:
    return [to_json(e) for e in trace]


def event_from_json(d: dict, types: Iterable[type] = ()) -> Event | Action:
    """Inverse of :func:`to_json` for plain events and two-argument actions.

    Encoded dataclass values are rebuilt when their class is in ``types``.
    """
    registry = {t.__name__: t for t in types}
    params = tuple(value_from_json(p, registry) for p in d.get("params", []))
    if d.get("kind") == "action":
        out, inp = params
        return Action(d["name"], UNIT if out is None else out, UNIT if inp is None else inp)
    return Event(d["name"], params)


def value_from_json(x: Any, registry: dict) -> Any:
    if isinstance(x, list):
        return tuple(value_from_json(e, registry) for e in x)
    if isinstance(x, dict) and x.get("type") in registry:
        fields = {k: value_from_json(v, registry) for k, v in x.items() if k != "type"}
        return registry[x["type"]](**fields)
    return x


def stable_hash(x: Any) -> str:
    blob = json.dumps(to_json(x), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
