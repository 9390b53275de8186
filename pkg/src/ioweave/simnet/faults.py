"""Fail-stop crash scripts and a perfect, delayed failure detector."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Hashable, Iterable, Optional


@dataclass(frozen=True)
class FaultPlan:
    """Crashes as ``(server, step)`` pairs. ``detect_delay`` bounds how many
    steps after a crash each observer may still be unaware of it; explicit
    per-observer delays in ``delays`` override the seeded default."""

    crashes: tuple = ()
    detect_delay: int = 10
    delays: tuple = ()

    @classmethod
    def from_json(cls, d: Optional[dict]) -> "FaultPlan":
        if not d:
            return cls()
        return cls(tuple((c[0], int(c[1])) for c in d.get("crashes", ())),
                   int(d.get("detect_delay", 10)),
                   tuple((o, int(k)) for o, k in d.get("delays", ())))

    def to_json(self) -> dict:
        return {"crashes": [list(c) for c in self.crashes], "detect_delay": self.detect_delay,
                "delays": [list(d) for d in self.delays]}


class FailureDetector:
    """Reports a crash to each observer after its own delay; never wrong."""

    def __init__(self, plan: FaultPlan, observers: Iterable[Hashable], rng: random.Random):
        fixed = dict(plan.delays)
        self.delay = {o: fixed.get(o, rng.randint(0, plan.detect_delay)) for o in observers}
        self.crashed_at: dict = {}

    def crash(self, node: Hashable, step: int) -> None:
        self.crashed_at.setdefault(node, step)

    def reports(self, observer: Hashable, node: Hashable, step: int) -> bool:
        at = self.crashed_at.get(node)
        return at is not None and step >= at + self.delay.get(observer, 0)

    @property
    def crashed(self) -> frozenset:
        return frozenset(self.crashed_at)
