"""Network substrates for the simulator."""

from __future__ import annotations

import random
from collections import deque
from typing import Any, Hashable, Optional

from ..values import canonical


class LossySetChannels:
    """Per-address message sets that are never emptied.

    A receive delivers some message of the set with probability
    ``1 - loss``. Loss is simply not choosing to deliver, and the same
    message may be delivered again later (duplication and reordering).
    """

    def __init__(self, loss: float = 0.0):
        self.loss = loss
        self.sets: dict[Hashable, set] = {}
        self.sent: list = []

    def send(self, addr: Hashable, msg: Any) -> None:
        self.sets.setdefault(addr, set()).add(msg)
        self.sent.append((addr, msg))

    def receive(self, addr: Hashable, rng: random.Random) -> Optional[Any]:
        pool = self.sets.get(addr)
        if not pool or rng.random() < self.loss:
            return None
        return rng.choice(canonical(pool))

    def contents(self, addr: Hashable) -> frozenset:
        return frozenset(self.sets.get(addr, ()))


class FifoChannels:
    """Reliable FIFO queues, one per ordered pair of endpoints."""

    def __init__(self):
        self.queues: dict[tuple, deque] = {}

    def send(self, src: Hashable, dst: Hashable, msg: Any) -> None:
        self.queues.setdefault((src, dst), deque()).append(msg)

    def heads_into(self, dst: Hashable) -> list:
        return [(src, q[0]) for (src, d), q in sorted(self.queues.items(), key=lambda kv: str(kv[0]))
                if d == dst and q]

    def receive(self, dst: Hashable, rng: random.Random) -> Optional[tuple]:
        heads = self.heads_into(dst)
        if not heads:
            return None
        src, msg = heads[rng.randrange(len(heads))]
        self.queues[(src, dst)].popleft()
        return src, msg

    def in_transit(self, src: Hashable, dst: Hashable) -> tuple:
        return tuple(self.queues.get((src, dst), ()))
