"""Ring leader election: a one-shot global model, a channel-based protocol
model, a buffered interface model, its decomposition into node components
plus a lossy set-based network, and the simulation relations and mediators
connecting the levels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, NamedTuple, Optional, Sequence

from ..errors import InvalidRing
from ..kernel import (SKIP, EventSystem, GuardedEvent, GuardedEventSystem, SyncMap,
                      TraceProperty, interleave_family)
from ..process import EventText, IOEvent, IOGuardedES, Typing
from ..values import UNIT, Action, Event, Indexed


def default_addr(i: int) -> str:
    return f"10.0.0.{i}"


@dataclass(frozen=True)
class RingConfig:
    ids: tuple
    next: Mapping[int, int]
    addr: Mapping[int, str]

    def __post_init__(self):
        ids = tuple(sorted(self.ids))
        object.__setattr__(self, "ids", ids)
        if not ids:
            raise InvalidRing("empty ring")
        if set(self.next) != set(ids) or set(self.next.values()) != set(ids):
            raise InvalidRing("next must be a permutation of the ids")
        seen, k = set(), ids[0]
        while k not in seen:
            seen.add(k)
            k = self.next[k]
        if len(seen) != len(ids):
            raise InvalidRing("next is not a single cycle")
        if set(self.addr) != set(ids) or len(set(self.addr.values())) != len(ids):
            raise InvalidRing("addr must be injective on the ids")

    @classmethod
    def ring(cls, ids: Sequence[int], order: Optional[Sequence[int]] = None) -> "RingConfig":
        """Ring visiting ``order`` (default: ascending ids) cyclically."""
        order = list(order) if order is not None else sorted(ids)
        nxt = {order[k]: order[(k + 1) % len(order)] for k in range(len(order))}
        return cls(tuple(ids), nxt, {i: default_addr(i) for i in ids})

    @property
    def addrs(self) -> tuple:
        return tuple(self.addr[i] for i in self.ids)

    def pos(self, i: int) -> int:
        return self.ids.index(i)

    def addr_pos(self, a: str) -> int:
        return self.addrs.index(a)

    def id_at(self, a: str) -> int:
        return self.ids[self.addr_pos(a)]

    def max_id(self) -> int:
        return self.ids[-1]


def _put(t: tuple, k: int, v: Any) -> tuple:
    return t[:k] + (v,) + t[k + 1:]


def elect_ids(trace) -> set:
    return {e.params[0] for e in trace if isinstance(e, Event) and e.name == "elect"}


UNIQUE_LEADER = TraceProperty(lambda t: len(elect_ids(t)) <= 1, "U0")


# --------------------------------------------------------------------------
# abstract model: state is a tuple of leader flags


def abstract_model(cfg: RingConfig, guard: Optional[Callable] = None) -> EventSystem:
    ids = cfg.ids

    def elect_guard(s, i):
        return all(i == j for j, led in zip(ids, s) if led)

    elect = GuardedEvent("elect", [(i,) for i in ids], guard or elect_guard,
                         lambda s, i: _put(s, cfg.pos(i), True))
    return GuardedEventSystem((elect,), frozenset([(False,) * len(ids)]),
                              "leader-abstract").as_event_system()


# --------------------------------------------------------------------------
# protocol model: (leaders, chans) with chans[k] the channel into node ids[k]


class ProtocolState(NamedTuple):
    leader: tuple
    chan: tuple


def protocol_model(cfg: RingConfig) -> EventSystem:
    ids = cfg.ids
    pos = cfg.pos

    def deliver(s, i, m):
        k = pos(cfg.next[i])
        return s._replace(chan=_put(s.chan, k, s.chan[k] | {m}))

    events = (
        GuardedEvent("setup", [(i,) for i in ids], lambda s, i: True,
                     lambda s, i: deliver(s, i, i)),
        GuardedEvent("accept", [(i, j) for i in ids for j in ids],
                     lambda s, i, j: j in s.chan[pos(i)] and j > i,
                     lambda s, i, j: deliver(s, i, j)),
        GuardedEvent("elect", [(i,) for i in ids], lambda s, i: i in s.chan[pos(i)],
                     lambda s, i: s._replace(leader=_put(s.leader, pos(i), True))),
    )
    init = ProtocolState((False,) * len(ids), (frozenset(),) * len(ids))
    return GuardedEventSystem(events, frozenset([init]), "leader-protocol").as_event_system()


# --------------------------------------------------------------------------
# interface model: per-node buffers plus per-address channels


class NodeState(NamedTuple):
    leader: bool = False
    ibuf: frozenset = frozenset()
    obuf: frozenset = frozenset()


class InterfaceState(NamedTuple):
    nodes: tuple
    chan: tuple


def interface_initial(cfg: RingConfig) -> InterfaceState:
    return InterfaceState((NodeState(),) * len(cfg.ids), (frozenset(),) * len(cfg.ids))


def interface_model(cfg: RingConfig) -> EventSystem:
    ids, addrs, pos = cfg.ids, cfg.addrs, cfg.pos

    def node(s, i):
        return s.nodes[pos(i)]

    def with_node(s, i, **kw):
        return s._replace(nodes=_put(s.nodes, pos(i), node(s, i)._replace(**kw)))

    def chan_of(s, a):
        return s.chan[cfg.addr_pos(a)]

    events = (
        GuardedEvent("setup", [(i,) for i in ids], lambda s, i: True,
                     lambda s, i: with_node(s, i, obuf=node(s, i).obuf | {i})),
        GuardedEvent("receive", [(i, j) for i in ids for j in ids],
                     lambda s, i, j: j in chan_of(s, cfg.addr[i]),
                     lambda s, i, j: with_node(s, i, ibuf=node(s, i).ibuf | {j})),
        GuardedEvent("accept", [(i, j) for i in ids for j in ids],
                     lambda s, i, j: j in node(s, i).ibuf and j > i,
                     lambda s, i, j: with_node(s, i, obuf=node(s, i).obuf | {j})),
        GuardedEvent("send", [(i, j, a) for i in ids for j in ids for a in addrs],
                     lambda s, i, j, a: j in node(s, i).obuf and a == cfg.addr[cfg.next[i]],
                     lambda s, i, j, a: s._replace(chan=_put(
                         s.chan, cfg.addr_pos(a), chan_of(s, a) | {j}))),
        GuardedEvent("elect", [(i,) for i in ids], lambda s, i: i in node(s, i).ibuf,
                     lambda s, i: with_node(s, i, leader=True)),
    )
    return GuardedEventSystem(events, frozenset([interface_initial(cfg)]),
                              "leader-interface").as_event_system()


# --------------------------------------------------------------------------
# relations and mediators


def r_pa(abstract_state: tuple, concrete: ProtocolState) -> bool:
    """Drop the channels."""
    return abstract_state == concrete.leader


def make_r_ip(cfg: RingConfig) -> Callable[[ProtocolState, InterfaceState], bool]:
    """Drop the buffers; the channel into node ``k`` is the one at ``addr(k)``."""

    def r_ip(p: ProtocolState, s: InterfaceState) -> bool:
        return (p.leader == tuple(n.leader for n in s.nodes)
                and p.chan == tuple(s.chan[cfg.addr_pos(cfg.addr[k])] for k in cfg.ids))

    return r_ip


def pi_pa(e: Event) -> Event:
    return e if e.name == "elect" else SKIP


def pi_ip(e: Event) -> Event:
    if e.name == "send":
        i, j, _a = e.params
        return Event("setup", (i,)) if i == j else Event("accept", (i, j))
    if e.name == "elect":
        return e
    return SKIP


def pi_ia(e: Event) -> Event:
    return pi_pa(pi_ip(e))


# --------------------------------------------------------------------------
# decomposition into node components and a set-based network


def node_typing(cfg: RingConfig) -> Typing:
    pairs = tuple((m, a) for m in cfg.ids for a in cfg.addrs)
    return Typing({"setup": (UNIT,), "receive": (UNIT,), "accept": cfg.ids,
                   "send": pairs, "elect": (UNIT,)},
                  lambda bio, v: cfg.ids if bio == "receive" else (UNIT,))


def node_component(cfg: RingConfig, i: int, a: str) -> IOGuardedES:
    """I/O-guarded model of node ``i`` sending to address ``a``."""
    ids, addrs = cfg.ids, cfg.addrs
    unit = lambda s: (UNIT,)
    events = (
        IOEvent("setup", unit, lambda s, v, w: True,
                lambda s, v, w: s._replace(obuf=s.obuf | {i}), ghost=True,
                text=EventText(update="s⟨obuf := obuf(s) ∪ {i}⟩")),
        IOEvent("receive", unit, lambda s, v, w: True,
                lambda s, v, w: s._replace(ibuf=s.ibuf | {w}),
                text=EventText(input="m", update="s⟨ibuf := ibuf(s) ∪ {m}⟩")),
        IOEvent("accept", lambda s: ids, lambda s, m, w: m in s.ibuf and m > i,
                lambda s, m, w: s._replace(obuf=s.obuf | {m}), ghost=True,
                text=EventText(("m",), guard="m ∈ ibuf(s) ∧ i < m",
                               update="s⟨obuf := obuf(s) ∪ {m}⟩")),
        IOEvent("send", lambda s: [(m, b) for m in ids for b in addrs],
                lambda s, v, w: v[0] in s.obuf and v[1] == a,
                lambda s, v, w: s,
                text=EventText(("m", "a′"), guard="m ∈ obuf(s) ∧ a′ = a")),
        IOEvent("elect", unit, lambda s, v, w: i in s.ibuf,
                lambda s, v, w: s._replace(leader=True), ghost=True,
                text=EventText(guard="i ∈ ibuf(s)", update="s⟨leader := true⟩")),
    )
    return IOGuardedES(events, NodeState(), node_typing(cfg), f"node{i}")


def gamma(cfg: RingConfig, i: int) -> tuple:
    return (i, cfg.addr[cfg.next[i]])


def network_model(cfg: RingConfig) -> EventSystem:
    """Environment: per-address message sets, never emptied."""
    ids, addrs = cfg.ids, cfg.addrs
    events = (
        GuardedEvent("env_receive", [(i, m) for i in ids for m in ids],
                     lambda s, i, m: m in s[cfg.addr_pos(cfg.addr[i])], lambda s, i, m: s),
        GuardedEvent("env_send", [(i, m, a) for i in ids for m in ids for a in addrs],
                     lambda s, i, m, a: True,
                     lambda s, i, m, a: _put(s, cfg.addr_pos(a), s[cfg.addr_pos(a)] | {m})),
    )
    return GuardedEventSystem(events, frozenset([(frozenset(),) * len(ids)]),
                              "network").as_event_system()


def _combine(e1, e2):
    if not isinstance(e1, Indexed):
        return None
    i, act = e1.index, e1.event
    if act.bio == "receive":
        if e2 == Event("env_receive", (i, act.inp)):
            return Event("receive", (i, act.inp))
        return None
    if act.bio == "send":
        m, a = act.out
        if e2 == Event("env_send", (i, m, a)):
            return Event("send", (i, m, a))
        return None
    if e2 != SKIP:
        return None
    if act.bio == "accept":
        return Event("accept", (i, act.out))
    return Event(act.bio, (i,))


CHI_E = SyncMap(_combine, "chi_e")


@dataclass(frozen=True)
class LeaderStack:
    cfg: RingConfig
    abstract: EventSystem
    protocol: EventSystem
    interface: EventSystem
    r_pa: Callable
    r_ip: Callable
    pi_pa: Callable
    pi_ip: Callable
    components: dict = field(default_factory=dict)
    network: Optional[EventSystem] = None
    chi_e: SyncMap = CHI_E

    def recomposed(self) -> EventSystem:
        from ..kernel import compose_parallel
        family = interleave_family({i: c.as_event_system() for i, c in self.components.items()})
        return compose_parallel(family, self.network, self.chi_e)


def build_leader_stack(cfg: RingConfig) -> LeaderStack:
    comps = {i: node_component(cfg, *gamma(cfg, i)) for i in cfg.ids}
    return LeaderStack(cfg, abstract_model(cfg), protocol_model(cfg), interface_model(cfg),
                       r_pa, make_r_ip(cfg), pi_pa, pi_ip, comps, network_model(cfg))


def decompose_leader(cfg: RingConfig) -> dict:
    stack = build_leader_stack(cfg)
    return {"components": stack.components, "env": stack.network, "chi_e": CHI_E,
            "gamma": {i: gamma(cfg, i) for i in cfg.ids}}


# --------------------------------------------------------------------------
# invariants


def channel_order_invariant(cfg: RingConfig, s: ProtocolState) -> bool:
    """If id ``i`` is in the channel into node ``j``, every node passed on
    the way from ``i`` to ``j`` has a smaller id. With ``j = i`` this makes
    ``i`` the maximum."""
    for j in cfg.ids:
        for i in s.chan[cfg.pos(j)]:
            k = cfg.next[i]
            while k != j:
                if k >= i:
                    return False
                k = cfg.next[k]
    return True


def only_max_elected(cfg: RingConfig, leaders: tuple) -> bool:
    return all(not led or i == cfg.max_id() for i, led in zip(cfg.ids, leaders))


def buffers_within_channels(cfg: RingConfig, s: InterfaceState) -> bool:
    return all(s.nodes[k].ibuf <= s.chan[cfg.addr_pos(cfg.addr[i])]
               for k, i in enumerate(cfg.ids))
