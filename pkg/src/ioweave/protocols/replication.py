"""Primary-backup replication over reliable FIFO channels with fail-stop
servers and a perfect (but delayed) failure detector.

Servers are ``1..n`` and the least server each node believes alive is the
primary. A primary turns a client request into a pending log, pushes the
full pending log to each live backup in id order and waits for that
backup's acknowledgement before moving on; once every live backup has
acknowledged it commits and replies. A backup adopts a pushed log only if
it extends its own.

The model is built from per-node handler functions shared by the global
model and by the per-node component models, so both levels describe the
same behaviour.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Optional

from ..kernel import (SKIP, EventSystem, GuardedEvent, GuardedEventSystem, SyncMap,
                      compose_parallel, find_violation, interleave_family)
from ..process import EventText, IOEvent, IOGuardedES, Typing
from ..values import UNIT, Event, Indexed


@dataclass(frozen=True)
class Request:
    op: Any
    client: str

    def __repr__(self) -> str:
        return f"request({self.op},{self.client})"


@dataclass(frozen=True)
class Sync:
    log: tuple

    def __repr__(self) -> str:
        return f"sync({','.join(map(str, self.log))})"


@dataclass(frozen=True)
class Ack:
    log: tuple

    def __repr__(self) -> str:
        return f"ack({','.join(map(str, self.log))})"


@dataclass(frozen=True)
class Reply:
    op: Any

    def __repr__(self) -> str:
        return f"reply({self.op})"


class ServerState(NamedTuple):
    log: tuple = ()
    pend: tuple = ()
    live: frozenset = frozenset()
    ibuf: tuple = ()
    obuf: tuple = ()
    cur: Optional[Request] = None
    waiting: Any = None
    acked: frozenset = frozenset()
    synced: frozenset = frozenset()


class ClientState(NamedTuple):
    todo: tuple = ()
    live: frozenset = frozenset()
    target: Any = None
    ibuf: tuple = ()
    obuf: tuple = ()
    replies: tuple = ()


class EnvState(NamedTuple):
    live_env: frozenset
    chans: tuple


class ReplState(NamedTuple):
    servers: tuple
    clients: tuple
    env: EnvState


def is_prefix(a: tuple, b: tuple) -> bool:
    return len(a) <= len(b) and tuple(b[:len(a)]) == tuple(a)


def ordered_wrt_prefix(logs) -> bool:
    logs = [tuple(x) for x in logs]
    return all(is_prefix(a, b) for a, b in zip(logs, logs[1:]))


@dataclass(frozen=True)
class ReplConfig:
    n_servers: int
    n_clients: int = 1
    ops: tuple = ("x",)
    max_crashes: Optional[int] = None
    wait_for_acks: bool = True

    @property
    def servers(self) -> tuple:
        return tuple(range(1, self.n_servers + 1))

    @property
    def clients(self) -> tuple:
        return tuple(f"c{k}" for k in range(1, self.n_clients + 1))

    @property
    def crash_budget(self) -> int:
        cap = self.n_servers - 1
        return cap if self.max_crashes is None else min(cap, self.max_crashes)

    @property
    def endpoints(self) -> tuple:
        return self.servers + self.clients

    @property
    def pairs(self) -> tuple:
        """Ordered endpoint pairs that carry traffic."""
        out = []
        for a in self.endpoints:
            for b in self.endpoints:
                if a != b and (isinstance(a, int) or isinstance(b, int)):
                    out.append((a, b))
        return tuple(out)

    def max_log(self) -> int:
        return self.n_clients * len(self.ops) * (1 + self.crash_budget)

    def logs(self) -> list:
        return [tuple(p) for k in range(self.max_log() + 1)
                for p in itertools.product(self.ops, repeat=k)]

    def messages(self) -> list:
        msgs: list = [Request(op, c) for op in self.ops for c in self.clients]
        msgs += [Reply(op) for op in self.ops]
        for lg in self.logs():
            msgs += [Sync(lg), Ack(lg)]
        return msgs


# --------------------------------------------------------------------------
# server handlers


def believes_primary(me: int, s: ServerState) -> bool:
    return not any(b < me for b in s.live)


def _advance(me: int, s: ServerState) -> ServerState:
    """Push the pending log to the next unacknowledged live backup, or
    commit and reply when none is left."""
    rest = sorted(b for b in s.live if b != me and b not in s.acked)
    if rest:
        b = rest[0]
        return s._replace(waiting=b, obuf=s.obuf + ((b, Sync(s.pend)),))
    req = s.cur
    return s._replace(log=s.pend, cur=None, waiting=None, acked=frozenset(),
                      obuf=s.obuf + ((req.client, Reply(req.op)),))


def _first(buf: tuple, kind: type) -> Optional[int]:
    for k, (_src, msg) in enumerate(buf):
        if isinstance(msg, kind):
            return k
    return None


def can_handle_request(me: int, s: ServerState) -> bool:
    return s.cur is None and believes_primary(me, s) and _first(s.ibuf, Request) is not None


def handle_request(me: int, s: ServerState, wait_for_acks: bool = True) -> ServerState:
    k = _first(s.ibuf, Request)
    _src, req = s.ibuf[k]
    s = s._replace(ibuf=s.ibuf[:k] + s.ibuf[k + 1:])
    pend = s.log + (req.op,)
    if not wait_for_acks:
        syncs = tuple((b, Sync(pend)) for b in sorted(s.live) if b != me)
        return s._replace(log=pend, pend=pend,
                          obuf=s.obuf + syncs + ((req.client, Reply(req.op)),))
    return _advance(me, s._replace(pend=pend, cur=req, acked=frozenset()))


def can_handle_sync(me: int, s: ServerState) -> bool:
    return _first(s.ibuf, Sync) is not None


def handle_sync(me: int, s: ServerState) -> ServerState:
    k = _first(s.ibuf, Sync)
    src, msg = s.ibuf[k]
    s = s._replace(ibuf=s.ibuf[:k] + s.ibuf[k + 1:], obuf=s.obuf + ((src, Ack(msg.log)),))
    if is_prefix(s.log, msg.log) and s.cur is None:
        s = s._replace(log=msg.log, pend=msg.log)
    return s


def can_handle_ack(me: int, s: ServerState) -> bool:
    return _first(s.ibuf, Ack) is not None


def handle_ack(me: int, s: ServerState) -> ServerState:
    k = _first(s.ibuf, Ack)
    src, msg = s.ibuf[k]
    s = s._replace(ibuf=s.ibuf[:k] + s.ibuf[k + 1:])
    if s.cur is not None and s.waiting == src and msg.log == s.pend:
        s = s._replace(acked=s.acked | {src}, synced=s.synced | {src})
        return _advance(me, s)
    return s


def can_detect(me, s, y) -> bool:
    """A node may learn of ``y``'s crash once; the last server it believes
    alive is never reported (some server always survives)."""
    return y != me and y in s.live and len(s.live) > 1


def server_detect(me: int, s: ServerState, y: int) -> ServerState:
    s = s._replace(live=s.live - {y})
    if s.cur is not None and s.waiting == y:
        s = _advance(me, s)
    return s


# --------------------------------------------------------------------------
# client handlers


def can_issue(c: str, s: ClientState) -> bool:
    return bool(s.todo) and s.target is None


def issue(c: str, s: ClientState) -> ClientState:
    t = min(s.live)
    return s._replace(target=t, obuf=s.obuf + ((t, Request(s.todo[0], c)),))


def can_handle_reply(c: str, s: ClientState) -> bool:
    return _first(s.ibuf, Reply) is not None


def handle_reply(c: str, s: ClientState) -> ClientState:
    k = _first(s.ibuf, Reply)
    _src, msg = s.ibuf[k]
    s = s._replace(ibuf=s.ibuf[:k] + s.ibuf[k + 1:])
    if s.target is not None and s.todo and msg.op == s.todo[0]:
        s = s._replace(todo=s.todo[1:], target=None, replies=s.replies + (msg.op,))
    return s


def client_detect(c: str, s: ClientState, y: int) -> ClientState:
    s = s._replace(live=s.live - {y})
    if s.target == y:
        t = min(s.live)
        s = s._replace(target=t, obuf=s.obuf + ((t, Request(s.todo[0], c)),))
    return s


# --------------------------------------------------------------------------
# the global model


def initial_state(cfg: ReplConfig) -> ReplState:
    live = frozenset(cfg.servers)
    servers = tuple(ServerState(live=live) for _ in cfg.servers)
    clients = tuple(ClientState(todo=cfg.ops, live=live) for _ in cfg.clients)
    return ReplState(servers, clients, EnvState(live, ((),) * len(cfg.pairs)))


class _Access:
    """Indexing helpers over the global state."""

    def __init__(self, cfg: ReplConfig):
        self.cfg = cfg
        self.spos = {x: k for k, x in enumerate(cfg.servers)}
        self.cpos = {x: k for k, x in enumerate(cfg.clients)}
        self.ppos = {p: k for k, p in enumerate(cfg.pairs)}

    def node(self, s: ReplState, x):
        return s.servers[self.spos[x]] if x in self.spos else s.clients[self.cpos[x]]

    def with_node(self, s: ReplState, x, ns) -> ReplState:
        if x in self.spos:
            k = self.spos[x]
            return s._replace(servers=s.servers[:k] + (ns,) + s.servers[k + 1:])
        k = self.cpos[x]
        return s._replace(clients=s.clients[:k] + (ns,) + s.clients[k + 1:])

    def chan(self, env: EnvState, a, b) -> tuple:
        return env.chans[self.ppos[(a, b)]]

    def with_chan(self, env: EnvState, a, b, q: tuple) -> EnvState:
        k = self.ppos[(a, b)]
        return env._replace(chans=env.chans[:k] + (q,) + env.chans[k + 1:])


# environment parts of the I/O events, shared with the decomposed environment


def alive(env: EnvState, x) -> bool:
    """Clients never crash; servers are alive while in ``live_env``."""
    return not isinstance(x, int) or x in env.live_env


def env_send_ok(cfg, acc, env: EnvState, x, dst, msg) -> bool:
    return alive(env, x)


def env_send(cfg, acc, env: EnvState, x, dst, msg) -> EnvState:
    return acc.with_chan(env, x, dst, acc.chan(env, x, dst) + (msg,))


def env_receive_ok(cfg, acc, env: EnvState, x, src, msg) -> bool:
    q = acc.chan(env, src, x)
    return alive(env, x) and bool(q) and q[0] == msg


def env_receive(cfg, acc, env: EnvState, x, src, msg) -> EnvState:
    return acc.with_chan(env, src, x, acc.chan(env, src, x)[1:])


def env_detect_ok(cfg, acc, env: EnvState, x, y) -> bool:
    return alive(env, x) and y not in env.live_env


def env_crash_ok(cfg, env: EnvState, y) -> bool:
    return y in env.live_env and len(cfg.servers) - len(env.live_env) < cfg.crash_budget


def _internal_events(cfg: ReplConfig):
    """(name, owner kind, guard, update) for the ghost events."""
    w = cfg.wait_for_acks
    return (
        ("handle_request", "server", can_handle_request, lambda x, s: handle_request(x, s, w)),
        ("handle_sync", "server", can_handle_sync, handle_sync),
        ("handle_ack", "server", can_handle_ack, handle_ack),
        ("issue", "client", can_issue, issue),
        ("handle_reply", "client", can_handle_reply, handle_reply),
    )


def protocol_model(cfg: ReplConfig) -> EventSystem:
    acc = _Access(cfg)
    endpoints = cfg.endpoints

    def sends(s):
        for x in endpoints:
            ob = acc.node(s, x).obuf
            if ob:
                yield (x,) + ob[0]

    def do_send(s, x, dst, msg):
        n = acc.node(s, x)
        s = acc.with_node(s, x, n._replace(obuf=n.obuf[1:]))
        return s._replace(env=env_send(cfg, acc, s.env, x, dst, msg))

    def receives(s):
        for (a, b) in cfg.pairs:
            q = acc.chan(s.env, a, b)
            if q:
                yield (b, a, q[0])

    def do_receive(s, x, src, msg):
        n = acc.node(s, x)
        s = acc.with_node(s, x, n._replace(ibuf=n.ibuf + ((src, msg),)))
        return s._replace(env=env_receive(cfg, acc, s.env, x, src, msg))

    def detects(s):
        for x in endpoints:
            n = acc.node(s, x)
            for y in sorted(n.live):
                if can_detect(x, n, y):
                    yield (x, y)

    def do_detect(s, x, y):
        n = acc.node(s, x)
        n2 = server_detect(x, n, y) if isinstance(x, int) else client_detect(x, n, y)
        return acc.with_node(s, x, n2)

    events = [
        GuardedEvent("send", sends,
                     lambda s, x, dst, msg: env_send_ok(cfg, acc, s.env, x, dst, msg), do_send),
        GuardedEvent("receive", receives,
                     lambda s, x, src, msg: env_receive_ok(cfg, acc, s.env, x, src, msg),
                     do_receive),
        GuardedEvent("detect", detects,
                     lambda s, x, y: env_detect_ok(cfg, acc, s.env, x, y), do_detect),
        GuardedEvent("crash", [(y,) for y in cfg.servers],
                     lambda s, y: env_crash_ok(cfg, s.env, y),
                     lambda s, y: s._replace(env=s.env._replace(live_env=s.env.live_env - {y}))),
    ]
    for name, kind, guard, update in _internal_events(cfg):
        owners = cfg.servers if kind == "server" else cfg.clients
        events.append(GuardedEvent(
            name, [(x,) for x in owners],
            lambda s, x, g=guard: g(x, acc.node(s, x)),
            lambda s, x, u=update: acc.with_node(s, x, u(x, acc.node(s, x)))))
    return GuardedEventSystem(tuple(events), frozenset([initial_state(cfg)]),
                              "replication").as_event_system()


# --------------------------------------------------------------------------
# decomposition


def repl_typing(cfg: ReplConfig) -> Typing:
    msgs = cfg.messages()
    sends = tuple((dst, m) for dst in cfg.endpoints for m in msgs)
    inputs = tuple((src, m) for src in cfg.endpoints for m in msgs)
    return Typing({"send": sends, "receive": (UNIT,), "detect": cfg.servers,
                   "handle_request": (UNIT,), "handle_sync": (UNIT,), "handle_ack": (UNIT,),
                   "issue": (UNIT,), "handle_reply": (UNIT,)},
                  lambda bio, v: inputs if bio == "receive" else (UNIT,))


def component(cfg: ReplConfig, x, typing: Optional[Typing] = None) -> IOGuardedES:
    """I/O-guarded model of server or client ``x``."""
    typing = typing or repl_typing(cfg)
    is_server = isinstance(x, int)
    unit = lambda s: (UNIT,)
    detect = server_detect if is_server else client_detect
    events = [
        IOEvent("send", lambda s: [s.obuf[0]] if s.obuf else [],
                lambda s, v, w: bool(s.obuf) and s.obuf[0] == v,
                lambda s, v, w: s._replace(obuf=s.obuf[1:]),
                text=EventText(("d", "m"), guard="(d, m) = head(obuf(s))",
                               update="s⟨obuf := tail(obuf(s))⟩")),
        IOEvent("receive", unit, lambda s, v, w: True,
                lambda s, v, w: s._replace(ibuf=s.ibuf + (w,)),
                text=EventText(input="(src, m)", update="s⟨ibuf := ibuf(s) · (src, m)⟩")),
        IOEvent("detect", lambda s: sorted(s.live - {x}),
                lambda s, y, w: can_detect(x, s, y),
                lambda s, y, w: detect(x, s, y),
                text=EventText(("y",), guard="y ∈ live(s) ∧ y ≠ x ∧ |live(s)| > 1",
                               update="detect(x, s, y)")),
    ]
    for name, kind, guard, update in _internal_events(cfg):
        if (kind == "server") == is_server:
            events.append(IOEvent(name, unit, lambda s, v, w, g=guard: g(x, s),
                                  lambda s, v, w, u=update: u(x, s), ghost=True,
                                  text=EventText(guard=f"can_{name}(x, s)",
                                                 update=f"{name}(x, s)")))
    init = initial_state(cfg)
    acc = _Access(cfg)
    return IOGuardedES(tuple(events), acc.node(init, x), typing, f"{'server' if is_server else 'client'}-{x}")


def environment(cfg: ReplConfig) -> EventSystem:
    acc = _Access(cfg)
    msgs = cfg.messages()

    def receives(env):
        for (a, b) in cfg.pairs:
            q = acc.chan(env, a, b)
            if q:
                yield (b, a, q[0])

    events = (
        GuardedEvent("env_send", [(a, b, m) for (a, b) in cfg.pairs for m in msgs],
                     lambda env, x, d, m: env_send_ok(cfg, acc, env, x, d, m),
                     lambda env, x, d, m: env_send(cfg, acc, env, x, d, m)),
        GuardedEvent("env_receive", receives,
                     lambda env, x, src, m: env_receive_ok(cfg, acc, env, x, src, m),
                     lambda env, x, src, m: env_receive(cfg, acc, env, x, src, m)),
        GuardedEvent("env_detect", [(x, y) for x in cfg.endpoints for y in cfg.servers if x != y],
                     lambda env, x, y: env_detect_ok(cfg, acc, env, x, y), lambda env, x, y: env),
        GuardedEvent("crash", [(y,) for y in cfg.servers],
                     lambda env, y: env_crash_ok(cfg, env, y),
                     lambda env, y: env._replace(live_env=env.live_env - {y})),
    )
    return GuardedEventSystem(events, frozenset([initial_state(cfg).env]),
                              "repl-env").as_event_system()


def _combine(e1, e2):
    if e1 == SKIP:
        return e2 if isinstance(e2, Event) and e2.name == "crash" else None
    if not isinstance(e1, Indexed):
        return None
    x, act = e1.index, e1.event
    if act.bio == "send":
        dst, msg = act.out
        return Event("send", (x, dst, msg)) if e2 == Event("env_send", (x, dst, msg)) else None
    if act.bio == "receive":
        src, msg = act.inp
        return Event("receive", (x, src, msg)) if e2 == Event("env_receive", (x, src, msg)) else None
    if act.bio == "detect":
        return Event("detect", (x, act.out)) if e2 == Event("env_detect", (x, act.out)) else None
    return Event(act.bio, (x,)) if e2 == SKIP else None


CHI_E = SyncMap(_combine, "chi_e")


# --------------------------------------------------------------------------
# properties


def reply_consistent(cfg: ReplConfig, s: ReplState, e) -> bool:
    """At a reply send, the primary's log is a prefix of every live backup's."""
    if not (isinstance(e, Event) and e.name == "send" and isinstance(e.params[2], Reply)):
        return True
    acc = _Access(cfg)
    p = e.params[0]
    log = acc.node(s, p).log
    return all(is_prefix(log, acc.node(s, b).log)
               for b in s.env.live_env if b != p)


def live_superset(cfg: ReplConfig, s: ReplState) -> bool:
    return all(s.env.live_env <= n.live for n in s.servers + s.clients)


def logs_grow(cfg: ReplConfig, s: ReplState, t: ReplState) -> bool:
    return all(is_prefix(a.log, b.log) for a, b in zip(s.servers, t.servers))


def transit(cfg: ReplConfig, s: ReplState, a: int, b: int) -> list:
    """Logs carried by messages from ``a`` to ``b``, oldest first."""
    acc = _Access(cfg)
    na, nb = acc.node(s, a), acc.node(s, b)
    msgs = [m for src, m in nb.ibuf if src == a]
    msgs += list(acc.chan(s.env, a, b))
    msgs += [m for dst, m in na.obuf if dst == b]
    return [m.log for m in msgs if isinstance(m, (Sync, Ack))]


def sync_invariant(cfg: ReplConfig, s: ReplState) -> bool:
    """For a live primary ``a`` and a live backup ``b`` that has acknowledged
    one of its pushes, all logs between them are prefix-ordered."""
    acc = _Access(cfg)
    for a in cfg.servers:
        na = acc.node(s, a)
        if a not in s.env.live_env or not believes_primary(a, na):
            continue
        for b in na.synced:
            if b not in s.env.live_env:
                continue
            seq = ([na.log] + transit(cfg, s, b, a) + [acc.node(s, b).log]
                   + transit(cfg, s, a, b) + [na.pend])
            if not ordered_wrt_prefix(seq):
                return False
    return True


@dataclass(frozen=True)
class ReplStack:
    cfg: ReplConfig
    protocol: EventSystem
    components: dict = field(default_factory=dict)
    env: Optional[EventSystem] = None
    chi_e: SyncMap = CHI_E

    def consistency(self, s, e, t) -> bool:
        return reply_consistent(self.cfg, s, e)

    def recomposed(self) -> EventSystem:
        family = interleave_family({x: c.as_event_system() for x, c in self.components.items()})
        return compose_parallel(family, self.env, self.chi_e)


def build_repl_stack(n_servers: int, n_clients: int = 1, op_domain: tuple = ("x",),
                     max_crashes: Optional[int] = None, wait_for_acks: bool = True) -> ReplStack:
    cfg = ReplConfig(n_servers, n_clients, tuple(op_domain), max_crashes, wait_for_acks)
    typing = repl_typing(cfg)
    comps = {x: component(cfg, x, typing) for x in cfg.endpoints}
    return ReplStack(cfg, protocol_model(cfg), comps, environment(cfg))


def find_inconsistency(stack: ReplStack, depth: int, node_limit: int = 2_000_000):
    """Breadth-first search for a reply sent while some live backup's log
    does not extend the primary's, or for a broken structural invariant."""
    cfg = stack.cfg
    return find_violation(
        stack.protocol, stack.protocol.initial, depth,
        state_ok=lambda s: live_superset(cfg, s) and sync_invariant(cfg, s),
        step_ok=lambda s, e, t: reply_consistent(cfg, t, e) and logs_grow(cfg, s, t),
        node_limit=node_limit)
