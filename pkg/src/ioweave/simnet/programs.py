"""Implementation-level node programs.

Programs are generators. Each ``yield Call(...)`` is one library call; the
simulator sends back the input it returned, or ``None`` when a receive or a
failure-detector query timed out. Programs keep their own data structures
and never consult the component models; the monitors compare the two.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Generator, Optional

from ..protocols import auth as A
from ..protocols.replication import Ack, Reply, Request, Sync
from ..values import UNIT


@dataclass(frozen=True)
class Call:
    bio: str
    out: Any = UNIT
    ghost: bool = False


Program = Generator[Call, Any, None]


# --------------------------------------------------------------------------
# leader election


def leader_node(my_id: int, out_addr: str) -> Program:
    """Forward the largest id seen so far; elect on seeing our own id."""
    to_send = my_id
    yield Call("setup", ghost=True)
    while True:
        yield Call("send", (to_send, out_addr))
        msg = yield Call("receive")
        if msg is None:
            continue
        if msg == my_id:
            yield Call("elect", ghost=True)
            return
        if msg > to_send:
            yield Call("accept", msg, ghost=True)
            to_send = msg


def leader_node_forgetful(my_id: int, out_addr: str) -> Program:
    """Buggy variant that forwards larger ids without recording them."""
    to_send = my_id
    yield Call("setup", ghost=True)
    while True:
        yield Call("send", (to_send, out_addr))
        msg = yield Call("receive")
        if msg is None:
            continue
        if msg == my_id:
            yield Call("elect", ghost=True)
            return
        if msg > to_send:
            to_send = msg


# --------------------------------------------------------------------------
# primary-backup replication


class _Server:
    def __init__(self, me: int, servers):
        self.me = me
        self.log: list = []
        self.pend: list = []
        self.live = set(servers)
        self.inbox: list = []
        self.outbox: deque = deque()
        self.current: Optional[Request] = None
        self.waiting: Optional[int] = None
        self.acked: set = set()

    def is_primary(self) -> bool:
        return min(self.live) == self.me

    def next_backup(self) -> None:
        rest = sorted(b for b in self.live if b != self.me and b not in self.acked)
        if rest:
            self.waiting = rest[0]
            self.outbox.append((rest[0], Sync(tuple(self.pend))))
            return
        self.log = list(self.pend)
        self.outbox.append((self.current.client, Reply(self.current.op)))
        self.current, self.waiting, self.acked = None, None, set()

    def take(self, kind: type) -> Optional[tuple]:
        for k, (src, msg) in enumerate(self.inbox):
            if isinstance(msg, kind):
                return self.inbox.pop(k)
        return None

    def has(self, kind: type) -> bool:
        return any(isinstance(m, kind) for _s, m in self.inbox)


def repl_server(me: int, servers) -> Program:
    srv = _Server(me, servers)
    while True:
        while srv.outbox:
            yield Call("send", srv.outbox[0])
            srv.outbox.popleft()
        got = yield Call("receive")
        if got is not None:
            srv.inbox.append(got)
        if srv.has(Sync):
            yield Call("handle_sync", ghost=True)
            src, msg = srv.take(Sync)
            srv.outbox.append((src, Ack(msg.log)))
            if srv.current is None and tuple(srv.log) == msg.log[:len(srv.log)]:
                srv.log = list(msg.log)
                srv.pend = list(msg.log)
        if srv.has(Ack):
            yield Call("handle_ack", ghost=True)
            src, msg = srv.take(Ack)
            if srv.current is not None and src == srv.waiting and msg.log == tuple(srv.pend):
                srv.acked.add(src)
                srv.next_backup()
        if srv.current is None and srv.is_primary() and srv.has(Request):
            yield Call("handle_request", ghost=True)
            _src, req = srv.take(Request)
            srv.pend = srv.log + [req.op]
            srv.current, srv.acked = req, set()
            srv.next_backup()
        for y in sorted(srv.live - {me}):
            if len(srv.live) < 2:
                break
            if (yield Call("detect", y)) is not None:
                srv.live.discard(y)
                if srv.current is not None and srv.waiting == y:
                    srv.next_backup()


def repl_client(me: str, servers, ops) -> Program:
    live = set(servers)
    outbox: deque = deque()
    for op in ops:
        yield Call("issue", ghost=True)
        target = min(live)
        outbox.append((target, Request(op, me)))
        done = False
        while not done:
            while outbox:
                yield Call("send", outbox[0])
                outbox.popleft()
            got = yield Call("receive")
            if got is not None and isinstance(got[1], Reply):
                yield Call("handle_reply", ghost=True)
                done = got[1].op == op
            if not done and len(live) > 1 and (yield Call("detect", target)) is not None:
                live.discard(target)
                target = min(live)
                outbox.append((target, Request(op, me)))


# --------------------------------------------------------------------------
# authentication


def auth_agent(cfg: "A.AuthConfig", me: str, peer: Optional[str] = None) -> Program:
    """Honest agent; initiates towards ``peer`` if given, always responds."""
    init = {"na": cfg.nonce(me, "init", 0), "peer": peer, "state": "idle"}
    resp = {"nonce": cfg.nonce(me, "resp", 0), "state": "idle"}
    if peer is not None:
        yield Call("send", cfg.m1(me, peer, init["na"]))
        init["state"] = "waiting"
    while True:
        msg = yield Call("recv")
        if msg is None:
            continue
        if resp["state"] == "idle" and isinstance(msg, A.Pair) and isinstance(msg.fst, A.Agent) \
                and isinstance(msg.snd, A.Pair) and msg.snd.fst == A.Agent(me) \
                and isinstance(msg.snd.snd, A.Nonce) and msg.fst.name != me:
            a, na, nb = msg.fst.name, msg.snd.snd, resp["nonce"]
            resp["state"] = "done"
            yield Call("running", (a, me, na, nb), ghost=True)
            yield Call("send", cfg.m2(me, nb, na, a))
        elif init["state"] == "waiting" and isinstance(msg, A.Sign) \
                and msg.key == A.PriKey(peer) and isinstance(msg.body, A.Pair) \
                and isinstance(msg.body.fst, A.Nonce) \
                and msg == cfg.m2(peer, msg.body.fst, init["na"], me):
            init["state"] = "done"
            yield Call("commit", (me, peer, init["na"], msg.body.fst), ghost=True)
