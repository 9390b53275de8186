"""Signature-based two-message authentication with a Dolev-Yao attacker.

    A -> B : A, B, Na
    B -> A : sign_B(Nb, Na, A)

Messages are symbolic terms. The network is the attacker: every sent
message joins its knowledge ``ik`` and every received message must be
derivable from ``ik``. The goal is injective agreement: each initiator
commit on ``(A, B, Na, Nb)`` with an honest ``B`` is matched by its own
responder run of ``B`` on the same data.

The mutant drops ``A`` from the signed payload, which admits the classic
man-in-the-middle where the attacker relays a responder's answer meant for
itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple, Optional

from ..errors import UniverseNotClosed
from ..kernel import (SKIP, EventSystem, GuardedEvent, GuardedEventSystem, SyncMap,
                      TraceProperty, compose_parallel, interleave_family)
from ..process import EventText, IOEvent, IOGuardedES, Typing
from ..values import UNIT, Event, Indexed, canonical

ATTACKER = "I"


@dataclass(frozen=True)
class Agent:
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Nonce:
    owner: str
    index: int

    def __repr__(self) -> str:
        return f"N{self.owner}{self.index}"


@dataclass(frozen=True)
class PubKey:
    agent: str

    def __repr__(self) -> str:
        return f"pub({self.agent})"


@dataclass(frozen=True)
class PriKey:
    agent: str

    def __repr__(self) -> str:
        return f"pri({self.agent})"


@dataclass(frozen=True)
class Pair:
    fst: object
    snd: object

    def __repr__(self) -> str:
        return f"<{self.fst!r},{self.snd!r}>"


@dataclass(frozen=True)
class Sign:
    key: PriKey
    body: object

    def __repr__(self) -> str:
        return f"[{self.body!r}]{self.key!r}"


@dataclass(frozen=True)
class _Junk:
    def __repr__(self) -> str:
        return "Junk"


JUNK = _Junk()


def sign(key: PriKey, body) -> Sign:
    if not isinstance(key, PriKey):
        raise TypeError("only private keys sign")
    return Sign(key, body)


def subterms(t) -> set:
    out = {t}
    if isinstance(t, Pair):
        out |= subterms(t.fst) | subterms(t.snd)
    elif isinstance(t, Sign):
        out |= subterms(t.key) | subterms(t.body)
    return out


# --------------------------------------------------------------------------
# attacker deduction


def analyse(known: Iterable) -> frozenset:
    """Close ``known`` under projection and payload extraction."""
    seen = set(known)
    todo = list(seen)
    while todo:
        t = todo.pop()
        parts = (t.fst, t.snd) if isinstance(t, Pair) else (t.body,) if isinstance(t, Sign) else ()
        for p in parts:
            if p not in seen:
                seen.add(p)
                todo.append(p)
    return frozenset(seen)


def derivable(t, analysed: frozenset) -> bool:
    """Whether ``t`` can be composed from an analysed knowledge set."""
    if t in analysed or isinstance(t, (Agent, PubKey)) or t == JUNK:
        return True
    if isinstance(t, Pair):
        return derivable(t.fst, analysed) and derivable(t.snd, analysed)
    if isinstance(t, Sign):
        return t.key in analysed and derivable(t.body, analysed)
    return False


def dy_closure(known: Iterable, universe: Iterable) -> frozenset:
    """Least superset of ``known`` inside ``universe`` closed under pairing,
    projection, signing with known private keys and payload extraction.
    Names and public keys are always derivable."""
    universe = frozenset(universe)
    for t in universe:
        if not subterms(t) <= universe:
            raise UniverseNotClosed(f"universe lacks subterms of {t!r}")
    known = set(known)
    if not known <= universe:
        raise UniverseNotClosed("knowledge outside the universe")
    known |= {t for t in universe if isinstance(t, (Agent, PubKey)) or t == JUNK}
    composite = [t for t in universe if isinstance(t, (Pair, Sign))]
    changed = True
    while changed:
        changed = False
        for t in list(known):
            parts = (t.fst, t.snd) if isinstance(t, Pair) else (t.body,) if isinstance(t, Sign) else ()
            for p in parts:
                if p not in known:
                    known.add(p)
                    changed = True
        for t in composite:
            if t in known:
                continue
            if isinstance(t, Pair):
                ok = t.fst in known and t.snd in known
            else:
                ok = t.key in known and t.body in known
            if ok:
                known.add(t)
                changed = True
    return frozenset(known)


# --------------------------------------------------------------------------
# configuration and messages


@dataclass(frozen=True)
class AuthConfig:
    agents: tuple = ("A", "B")
    max_runs: int = 1
    mutant: bool = False

    @property
    def principals(self) -> tuple:
        return self.agents + (ATTACKER,)

    def nonce(self, agent: str, role: str, run: int) -> Nonce:
        return Nonce(agent, 2 * run + (role == "resp"))

    def nonces(self) -> list:
        ns = [self.nonce(a, r, k) for a in self.agents for r in ("init", "resp")
              for k in range(self.max_runs)]
        return ns + [Nonce(ATTACKER, 0)]

    def m1(self, a: str, b: str, na: Nonce) -> Pair:
        return Pair(Agent(a), Pair(Agent(b), na))

    def m2(self, b: str, nb: Nonce, na: Nonce, a: str) -> Sign:
        body = Pair(nb, na) if self.mutant else Pair(nb, Pair(na, Agent(a)))
        return sign(PriKey(b), body)

    def initial_knowledge(self) -> frozenset:
        return frozenset([PriKey(ATTACKER), Nonce(ATTACKER, 0), JUNK]
                         + [Agent(x) for x in self.principals]
                         + [PubKey(x) for x in self.principals])

    def universe(self) -> frozenset:
        ns = self.nonces()
        ps = self.principals
        terms = set(self.initial_knowledge()) | set(ns) | {PriKey(x) for x in ps}
        for a in ps:
            for b in ps:
                for n1 in ns:
                    terms |= subterms(self.m1(a, b, n1))
                    for n2 in ns:
                        terms |= subterms(self.m2(b, n2, n1, a))
        return frozenset(terms)


class Run(NamedTuple):
    role: str
    nonce: Nonce
    peer: Optional[str] = None
    na: Optional[Nonce] = None
    nb: Optional[Nonce] = None
    step: int = 0


class AuthState(NamedTuple):
    agents: tuple
    ik: frozenset


def initial_runs(cfg: AuthConfig, a: str) -> tuple:
    return tuple(Run(role, cfg.nonce(a, role, k))
                 for role in ("init", "resp") for k in range(cfg.max_runs))


# per-agent behaviour, shared by the global model and the components


def sendable(cfg: AuthConfig, me: str, runs: tuple) -> list:
    out = []
    for r in runs:
        if r.role == "init" and r.step == 0:
            out += [cfg.m1(me, b, r.nonce) for b in cfg.principals if b != me]
        elif r.role == "resp" and r.step == 2:
            out.append(cfg.m2(me, r.nb, r.na, r.peer))
    return out


def after_send(cfg: AuthConfig, me: str, runs: tuple, m) -> tuple:
    for k, r in enumerate(runs):
        if r.role == "init" and r.step == 0:
            for b in cfg.principals:
                if b != me and m == cfg.m1(me, b, r.nonce):
                    return _set(runs, k, r._replace(peer=b, na=r.nonce, step=1))
        elif r.role == "resp" and r.step == 2 and m == cfg.m2(me, r.nb, r.na, r.peer):
            return _set(runs, k, r._replace(step=3))
    return runs


def _set(runs: tuple, k: int, r: Run) -> tuple:
    return runs[:k] + (r,) + runs[k + 1:]


def _match_m1(cfg: AuthConfig, me: str, m):
    if (isinstance(m, Pair) and isinstance(m.fst, Agent) and isinstance(m.snd, Pair)
            and m.snd.fst == Agent(me) and isinstance(m.snd.snd, Nonce)
            and m.fst.name != me):
        return m.fst.name, m.snd.snd
    return None


def _match_m2(cfg: AuthConfig, me: str, r: Run, m):
    if not (isinstance(m, Sign) and m.key == PriKey(r.peer) and isinstance(m.body, Pair)):
        return None
    nb = m.body.fst
    if isinstance(nb, Nonce) and m == cfg.m2(r.peer, nb, r.na, me):
        return nb
    return None


def after_receive(cfg: AuthConfig, me: str, runs: tuple, m) -> tuple:
    """Hand ``m`` to the first run waiting for it; unmatched input is dropped."""
    for k, r in enumerate(runs):
        if r.role == "resp" and r.step == 0:
            hit = _match_m1(cfg, me, m)
            if hit:
                peer, na = hit
                return _set(runs, k, r._replace(peer=peer, na=na, nb=r.nonce, step=1))
        elif r.role == "init" and r.step == 1:
            nb = _match_m2(cfg, me, r, m)
            if nb is not None:
                return _set(runs, k, r._replace(nb=nb, step=2))
    return runs


def acceptable(cfg: AuthConfig, me: str, runs: tuple) -> list:
    """Messages some waiting run of ``me`` would accept."""
    out: set = set()
    for r in runs:
        if r.role == "resp" and r.step == 0:
            out |= {cfg.m1(x, me, n) for x in cfg.principals if x != me for n in cfg.nonces()}
        elif r.role == "init" and r.step == 1:
            out |= {cfg.m2(r.peer, n, r.na, me) for n in cfg.nonces()}
    return canonical(out)


def ghost_signals(me: str, runs: tuple) -> list:
    """``(bio, data, run index)`` for the enabled commit/running signals."""
    out = []
    for k, r in enumerate(runs):
        if r.role == "init" and r.step == 2:
            out.append(("commit", (me, r.peer, r.na, r.nb), k))
        elif r.role == "resp" and r.step == 1:
            out.append(("running", (r.peer, me, r.na, r.nb), k))
    return out


def after_signal(runs: tuple, k: int) -> tuple:
    r = runs[k]
    return _set(runs, k, r._replace(step=r.step + 1))


# --------------------------------------------------------------------------
# models


class _Knowledge:
    """Caches the derivable part of the universe per attacker knowledge."""

    def __init__(self, cfg: AuthConfig):
        self.universe = canonical(cfg.universe())

    @lru_cache(maxsize=None)
    def analysed(self, ik: frozenset) -> frozenset:
        return analyse(ik)

    @lru_cache(maxsize=None)
    def derivable_terms(self, ik: frozenset) -> tuple:
        a = self.analysed(ik)
        return tuple(t for t in self.universe if derivable(t, a))


def protocol_model(cfg: AuthConfig, receive_any: bool = False) -> EventSystem:
    """Global model. By default agents only receive messages some run is
    waiting for; ``receive_any`` adds the receptions that are dropped, which
    makes the model trace-equal to the recomposed components."""
    know = _Knowledge(cfg)
    pos = {a: k for k, a in enumerate(cfg.agents)}

    def with_runs(s, a, runs):
        k = pos[a]
        return s._replace(agents=s.agents[:k] + (runs,) + s.agents[k + 1:])

    def sends(s):
        return [(a, m) for a in cfg.agents for m in sendable(cfg, a, s.agents[pos[a]])]

    def receives(s):
        if receive_any:
            return [(a, m) for a in cfg.agents for m in know.derivable_terms(s.ik)]
        an = know.analysed(s.ik)
        return [(a, m) for a in cfg.agents for m in acceptable(cfg, a, s.agents[pos[a]])
                if derivable(m, an)]

    def signals(name):
        def params(s):
            return [(a,) + data for a in cfg.agents
                    for bio, data, _k in ghost_signals(a, s.agents[pos[a]]) if bio == name]
        return params

    def do_signal(name):
        def update(s, a, *data):
            runs = s.agents[pos[a]]
            k = next(k for bio, d, k in ghost_signals(a, runs) if bio == name and d == data)
            return with_runs(s, a, after_signal(runs, k))
        return update

    events = (
        GuardedEvent("send", sends, lambda s, a, m: True,
                     lambda s, a, m: with_runs(s, a, after_send(cfg, a, s.agents[pos[a]], m))
                     ._replace(ik=s.ik | {m})),
        GuardedEvent("recv", receives, lambda s, a, m: True,
                     lambda s, a, m: with_runs(s, a, after_receive(cfg, a, s.agents[pos[a]], m))),
        GuardedEvent("commit", signals("commit"), lambda s, *p: True, do_signal("commit")),
        GuardedEvent("running", signals("running"), lambda s, *p: True, do_signal("running")),
    )
    init = AuthState(tuple(initial_runs(cfg, a) for a in cfg.agents), cfg.initial_knowledge())
    return GuardedEventSystem(events, frozenset([init]), "auth").as_event_system()


def auth_typing(cfg: AuthConfig) -> Typing:
    msgs = tuple(canonical(cfg.universe()))
    data = tuple((a, b, na, nb) for a in cfg.principals for b in cfg.principals
                 for na in cfg.nonces() for nb in cfg.nonces())
    return Typing({"send": msgs, "recv": (UNIT,), "commit": data, "running": data},
                  lambda bio, v: msgs if bio == "recv" else (UNIT,))


def component(cfg: AuthConfig, a: str, typing: Optional[Typing] = None) -> IOGuardedES:
    """I/O-guarded model of honest agent ``a`` running all its role instances."""
    typing = typing or auth_typing(cfg)

    def signal(name):
        def outputs(runs):
            return [d for bio, d, _k in ghost_signals(a, runs) if bio == name]

        def update(runs, v, w):
            k = next(k for bio, d, k in ghost_signals(a, runs) if bio == name and d == v)
            return after_signal(runs, k)

        return IOEvent(name, outputs, lambda runs, v, w: v in outputs(runs), update, ghost=True,
                       text=EventText(("d",), guard=f"d ∈ {name}_signals(s)",
                                      update="after_signal(s, d)"))

    events = (
        IOEvent("send", lambda runs: sendable(cfg, a, runs),
                lambda runs, v, w: v in sendable(cfg, a, runs),
                lambda runs, v, w: after_send(cfg, a, runs, v),
                text=EventText(("m",), guard="m ∈ sendable(s)", update="after_send(s, m)")),
        IOEvent("recv", lambda runs: [UNIT], lambda runs, v, w: True,
                lambda runs, v, w: after_receive(cfg, a, runs, w),
                text=EventText(input="m", update="after_receive(s, m)")),
        signal("commit"),
        signal("running"),
    )
    return IOGuardedES(events, initial_runs(cfg, a), typing, f"agent-{a}")


def environment(cfg: AuthConfig) -> EventSystem:
    """The attacker: learns every sent message, supplies every derivable one."""
    know = _Knowledge(cfg)
    universe = know.universe
    events = (
        GuardedEvent("env_send", [(a, m) for a in cfg.agents for m in universe],
                     lambda ik, a, m: True, lambda ik, a, m: ik | {m}),
        GuardedEvent("env_recv", lambda ik: [(a, m) for a in cfg.agents
                                             for m in know.derivable_terms(ik)],
                     lambda ik, a, m: True, lambda ik, a, m: ik),
    )
    return GuardedEventSystem(events, frozenset([cfg.initial_knowledge()]),
                              "dolev-yao").as_event_system()


def _combine(e1, e2):
    if not isinstance(e1, Indexed):
        return None
    a, act = e1.index, e1.event
    if act.bio == "send":
        return Event("send", (a, act.out)) if e2 == Event("env_send", (a, act.out)) else None
    if act.bio == "recv":
        return Event("recv", (a, act.inp)) if e2 == Event("env_recv", (a, act.inp)) else None
    return Event(act.bio, (a,) + tuple(act.out)) if e2 == SKIP else None


CHI_E = SyncMap(_combine, "chi_e")


def agreement_holds(cfg: AuthConfig, trace: Iterable) -> bool:
    """Injective agreement for initiators talking to honest responders."""
    commits: dict = {}
    running: dict = {}
    for e in trace:
        if not isinstance(e, Event):
            continue
        if e.name == "commit":
            data = e.params[1:]
            if data[1] in cfg.agents:
                commits[data] = commits.get(data, 0) + 1
        elif e.name == "running":
            data = e.params[1:]
            running[data] = running.get(data, 0) + 1
    return all(running.get(d, 0) >= n for d, n in commits.items())


def agreement_property(cfg: AuthConfig) -> TraceProperty:
    return TraceProperty(lambda t: agreement_holds(cfg, t), "injective-agreement")


@dataclass(frozen=True)
class AuthStack:
    cfg: AuthConfig
    protocol: EventSystem
    components: dict = field(default_factory=dict)
    env: Optional[EventSystem] = None
    chi_e: SyncMap = CHI_E
    agreement: Optional[TraceProperty] = None

    def recomposed(self) -> EventSystem:
        family = interleave_family({a: c.as_event_system() for a, c in self.components.items()})
        return compose_parallel(family, self.env, self.chi_e)


def build_auth_stack(agents: tuple = ("A", "B"), max_runs: int = 1,
                     mutant: bool = False) -> AuthStack:
    cfg = AuthConfig(tuple(agents), max_runs, mutant)
    typing = auth_typing(cfg)
    comps = {a: component(cfg, a, typing) for a in cfg.agents}
    return AuthStack(cfg, protocol_model(cfg), comps, environment(cfg), CHI_E,
                     agreement_property(cfg))


def find_attack(stack: AuthStack, depth: int, node_limit: int = 2_000_000):
    """Shortest trace (up to ``depth``) that breaks agreement, or ``None``.

    Agreement can only fail at a commit, so checking the commit steps along
    every reachable path covers all traces.
    """
    from ..kernel import find_violation

    cfg = stack.cfg

    def step_ok(s, e, t):
        if e.name != "commit" or e.params[2] not in cfg.agents:
            return True
        return _committed_ok(s, e)

    def _committed_ok(s, e):
        # responder run of the peer that produced this data, still pending or done
        a, b, na, nb = e.params[1:]
        runs = s.agents[cfg.agents.index(b)]
        matching = [r for r in runs if r.role == "resp" and r.step >= 2
                    and (r.peer, r.na, r.nb) == (a, na, nb)]
        # each initiator run commits at most once and carries its own nonce,
        # so a matching responder run cannot be shared between commits
        return bool(matching)

    return find_violation(stack.protocol, stack.protocol.initial, depth,
                          step_ok=step_ok, node_limit=node_limit)
