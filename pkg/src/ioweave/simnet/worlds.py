"""Per-protocol wiring for the simulator: node programs with their
component models, the environment that executes their calls, the mapping
of observed actions onto global events, and online property checks."""

from __future__ import annotations

import random
from typing import Any, Optional

from ..kernel import EventSystem
from ..process import IOGuardedES
from ..protocols import auth, leader, replication
from ..values import UNIT, Action, Event
from .channels import FifoChannels, LossySetChannels
from .faults import FailureDetector, FaultPlan
from .programs import (Call, Program, auth_agent, leader_node, leader_node_forgetful,
                       repl_client, repl_server)


class World:
    """Environment and bookkeeping shared by all scenarios."""

    chi_e: Any
    message_types: tuple = ()
    consuming = False

    def __init__(self, scenario: dict, plan: FaultPlan, rng: random.Random):
        self.scenario = scenario
        self.plan = plan
        self.rng = rng
        self.counts: dict = {}

    # nodes -------------------------------------------------------------
    def nodes(self) -> dict[Any, tuple[IOGuardedES, Program]]:
        raise NotImplementedError

    def alive(self, node) -> bool:
        return True

    def before_step(self, step: int) -> list[Event]:
        """Environment events (crashes) happening at ``step``."""
        return []

    # I/O ---------------------------------------------------------------
    def perform(self, node, call: Call, step: int) -> Optional[Any]:
        raise NotImplementedError

    def env_event(self, node, action: Action) -> Event:
        raise NotImplementedError

    # properties ----------------------------------------------------------
    def check(self, node, event: Event, monitors: dict, history: list) -> list[str]:
        return []

    def interface(self) -> EventSystem:
        raise NotImplementedError

    def channel_key(self, event: Event) -> Optional[tuple]:
        """``("send" | "recv", key)`` pairing deliveries with their sends."""
        return None

    def bump(self, key: str) -> None:
        self.counts[key] = self.counts.get(key, 0) + 1


class LeaderWorld(World):
    def __init__(self, scenario, plan, rng):
        super().__init__(scenario, plan, rng)
        ids = scenario["ring"]
        self.cfg = leader.RingConfig.ring(ids, scenario.get("order"))
        self.net = LossySetChannels(float(scenario.get("loss", 0.0)))
        self.stack = leader.build_leader_stack(self.cfg)
        self.chi_e = self.stack.chi_e
        self.buggy = set(scenario.get("buggy", ()))
        self.counts = {"elects": 0}

    def nodes(self):
        out = {}
        for i in self.cfg.ids:
            prog = leader_node_forgetful if i in self.buggy else leader_node
            out[i] = (self.stack.components[i], prog(*leader.gamma(self.cfg, i)))
        return out

    def perform(self, node, call, step):
        if call.bio == "send":
            m, a = call.out
            self.net.send(a, m)
            return UNIT
        if call.bio == "receive":
            return self.net.receive(self.cfg.addr[node], self.rng)
        raise ValueError(f"unknown call {call}")

    def env_event(self, node, action):
        if action.bio == "send":
            m, a = action.out
            return Event("env_send", (node, m, a))
        return Event("env_receive", (node, action.inp))

    def check(self, node, event, monitors, history):
        if event.name != "elect":
            return []
        self.bump("elects")
        problems = []
        if node != self.cfg.max_id():
            problems.append(f"node {node} elected but {self.cfg.max_id()} is the maximum")
        others = {e.params[0] for e in history if e.name == "elect"} - {node}
        if others:
            problems.append(f"second leader {node} after {sorted(others)}")
        return problems

    def interface(self):
        return self.stack.interface

    def channel_key(self, event):
        if event.name == "send":
            _i, m, a = event.params
            return "send", (a, m)
        if event.name == "receive":
            i, m = event.params
            return "recv", (self.cfg.addr[i], m)
        return None


class ReplicationWorld(World):
    def __init__(self, scenario, plan, rng):
        super().__init__(scenario, plan, rng)
        crashes = len({c[0] for c in plan.crashes})
        self.stack = replication.build_repl_stack(
            int(scenario["servers"]), int(scenario.get("clients", 1)),
            tuple(scenario.get("ops", ("x",))), max_crashes=crashes)
        self.cfg = self.stack.cfg
        self.chi_e = self.stack.chi_e
        self.net = FifoChannels()
        self.detector = FailureDetector(plan, self.cfg.endpoints, rng)
        self.live_env = set(self.cfg.servers)
        self.crash_at = {}
        for y, at in plan.crashes:
            self.crash_at.setdefault(at, []).append(y)
        self.counts = {"replies": 0, "crashes": 0}
        self.logs: dict = {}

    def nodes(self):
        out = {}
        for x in self.cfg.servers:
            out[x] = (self.stack.components[x], repl_server(x, self.cfg.servers))
        for c in self.cfg.clients:
            out[c] = (self.stack.components[c], repl_client(c, self.cfg.servers, self.cfg.ops))
        return out

    def alive(self, node):
        return not isinstance(node, int) or node in self.live_env

    def before_step(self, step):
        events = []
        for y in self.crash_at.get(step, ()):
            if y in self.live_env and len(self.live_env) > 1:
                self.live_env.discard(y)
                self.detector.crash(y, step)
                self.bump("crashes")
                events.append(Event("crash", (y,)))
        return events

    def perform(self, node, call, step):
        if call.bio == "send":
            dst, msg = call.out
            self.net.send(node, dst, msg)
            return UNIT
        if call.bio == "receive":
            return self.net.receive(node, self.rng)
        if call.bio == "detect":
            return UNIT if self.detector.reports(node, call.out, step) else None
        raise ValueError(f"unknown call {call}")

    def env_event(self, node, action):
        if action.bio == "send":
            dst, msg = action.out
            return Event("env_send", (node, dst, msg))
        if action.bio == "receive":
            src, msg = action.inp
            return Event("env_receive", (node, src, msg))
        return Event("env_detect", (node, action.out))

    def check(self, node, event, monitors, history):
        problems = []
        for x, mon in monitors.items():
            if not self.live_env <= mon.current.live:
                problems.append(f"live_env not within live set of {x}")
        for x in self.cfg.servers:
            log = monitors[x].current.log
            if not replication.is_prefix(self.logs.get(x, ()), log):
                problems.append(f"log of server {x} shrank")
            self.logs[x] = log
        if event is not None and event.name == "send" and isinstance(event.params[2], replication.Reply):
            self.bump("replies")
            log = monitors[node].current.log
            for b in sorted(self.live_env - {node}):
                if not replication.is_prefix(log, monitors[b].current.log):
                    problems.append(f"reply by {node}: log not a prefix of backup {b}")
        return problems

    def interface(self):
        return self.stack.protocol

    message_types = (replication.Request, replication.Sync, replication.Ack, replication.Reply)
    consuming = True

    def channel_key(self, event):
        if event.name == "send":
            x, dst, msg = event.params
            return "send", (x, dst, msg)
        if event.name == "receive":
            x, src, msg = event.params
            return "recv", (src, x, msg)
        return None


class AuthWorld(World):
    def __init__(self, scenario, plan, rng):
        super().__init__(scenario, plan, rng)
        self.stack = auth.build_auth_stack(tuple(scenario.get("agents", ("A", "B"))),
                                           int(scenario.get("runs", 1)))
        self.cfg = self.stack.cfg
        self.chi_e = self.stack.chi_e
        self.inject = float(scenario.get("inject", 0.2))
        self.ik = set(self.cfg.initial_knowledge())
        self.sent: list = []
        self.universe = sorted(self.cfg.universe(), key=repr)
        self.counts = {"commits": 0}

    def nodes(self):
        peers = self.scenario.get("initiators", {})
        return {a: (self.stack.components[a], auth_agent(self.cfg, a, peers.get(a)))
                for a in self.cfg.agents}

    def perform(self, node, call, step):
        if call.bio == "send":
            self.ik.add(call.out)
            self.sent.append(call.out)
            return UNIT
        if call.bio == "recv":
            if self.rng.random() < self.inject:
                known = auth.analyse(self.ik)
                pool = [t for t in self.universe if auth.derivable(t, known)]
                return self.rng.choice(pool)
            if self.sent and self.rng.random() < 0.5:
                return self.rng.choice(self.sent)
            return None
        raise ValueError(f"unknown call {call}")

    def env_event(self, node, action):
        if action.bio == "send":
            return Event("env_send", (node, action.out))
        return Event("env_recv", (node, action.inp))

    def check(self, node, event, monitors, history):
        if event is None or event.name != "commit":
            return []
        self.bump("commits")
        if not auth.agreement_holds(self.cfg, history):
            return [f"agreement violated at commit {event}"]
        return []

    def interface(self):
        return auth.protocol_model(self.cfg, receive_any=True)

    message_types = (auth.Agent, auth.Nonce, auth.PubKey, auth.PriKey, auth.Pair, auth.Sign,
                     auth._Junk)


WORLDS = {"leader": LeaderWorld, "replication": ReplicationWorld, "auth": AuthWorld}
