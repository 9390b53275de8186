import random

import pytest
from hypothesis import given, settings, strategies as st

from ioweave.kernel import enumerate_traces
from ioweave.monitor import (Backend, DenyReason, Monitor, commit, commit_ghost,
                             monitor_new, observed_trace, permitted_outputs, request_output)
from ioweave.oracles import random_io_guarded
from ioweave.process import IOGuardedES, Typing
from ioweave.protocols import leader
from ioweave.values import UNIT, Action

BACKENDS = [Backend.ES, Backend.HEAP]
seeds = st.integers(min_value=0, max_value=10_000)

# ring 1 -> 3 -> 2 -> 1, so node 2 forwards to the address of node 1
CFG = leader.RingConfig.ring([1, 2, 3], order=[1, 3, 2])
A1 = CFG.addr[1]


def node2():
    return leader.node_component(CFG, *leader.gamma(CFG, 2))


def test_node_wiring():
    assert leader.gamma(CFG, 2) == (2, A1)


@pytest.mark.parametrize("backend", BACKENDS)
def test_initial_state(backend):
    m = monitor_new(node2(), backend=backend)
    assert m.current == leader.NodeState(False, frozenset(), frozenset())
    assert observed_trace(m) == ()


def test_backends_agree_initially():
    ges = node2()
    assert (permitted_outputs(monitor_new(ges, backend="es"))
            == permitted_outputs(monitor_new(ges, backend="heap")))


@pytest.mark.parametrize("backend", BACKENDS)
def test_empty_component_permits_nothing(backend):
    ges = IOGuardedES((), 0, Typing({}, lambda b, v: (UNIT,)))
    m = monitor_new(ges, backend=backend)
    assert permitted_outputs(m) == set()
    assert not request_output(m, "anything")


@pytest.mark.parametrize("backend", BACKENDS)
def test_send_guard(backend):
    m = monitor_new(node2(), backend=backend)
    ok, m = commit_ghost(m, "setup")
    assert ok and m.current.obuf == {2}
    assert request_output(m, "send", (2, A1))
    denied = request_output(m, "send", (3, A1))
    assert not denied
    expected = DenyReason.NO_ENABLED_GUARD if backend is Backend.ES else DenyReason.NO_PERMISSION
    assert denied.reason is expected


@pytest.mark.parametrize("backend", BACKENDS)
def test_out_of_domain_output_denied(backend):
    m = monitor_new(node2(), backend=backend)
    assert not request_output(m, "send", (99, A1))
    assert not request_output(m, "nosuch")


def test_request_does_not_mutate():
    m = monitor_new(node2())
    before = (m.current, m.trace, m.state_hash())
    verdicts = {str(request_output(m, "send", (3, A1))) for _ in range(5)}
    assert len(verdicts) == 1
    assert (m.current, m.trace, m.state_hash()) == before


@pytest.mark.parametrize("backend", BACKENDS)
def test_receive_extends_inbox(backend):
    m = monitor_new(node2(), backend=backend)
    ok, m = commit(m, "receive", UNIT, 3)
    assert ok and m.current.ibuf == {3}


@pytest.mark.parametrize("backend", BACKENDS)
def test_ill_typed_input_denied_without_change(backend):
    m = monitor_new(node2(), backend=backend)
    verdict, m2 = commit(m, "receive", UNIT, 42)
    assert verdict.reason is DenyReason.ILL_TYPED_INPUT
    assert m2 is m


@pytest.mark.parametrize("backend", BACKENDS)
def test_ghost_elect_and_accept(backend):
    m = monitor_new(node2(), backend=backend)
    _, m = commit(m, "receive", UNIT, 2)
    ok, m = commit_ghost(m, "elect")
    assert ok and m.current.leader
    _, m = commit(m, "receive", UNIT, 1)
    denied, m2 = commit_ghost(m, "accept", 1)
    assert not denied and m2 is m
    assert observed_trace(m, include_ghost=False) == (Action("receive", UNIT, 2),
                                                      Action("receive", UNIT, 1))
    assert len(observed_trace(m)) == 3


def test_non_ghost_event_not_committable_as_ghost():
    m = monitor_new(node2())
    verdict, m2 = commit_ghost(m, "receive")
    assert not verdict and m2 is m


def test_committed_actions_in_order():
    m = monitor_new(node2())
    _, m = commit(m, "receive", UNIT, 1)
    _, m = commit_ghost(m, "setup")
    assert observed_trace(m) == (Action("receive", UNIT, 1), Action("setup", UNIT, UNIT))
    assert observed_trace(m, include_ghost=False) == (Action("receive", UNIT, 1),)


def _random_walk(ges, rng, steps):
    """Drive both backends with the same random choices; yield each pair of
    monitor states, including denied attempts."""
    es = monitor_new(ges, backend="es")
    hp = monitor_new(ges, backend="heap")
    all_outputs = [(b, v) for b in ges.typing.bios for v in ges.typing.outputs[b]]
    for _ in range(steps):
        yield es, hp
        permitted = sorted(permitted_outputs(es), key=repr)
        if permitted and rng.random() < 0.8:
            bio, v = rng.choice(permitted)
        else:
            bio, v = rng.choice(all_outputs)
        assert bool(request_output(es, bio, v)) == bool(request_output(hp, bio, v))
        w = rng.choice(ges.typing.ty(bio, v))
        ghost = ges.event(bio) is not None and ges.event(bio).ghost
        step = commit_ghost if ghost else commit
        args = (bio, v) if ghost else (bio, v, w)
        v1, es2 = step(es, *args)
        v2, hp2 = step(hp, *args)
        assert bool(v1) == bool(v2)
        if not v1:
            assert es2 is es and hp2 is hp
        es, hp = es2, hp2


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_backends_agree_on_random_components(seed):
    rng = random.Random(seed)
    ges = random_io_guarded(rng)
    for es, hp in _random_walk(ges, rng, 30):
        assert permitted_outputs(es) == permitted_outputs(hp)


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_observed_trace_is_model_trace(seed):
    rng = random.Random(seed)
    ges = random_io_guarded(rng)
    es = ges.as_event_system(stutter=False)
    last = None
    for last, _ in _random_walk(ges, rng, 6):
        pass
    tr = observed_trace(last)
    assert tr in enumerate_traces(es, es.initial, len(tr))


def test_leader_node_backends_agree_on_walk():
    ges = node2()
    for es, hp in _random_walk(ges, random.Random(1), 200):
        assert permitted_outputs(es) == permitted_outputs(hp)


def test_monitor_log_records_verdicts():
    mon = Monitor.new(node2())
    mon.request("send", (3, A1))
    mon.commit("receive", UNIT, 2)
    mon.ghost("elect")
    kinds = [(r["kind"], r["verdict"]) for r in mon.log]
    assert kinds == [("request", "DENY(no enabled guard)"), ("commit", "PERMIT"),
                     ("ghost", "PERMIT")]
    assert mon.jsonl().count("\n") == 3
    assert mon.current.leader
