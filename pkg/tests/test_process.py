import random

import pytest
from hypothesis import given, settings, strategies as st

from ioweave.errors import GuardDependsOnInput
from ioweave.oracles import (random_io_guarded, random_process, random_typing,
                             translation_oracle)
from ioweave.process import (INACTIVE, Choice, IOEvent, IOGuardedES, Prefix, Typing,
                             enumerate_process_traces, finite_choice, prefix,
                             proc_of_ges, process_successors)
from ioweave.protocols import leader
from ioweave.values import UNIT, Action

seeds = st.integers(min_value=0, max_value=10_000)


def succ_actions(p, typing):
    return {a for a, _ in process_successors(p, typing)}


def succ_tree(p, typing, depth):
    """Successor structure up to ``depth`` as a comparable value."""
    if depth == 0:
        return frozenset()
    return frozenset((a, succ_tree(q, typing, depth - 1))
                     for a, q in process_successors(p, typing))


RECV_TYPING = Typing({"recv": (UNIT,), "send": tuple(range(0, 40))},
                     lambda b, v: (0, 3, 5) if b == "recv" else (UNIT,))


def running_sum(a):
    """Receive a number; if positive, send the new sum and continue."""
    return prefix("recv", UNIT,
                  lambda z: prefix("send", a + z, lambda _w: running_sum(a + z)) if z > 0
                  else INACTIVE)


def test_inactive_has_no_successors():
    assert process_successors(INACTIVE, RECV_TYPING) == []


def test_prefix_one_successor_per_input():
    typing = Typing({"recv": (UNIT,)}, lambda b, v: (1, 2))
    p = prefix("recv", UNIT)
    assert succ_actions(p, typing) == {Action("recv", UNIT, 1), Action("recv", UNIT, 2)}


def test_running_sum_trace():
    tr = (Action("recv", UNIT, 5), Action("send", 5, UNIT),
          Action("recv", UNIT, 3), Action("send", 8, UNIT))
    assert tr in enumerate_process_traces(running_sum(0), RECV_TYPING, 4)


def test_running_sum_stops_on_zero():
    traces = enumerate_process_traces(running_sum(0), RECV_TYPING, 3)
    assert (Action("recv", UNIT, 0),) in traces
    assert not any(len(t) > 1 for t in traces if t[:1] == (Action("recv", UNIT, 0),))


def test_inactive_traces_any_depth():
    for d in range(4):
        assert enumerate_process_traces(INACTIVE, RECV_TYPING, d) == {()}


def test_two_step_trace_set():
    typing = Typing({"in": (UNIT,), "out": (1,)}, lambda b, v: (1,) if b == "in" else (UNIT,))
    p = prefix("in", UNIT, lambda k: prefix("out", k))
    assert enumerate_process_traces(p, typing, 2) == {
        (), (Action("in", UNIT, 1),), (Action("in", UNIT, 1), Action("out", 1, UNIT))}


def test_finite_choice_empty_is_inactive():
    assert finite_choice([], lambda v: prefix("a")) is INACTIVE


def test_finite_choice_singleton_behaves_like_body():
    typing = random_typing(random.Random(4))
    body = random_process(random.Random(5), typing)
    assert succ_tree(finite_choice(["a"], lambda _v: body), typing, 3) == succ_tree(body, typing, 3)


def test_finite_choice_pair_unions_successors():
    typing = Typing({"a": (1, 2)}, lambda b, v: (UNIT,))
    p = finite_choice([1, 2], lambda v: prefix("a", v))
    assert succ_actions(p, typing) == {Action("a", 1, UNIT), Action("a", 2, UNIT)}


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_choice_commutative_and_associative(seed):
    rng = random.Random(seed)
    typing = random_typing(rng)
    p, q, r = (random_process(rng, typing, height=2) for _ in range(3))
    assert succ_tree(Choice(p, q), typing, 2) == succ_tree(Choice(q, p), typing, 2)
    assert (succ_tree(Choice(Choice(p, q), r), typing, 2)
            == succ_tree(Choice(p, Choice(q, r)), typing, 2))


@given(seeds, st.integers(min_value=0, max_value=6))
@settings(max_examples=40, deadline=None)
def test_finite_choice_equals_nested_binary_choice(seed, n):
    rng = random.Random(seed)
    typing = random_typing(rng)
    bodies = {k: random_process(rng, typing, height=2) for k in range(n)}
    nested = INACTIVE
    for k in sorted(bodies, reverse=True):
        nested = Choice(bodies[k], nested)
    assert (succ_tree(finite_choice(range(n), bodies.__getitem__), typing, 2)
            == succ_tree(nested, typing, 2))


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_traces_well_typed_and_prefix_closed(seed):
    rng = random.Random(seed)
    typing = random_typing(rng)
    traces = enumerate_process_traces(random_process(rng, typing), typing, 3)
    for tr in traces:
        assert all(typing.well_typed(a) for a in tr)
        if tr:
            assert tr[:-1] in traces


# --------------------------------------------------------------------------
# component models


def test_translation_with_nothing_enabled():
    typing = Typing({"a": (UNIT,)}, lambda b, v: (UNIT,))
    ges = IOGuardedES((IOEvent("a", lambda s: (UNIT,), lambda s, v, w: False,
                               lambda s, v, w: s),), 0, typing)
    assert process_successors(proc_of_ges(ges, 0), typing) == []


def test_leader_node_initial_successors():
    cfg = leader.RingConfig.ring([1, 2, 3])
    ges = leader.node_component(cfg, *leader.gamma(cfg, 2))
    got = succ_actions(proc_of_ges(ges, ges.initial), ges.typing)
    assert got == {Action("setup", UNIT, UNIT)} | {Action("receive", UNIT, m) for m in (1, 2, 3)}


def test_guard_reading_input_is_rejected():
    typing = Typing({"a": (UNIT,)}, lambda b, v: (1, 2))
    ges = IOGuardedES((IOEvent("a", lambda s: (UNIT,), lambda s, v, w: w == 1,
                               lambda s, v, w: s),), 0, typing)
    with pytest.raises(GuardDependsOnInput):
        process_successors(proc_of_ges(ges, 0), typing)


def test_duplicate_operations_rejected():
    typing = Typing({"a": (UNIT,)}, lambda b, v: (UNIT,))
    ev = IOEvent("a", lambda s: (UNIT,), lambda s, v, w: True, lambda s, v, w: s)
    with pytest.raises(ValueError):
        IOGuardedES((ev, ev), 0, typing)


@given(seeds, st.integers(min_value=0, max_value=4))
@settings(max_examples=60, deadline=None)
def test_translation_preserves_traces(seed, depth):
    res = translation_oracle(random_io_guarded(random.Random(seed)), depth)
    assert res.ok, res.witness


def test_prefix_continuation_memoised():
    calls = []
    p = Prefix("a", UNIT, lambda w: calls.append(w) or INACTIVE)
    typing = Typing({"a": (UNIT,)}, lambda b, v: (1,))
    for _ in range(3):
        process_successors(p, typing)
    assert calls == [1]
