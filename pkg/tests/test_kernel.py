import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from ioweave.errors import BudgetExceeded
from ioweave.kernel import (ALL_TRACES, CHI_INTERLEAVE, SKIP, EventSystem, GuardedEvent,
                            GuardedEventSystem, Status, SyncMap, check_refinement,
                            compose_parallel, compose_trace_sets, enumerate_traces,
                            find_violation, identity, interleave, interleave_family,
                            map_trace, preimage_property, reachable, satisfies)
from ioweave.oracles import random_event_system, random_sync_map
from ioweave.protocols import leader
from ioweave.values import Event

E = Event


def table_system(table, init, stutter=True, name="t"):
    return EventSystem(lambda s: table.get(s, []), frozenset(init), name, stutter)


def brute_traces(table, init, depth, stutter=True):
    """Independent trace enumeration by walking every event sequence."""
    out = set()

    def walk(s, tr):
        out.add(tr)
        if len(tr) == depth:
            return
        moves = list(table.get(s, []))
        if stutter:
            moves.append((SKIP, s))
        for e, t in moves:
            walk(t, tr + (e,))

    for s in init:
        walk(s, ())
    return out


seeds = st.integers(min_value=0, max_value=10_000)


# --------------------------------------------------------------------------
# enumeration


def test_abstract_leader_two_ids_depth_two():
    cfg = leader.RingConfig.ring([1, 2])
    es = leader.abstract_model(cfg)
    traces = enumerate_traces(es, es.initial, 2)
    assert (E("elect", (1,)),) in traces
    assert (E("elect", (1,)), E("elect", (1,))) in traces
    assert (E("elect", (1,)), E("elect", (2,))) not in traces


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_depth_zero_is_empty_trace_only(seed):
    es = random_event_system(random.Random(seed))
    assert enumerate_traces(es, es.initial, 0) == {()}


def test_empty_init_has_no_traces():
    assert enumerate_traces(table_system({}, []), [], 3) == frozenset()


@given(seeds, st.integers(min_value=0, max_value=3))
@settings(max_examples=40, deadline=None)
def test_enumeration_matches_brute_force(seed, depth):
    rng = random.Random(seed)
    n = rng.randint(1, 5)
    table = {s: [(E(rng.choice("ab")), rng.randrange(n)) for _ in range(rng.randint(0, 2))]
             for s in range(n)}
    es = table_system(table, [0])
    assert enumerate_traces(es, [0], depth) == brute_traces(table, [0], depth)


@given(seeds, st.integers(min_value=1, max_value=3))
@settings(max_examples=40, deadline=None)
def test_traces_prefix_closed_and_skip_insertion(seed, depth):
    es = random_event_system(random.Random(seed), max_states=6)
    traces = enumerate_traces(es, es.initial, depth)
    longer = enumerate_traces(es, es.initial, depth + 1)
    for tr in traces:
        if tr:
            assert tr[:-1] in traces
        for k in range(len(tr) + 1):
            assert tr[:k] + (SKIP,) + tr[k:] in longer


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_skip_self_loop_everywhere(seed):
    es = random_event_system(random.Random(seed), max_states=6)
    for s in reachable(es, es.initial, 4):
        assert (SKIP, s) in es.step(s)
        assert s in es.successors(s, SKIP)


def test_guarded_system_transition_relation():
    ev = GuardedEvent("inc", [(1,), (2,)], lambda s, k: s + k <= 3, lambda s, k: s + k)
    g = GuardedEventSystem((ev,), frozenset([0]))
    es = g.as_event_system()
    for s in range(5):
        expected = {(E("inc", (k,)), s + k) for k in (1, 2) if s + k <= 3}
        assert set(g.transitions(s)) == expected
        assert set(es.step(s)) == expected | {(SKIP, s)}
        for k in (1, 2):
            assert set(es.successors(s, E("inc", (k,)))) == ({s + k} if s + k <= 3 else set())


def test_trace_budget():
    es = table_system({0: [(E("a"), 0), (E("b"), 0)]}, [0])
    with pytest.raises(BudgetExceeded):
        enumerate_traces(es, [0], 10, node_limit=100)


# --------------------------------------------------------------------------
# properties


def test_abstract_leader_unique_three_ids():
    es = leader.abstract_model(leader.RingConfig.ring([1, 2, 3]))
    assert satisfies(es, es.initial, leader.UNIQUE_LEADER, 4).holds


def test_weakened_guard_breaks_uniqueness():
    es = leader.abstract_model(leader.RingConfig.ring([1, 2, 3]), guard=lambda s, i: True)
    res = satisfies(es, es.initial, leader.UNIQUE_LEADER, 2)
    assert not res.holds
    assert res.counterexample == (E("elect", (1,)), E("elect", (2,)))


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_all_traces_property_always_holds(seed):
    es = random_event_system(random.Random(seed), max_states=6)
    assert satisfies(es, es.initial, ALL_TRACES, 3)


def test_find_violation_shortest():
    table = {0: [(E("a"), 1)], 1: [(E("b"), 2)], 2: []}
    es = table_system(table, [0])
    v = find_violation(es, [0], 5, state_ok=lambda s: s != 2)
    assert v.trace == (E("a"), E("b"))
    assert find_violation(es, [0], 1, state_ok=lambda s: s != 2) is None


# --------------------------------------------------------------------------
# refinement


def test_identity_refinement():
    es = random_event_system(random.Random(3))
    assert check_refinement(es, es, lambda a, b: a == b, identity, 4).ok


def test_protocol_refines_abstract_three_ids():
    stack = leader.build_leader_stack(leader.RingConfig.ring([1, 2, 3]))
    assert check_refinement(stack.protocol, stack.abstract, stack.r_pa, stack.pi_pa, 5).ok


def test_elect_to_skip_mediator_fails_condition_two():
    stack = leader.build_leader_stack(leader.RingConfig.ring([1, 2, 3]))
    v = check_refinement(stack.protocol, stack.abstract, stack.r_pa, lambda e: SKIP, 5)
    assert v.status is Status.FAIL and v.condition == 2
    assert v.trace[-1].name == "elect"


def test_refinement_budget():
    stack = leader.build_leader_stack(leader.RingConfig.ring([1, 2, 3]))
    v = check_refinement(stack.interface, stack.protocol, stack.r_ip, stack.pi_ip, 5,
                         node_limit=5)
    assert v.status is Status.BUDGET_EXCEEDED


@given(seeds)
@settings(max_examples=60, deadline=None)
def test_refinement_pass_implies_image_inclusion(seed):
    rng = random.Random(seed)
    abs_ = random_event_system(rng, max_states=4, alphabet=("a", "b"))
    conc = random_event_system(rng, max_states=4, alphabet=("a", "b", "c"))
    pi = lambda e: SKIP if e == E("c") else e
    states = list(range(4))
    rel = {(a, c) for a in states for c in states if rng.random() < 0.6}
    v = check_refinement(conc, abs_, lambda a, c: (a, c) in rel, pi, 3)
    if v.ok:
        images = {map_trace(pi, t) for t in enumerate_traces(conc, conc.initial, 3)}
        assert images <= enumerate_traces(abs_, abs_.initial, 3)


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_preimage_property_transfers(seed):
    rng = random.Random(seed)
    abs_ = random_event_system(rng, max_states=4, alphabet=("a", "b"))
    conc = random_event_system(rng, max_states=4, alphabet=("a", "b", "c"))
    pi = lambda e: SKIP if e == E("c") else e
    prop = lambda t: t.count(E("b")) <= 1
    conc_images = {map_trace(pi, t) for t in enumerate_traces(conc, conc.initial, 3)}
    if satisfies(abs_, abs_.initial, prop, 3) and conc_images <= enumerate_traces(
            abs_, abs_.initial, 3):
        assert satisfies(conc, conc.initial, preimage_property(pi, prop), 3)


def test_map_trace_identity_and_interface_mediator():
    tr = (E("a"), E("b"))
    assert map_trace(identity, tr) == tr
    assert leader.pi_ip(E("send", (2, 2, "x"))) == E("setup", (2,))
    assert leader.pi_ip(E("send", (1, 3, "x"))) == E("accept", (1, 3))
    assert leader.pi_ip(E("elect", (3,))) == E("elect", (3,))


# --------------------------------------------------------------------------
# composition


def test_chi_interleave_table():
    a, b = E("a"), E("b")
    assert CHI_INTERLEAVE(a, SKIP) == a
    assert CHI_INTERLEAVE(SKIP, b) == b
    assert CHI_INTERLEAVE(a, b) is None
    assert CHI_INTERLEAVE(SKIP, SKIP) == SKIP


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_component_traces_embed_in_interleaving(seed):
    rng = random.Random(seed)
    es1 = random_event_system(rng, max_states=5)
    es2 = random_event_system(rng, max_states=5)
    both = interleave(es1, es2)
    composed = enumerate_traces(both, both.initial, 3)
    for tr in enumerate_traces(es1, es1.initial, 3):
        assert tr in composed


def test_composition_with_stuck_system_is_skip_only_images():
    es1 = table_system({0: [(E("a"), 1)], 1: [(E("b"), 0)]}, [0])
    stuck = table_system({}, [0])
    chi = SyncMap(lambda e1, e2: E("x") if (e1, e2) == (E("a"), E("y")) else
                  (e1 if e2 == SKIP else None))
    comp = compose_parallel(es1, stuck, chi)
    traces = enumerate_traces(comp, comp.initial, 3)
    expected = {tuple(chi(e, SKIP) for e in tr) for tr in enumerate_traces(es1, [0], 3)}
    assert traces == expected


@given(seeds, st.integers(min_value=0, max_value=4))
@settings(max_examples=100, deadline=None)
def test_composition_equals_composed_trace_sets(seed, depth):
    rng = random.Random(seed)
    es1 = random_event_system(rng)
    es2 = random_event_system(rng)
    chi = random_sync_map(rng)
    comp = compose_parallel(es1, es2, chi)
    lhs = enumerate_traces(comp, comp.initial, depth)
    rhs = compose_trace_sets(enumerate_traces(es1, es1.initial, depth),
                             enumerate_traces(es2, es2.initial, depth), chi)
    assert lhs == rhs


def test_compose_trace_sets_empty():
    assert compose_trace_sets({()}, {()}, CHI_INTERLEAVE) == {()}


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_compose_trace_sets_monotone(seed):
    rng = random.Random(seed)
    es1 = random_event_system(rng, max_states=5)
    es2 = random_event_system(rng, max_states=5)
    chi = random_sync_map(rng)
    t1 = enumerate_traces(es1, es1.initial, 3)
    t2 = enumerate_traces(es2, es2.initial, 3)
    s1 = frozenset(t for t in t1 if rng.random() < 0.5)
    s2 = frozenset(t for t in t2 if rng.random() < 0.5)
    assert compose_trace_sets(s1, s2, chi) <= compose_trace_sets(t1, t2, chi)


def test_singleton_family_is_the_component():
    es = random_event_system(random.Random(11))
    fam = interleave_family({"only": es})
    unwrap = lambda tr: tuple(e if e == SKIP else e.event for e in tr)
    for depth in range(4):
        got = {unwrap(t) for t in enumerate_traces(fam, fam.initial, depth)}
        assert got == enumerate_traces(es, es.initial, depth)


def _leader_family(ids, k):
    cfg = leader.RingConfig.ring(ids)
    return {i: leader.node_component(cfg, *leader.gamma(cfg, i)).as_event_system()
            for i in ids[:k]}


def test_family_never_pairs_two_moves():
    fam = interleave_family(_leader_family([1, 2], 2))
    for tr in enumerate_traces(fam, fam.initial, 3):
        for e in tr:
            assert e == SKIP or e.event != SKIP


def test_family_trace_count_equals_shuffle_count():
    comps = _leader_family([1, 2, 3], 3)
    depth = 3
    fam = interleave_family(comps)
    got = enumerate_traces(fam, fam.initial, depth)
    per = {i: enumerate_traces(es, es.initial, depth) for i, es in comps.items()}
    alphabet = [SKIP] + [(i, e) for i, ts in per.items()
                         for e in sorted({e for t in ts for e in t if e != SKIP}, key=str)]
    count = 0
    for n in range(depth + 1):
        for seq in itertools.product(alphabet, repeat=n):
            if all(tuple(x[1] for x in seq if x != SKIP and x[0] == i) in per[i] for i in per):
                count += 1
    assert len(got) == count
