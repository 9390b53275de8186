import random

import pytest
from hypothesis import given, settings, strategies as st

from ioweave.errors import UniverseNotClosed
from ioweave.kernel import reachable
from ioweave.protocols import auth as A
from ioweave.values import Event

CFG = A.AuthConfig()
UNIVERSE = CFG.universe()
TERMS = sorted(UNIVERSE, key=repr)
NA = CFG.nonce("A", "init", 0)
NB = CFG.nonce("B", "resp", 0)

term_sets = st.lists(st.sampled_from(TERMS), max_size=8).map(frozenset)


def test_projection():
    p = A.Pair(A.Nonce("A", 0), A.Agent("B"))
    assert A.Nonce("A", 0) in A.dy_closure({p}, UNIVERSE)


def test_signature_reveals_payload():
    known = A.dy_closure({CFG.m2("B", NB, NA, "A")}, UNIVERSE)
    assert NB in known and NA in known


def test_only_private_keys_sign():
    with pytest.raises(TypeError):
        A.sign(A.PubKey("B"), NA)


def test_names_and_public_keys_always_known():
    known = A.dy_closure(set(), UNIVERSE)
    assert A.Agent("A") in known and A.PubKey("B") in known
    assert A.PriKey("B") not in known and NA not in known


@given(term_sets)
@settings(max_examples=100, deadline=None)
def test_closure_laws(known):
    closed = A.dy_closure(known, UNIVERSE)
    assert known <= closed
    assert A.dy_closure(closed, UNIVERSE) == closed


@given(term_sets, term_sets)
@settings(max_examples=50, deadline=None)
def test_closure_monotone(a, b):
    assert A.dy_closure(a, UNIVERSE) <= A.dy_closure(a | b, UNIVERSE)


@given(term_sets)
@settings(max_examples=50, deadline=None)
def test_derivable_agrees_with_closure(known):
    closed = A.dy_closure(known, UNIVERSE)
    analysed = A.analyse(known)
    for t in random.Random(len(known)).sample(TERMS, 40):
        assert A.derivable(t, analysed) == (t in closed)


def test_cannot_forge_fresh_signature():
    m2 = CFG.m2("B", NB, NA, "A")
    known = A.dy_closure({NA, m2}, UNIVERSE)
    fresh = CFG.nonce("B", "init", 0)
    forged = [t for t in UNIVERSE if isinstance(t, A.Sign) and t.key == A.PriKey("B")
              and isinstance(t.body, A.Pair) and t.body.fst == fresh]
    assert forged and not any(t in known for t in forged)


def test_universe_must_be_subterm_closed():
    with pytest.raises(UniverseNotClosed):
        A.dy_closure(set(), {A.Pair(NA, NB)})
    with pytest.raises(UniverseNotClosed):
        A.dy_closure({A.Nonce("Z", 9)}, UNIVERSE)


def test_initiator_first_send_is_m1():
    comp = A.build_auth_stack().components["A"]
    comp.check_guards(comp.initial)
    sends = {v for bio, v in comp.enabled_outputs(comp.initial) if bio == "send"}
    assert A.Pair(A.Agent("A"), A.Pair(A.Agent("B"), NA)) in sends


def test_agreement_holds_shallow():
    assert A.find_attack(A.build_auth_stack(), 6) is None


def test_signature_mutant_attack():
    v = A.find_attack(A.build_auth_stack(mutant=True), 12)
    assert v is not None and len(v.trace) <= 12
    last = v.trace[-1]
    assert last.name == "commit"
    assert not A.agreement_holds(A.AuthConfig(mutant=True), v.trace)


def test_attacker_knowledge_grows():
    stack = A.build_auth_stack()
    proto = stack.protocol
    for s in reachable(proto, proto.initial, 4):
        for e, t in proto.step(s):
            assert s.ik <= t.ik


def test_agreement_predicate():
    d = ("A", "B", NA, NB)
    running = Event("running", ("B",) + d)
    commit = Event("commit", ("A",) + d)
    assert A.agreement_holds(CFG, [running, commit])
    assert not A.agreement_holds(CFG, [commit])
    assert not A.agreement_holds(CFG, [running, commit, commit])
    with_attacker = Event("commit", ("A", "A", "I", NA, NB))
    assert A.agreement_holds(CFG, [with_attacker])
