import pytest

from ioweave.kernel import enumerate_traces, find_violation, reachable
from ioweave.protocols import replication as R
from ioweave.values import Event


@pytest.fixture(scope="module")
def small():
    return R.build_repl_stack(2, 1, ("x",))


def test_prefix_ordering():
    assert R.ordered_wrt_prefix([(), (1,), (1, 2)])
    assert not R.ordered_wrt_prefix([(1,), (2,)])
    assert not R.ordered_wrt_prefix([(1, 2), (1,)])
    assert R.ordered_wrt_prefix([])
    assert R.is_prefix((), (3,)) and not R.is_prefix((3,), ())


def test_config_shape():
    cfg = R.ReplConfig(3, 2, ("x", "y"))
    assert cfg.servers == (1, 2, 3)
    assert cfg.clients == ("c1", "c2")
    assert cfg.crash_budget == 2
    assert R.ReplConfig(3, max_crashes=1).crash_budget == 1
    assert ("c1", "c2") not in cfg.pairs and (1, "c1") in cfg.pairs


def test_no_inconsistency_within_depth_12(small):
    assert R.find_inconsistency(small, 12) is None


def test_takeover_is_reachable(small):
    """Within the bound the backup survives a crash of the primary and
    answers the client itself, so the clean search covers that path."""
    def not_backup_reply(s, e, t):
        return not (e.name == "send" and e.params[0] == 2 and isinstance(e.params[2], R.Reply))

    v = find_violation(small.protocol, small.protocol.initial, 12, step_ok=not_backup_reply)
    assert v is not None
    assert v.trace[0].name == "crash" and v.trace[0].params == (1,)


def test_live_sets_cover_live_env(small):
    for s in reachable(small.protocol, small.protocol.initial, 12):
        assert R.live_superset(small.cfg, s)
        assert R.sync_invariant(small.cfg, s)


def test_crashes_are_permanent(small):
    for tr in enumerate_traces(small.protocol, small.protocol.initial, 6):
        crashed = [e.params[0] for e in tr if e.name == "crash"]
        assert len(crashed) == len(set(crashed)) <= small.cfg.crash_budget


def test_mutant_without_ack_wait_is_caught():
    mutant = R.build_repl_stack(2, 1, ("x",), wait_for_acks=False)
    v = R.find_inconsistency(mutant, 12)
    assert v is not None and len(v.trace) <= 12
    last = v.trace[-1]
    assert last.name == "send" and isinstance(last.params[2], R.Reply)


def test_reply_consistency_predicate(small):
    (s0,) = small.protocol.initial
    reply = R.Reply("x")
    assert R.reply_consistent(small.cfg, s0, Event("send", (1, "c1", reply)))
    ahead = s0._replace(servers=(s0.servers[0]._replace(log=("x",)), s0.servers[1]))
    assert not R.reply_consistent(small.cfg, ahead, Event("send", (1, "c1", reply)))
    assert R.reply_consistent(small.cfg, ahead, Event("issue", ("c1",)))


def test_three_servers_shallow_search():
    stack = R.build_repl_stack(3, 1, ("x",), max_crashes=1)
    assert R.find_inconsistency(stack, 8) is None


def test_decomposition_recomposes(small):
    rc = small.recomposed()
    assert (enumerate_traces(rc, rc.initial, 5)
            == enumerate_traces(small.protocol, small.protocol.initial, 5))
