import json
import subprocess
import sys
from pathlib import Path

import pytest

from ioweave.cli import main, run
from ioweave.process import IOGuardedES, Typing
from ioweave.render import render_iospec, render_specification
from ioweave.report import validate_report
from ioweave.scenarios import BUILTIN, load_scenario
from ioweave.values import UNIT

GOLDEN = Path(__file__).parent / "golden"


def test_refinement_passes():
    code, rep = run(["check-refinement", "--scenario", "leader3.json", "--depth", "5"])
    assert code == 0 and rep["status"] == "PASS"
    assert [c["name"] for c in rep["checks"]] == ["protocol refines abstract",
                                                  "interface refines protocol"]


def test_nested_choice_oracle_passes():
    assert main(["check-theorem4", "--process", "example8", "--depth", "3"]) == 0


def test_random_oracles_small():
    assert main(["check-composition", "--count", "5", "--depth", "3"]) == 0
    assert main(["check-theorem3", "--count", "5", "--depth", "3"]) == 0
    assert main(["check-theorem4", "--process", "random", "--count", "3", "--depth", "2"]) == 0


def test_composition_of_scenario():
    code, rep = run(["check-composition", "--scenario", "leader3", "--depth", "3"])
    assert code == 0 and rep["summary"]["traces"] > 0


def test_failure_exit_code(tmp_path):
    scen = {"protocol": "replication", "servers": 2, "clients": 1, "ops": ["x"], "mutant": True}
    path = tmp_path / "mutant.json"
    path.write_text(json.dumps(scen))
    code, rep = run(["enumerate", "--scenario", str(path), "--depth", "12"])
    assert code == 1 and rep["status"] == "FAIL"
    assert rep["checks"][0]["counterexample"]


def test_forgetful_node_simulation_fails(tmp_path):
    scen = dict(load_scenario("leader3"), buggy=[2])
    path = tmp_path / "buggy.json"
    path.write_text(json.dumps(scen))
    code, rep = run(["simulate", "--scenario", str(path), "--seed", "1"])
    assert code == 1
    statuses = {c["name"]: c["status"] for c in rep["checks"]}
    assert statuses["monitors"] == "FAIL"


@pytest.mark.parametrize("argv", [
    ["--bogus"],
    ["check-refinement", "--scenario", "auth-2a"],
    ["check-refinement", "--scenario", "leader3", "--unknown-flag"],
    ["simulate"],
    ["enumerate", "--scenario", "no-such-scenario"],
    ["enumerate", "--scenario", "leader3", "--depth", "-1"],
    ["replay", "--scenario", "leader3", "--log", "/nonexistent/log.jsonl"],
    ["dump-iospec", "--scenario", "leader3", "--component", "42"],
])
def test_usage_errors(argv):
    assert run(argv)[0] == 2


def test_invalid_scenario_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"protocol": "leader"}))
    assert run(["enumerate", "--scenario", str(path)])[0] == 2
    path.write_text(json.dumps({"protocol": "leader", "ring": [1, 2], "order": [1, 1]}))
    assert run(["enumerate", "--scenario", str(path)])[0] == 2


def test_budget_exit_code():
    code, rep = run(["enumerate", "--scenario", "leader4", "--depth", "6", "--budget", "50"])
    assert code == 3 and rep["status"] == "BUDGET_EXCEEDED"
    validate_report(rep)


def test_simulation_is_deterministic(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}" / "report.json"
        code = main(["simulate", "--scenario", "leader4.json", "--seed", "7", "--steps", "2000",
                     "--out", str(out)])
        assert code == 0
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    assert (outs[0].with_suffix(".jsonl").read_bytes()
            == outs[1].with_suffix(".jsonl").read_bytes())
    assert (outs[0].parent / "report-timeline.png").stat().st_size > 0
    validate_report(json.loads(outs[0].read_text()))


@pytest.mark.parametrize("name", ["leader4", "repl-3s-1c", "auth-2a"])
def test_simulate_then_replay(tmp_path, name):
    out = tmp_path / "sim.json"
    log = tmp_path / "sim.jsonl"
    assert main(["simulate", "--scenario", name, "--seed", "3", "--out", str(out),
                 "--log", str(log)]) == 0
    code, rep = run(["replay", "--scenario", name, "--log", str(log)])
    assert code == 0
    assert rep["summary"]["events"] == len(log.read_text().splitlines()) - sum(
        1 for line in log.read_text().splitlines() if json.loads(line)["event"] is None)


def test_replay_rejects_tampered_log(tmp_path):
    log = tmp_path / "sim.jsonl"
    assert main(["simulate", "--scenario", "leader3", "--seed", "2", "--log", str(log)]) == 0
    rows = [json.loads(line) for line in log.read_text().splitlines()]
    k = next(i for i, r in enumerate(rows) if r["event"] and r["event"]["name"] == "receive")
    rows[k]["event"]["params"][1] = 99
    log.write_text("".join(json.dumps(r) + "\n" for r in rows))
    code, rep = run(["replay", "--scenario", "leader3", "--log", str(log)])
    assert code == 1
    replay = rep["checks"][0]
    assert replay["status"] == "FAIL" and replay["details"]["index"] == k


def test_heap_backend_simulation():
    assert main(["simulate", "--scenario", "leader3", "--backend", "heap", "--steps", "300"]) == 0


def test_reports_validate_for_every_command(tmp_path):
    log = tmp_path / "l.jsonl"
    cases = [
        ["check-refinement", "--scenario", "leader3", "--depth", "3"],
        ["check-composition", "--count", "2", "--depth", "2"],
        ["check-theorem3", "--count", "2", "--depth", "2"],
        ["check-theorem4", "--depth", "2"],
        ["enumerate", "--scenario", "auth-2a", "--depth", "3"],
        ["simulate", "--scenario", "leader3", "--steps", "100", "--log", str(log)],
        ["replay", "--scenario", "leader3", "--log", str(log)],
        ["dump-iospec", "--scenario", "repl-3s-1c", "--component", "c1"],
    ]
    for k, argv in enumerate(cases):
        out = tmp_path / f"r{k}.json"
        code, rep = run(argv + ["--out", str(out)])
        assert code == 0, argv
        validate_report(json.loads(out.read_text()))
        assert rep["command"] == argv[0]


def test_dump_matches_golden(capsys):
    assert main(["dump-iospec", "--scenario", "leader3"]) == 0
    assert capsys.readouterr().out == (GOLDEN / "leader3-node1.txt").read_text(encoding="utf-8")


def test_dump_mentions_every_leader_operation():
    text = (GOLDEN / "leader3-node1.txt").read_text(encoding="utf-8")
    for op in ("setup(", "receive(", "accept(", "send(", "elect("):
        assert op in text
    assert "m ∈ obuf(s) ∧ a′ = a" in text
    assert "i ∈ ibuf(s)" in text


def test_empty_component_renders_true():
    ges = IOGuardedES((), 0, Typing({}, lambda b, v: (UNIT,)))
    assert render_iospec(ges) == "true"
    assert "true" in render_specification(ges, "p")


def test_builtin_scenarios_load():
    for name in BUILTIN:
        assert load_scenario(name)["protocol"] in {"leader", "replication", "auth"}


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ioweave.cli", "check-theorem4", "--depth", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip().splitlines()[-1] == "PASS"
