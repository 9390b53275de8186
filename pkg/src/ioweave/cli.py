"""Command-line entry point: bounded model checks, simulations, log replay
and I/O specification dumps over built-in or user-supplied scenarios.

Exit codes: 0 when every check passes, 1 on any failure or violation,
2 for usage or configuration errors, 3 when a search budget is exhausted.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path
from typing import Optional, Sequence

import jsonschema

from . import oracles, report
from .canonical import in_out_drop_process, in_out_drop_typing, theorem4_oracle
from .errors import (BudgetExceeded, ConfigError, InvalidRing, StepLimit,
                     UniverseNotClosed)
from .kernel import (DEFAULT_NODE_LIMIT, Status, check_refinement, enumerate_traces,
                     preimage_property, reachable, satisfies)
from .monitor import Backend
from .protocols import auth, leader, replication
from .render import render_specification
from .scenarios import build_stack, load_scenario
from .simnet.faults import FaultPlan
from .simnet.sim import (Record, TraceLog, check_global, load_log, no_fabrication,
                         replay_against_model, run_sim)
from .simnet.worlds import WORLDS
from .values import trace_to_json

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3

COMMANDS = ("check-refinement", "check-composition", "check-theorem3", "check-theorem4",
            "enumerate", "simulate", "replay", "dump-iospec")


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def _cex(trace) -> Optional[list]:
    return None if trace is None else trace_to_json(trace)


# --------------------------------------------------------------------------
# scenario-level models


def monolithic_model(scenario: dict, stack):
    """The single model that the decomposition must reproduce."""
    proto = scenario["protocol"]
    if proto == "leader":
        return stack.interface
    if proto == "auth":
        return auth.protocol_model(stack.cfg, receive_any=True)
    return stack.protocol


def component_params(scenario: dict) -> str:
    return {"leader": "(i, a)", "replication": "x", "auth": "a"}[scenario["protocol"]]


def _component_key(scenario: dict, stack, raw: Optional[str]):
    keys = list(stack.components)
    if raw is None:
        return keys[0]
    for k in keys:
        if str(k) == raw:
            return k
    raise ConfigError(f"no component {raw!r}; choose from {', '.join(map(str, keys))}")


# --------------------------------------------------------------------------
# subcommands; each returns (checks, summary, extras)


def cmd_check_refinement(args, scenario):
    if scenario is None or scenario["protocol"] != "leader":
        raise ConfigError("check-refinement needs a leader scenario")
    st = build_stack(scenario)
    checks = []
    for name, conc, abs_, rel, pi in (
            ("protocol refines abstract", st.protocol, st.abstract, st.r_pa, st.pi_pa),
            ("interface refines protocol", st.interface, st.protocol, st.r_ip, st.pi_ip)):
        v = check_refinement(conc, abs_, rel, pi, args.depth, node_limit=args.budget)
        details = {"size": v.explored}
        if v.condition is not None:
            details["condition"] = v.condition
        checks.append(report.check_entry(name, v.status.value,
                                         _cex(v.trace) if v.status is Status.FAIL else None,
                                         **details))
    return checks, {"ids": list(st.cfg.ids)}


def cmd_check_composition(args, scenario):
    checks = []
    if scenario is not None:
        st = build_stack(scenario)
        whole = monolithic_model(scenario, st)
        parts = st.recomposed()
        lhs = enumerate_traces(parts, parts.initial, args.depth, args.budget)
        rhs = enumerate_traces(whole, whole.initial, args.depth, args.budget)
        diff = sorted(lhs ^ rhs, key=len)
        checks.append(report.check_entry(
            "recomposition equals model", _status(lhs == rhs),
            _cex(diff[0]) if diff else None, size=len(lhs), model_traces=len(rhs)))
        return checks, {"traces": len(lhs)}
    for k, r in enumerate(oracles.run_random("composition", args.count, args.seed, args.depth)):
        checks.append(report.check_entry(f"random-{k}", _status(r.ok), _cex(r.witness),
                                         size=r.left, composed_sets=r.right))
    return checks, {"instances": args.count}


def cmd_check_theorem3(args, scenario):
    checks = []
    if scenario is not None:
        st = build_stack(scenario)
        for key, ges in st.components.items():
            r = oracles.translation_oracle(ges, args.depth, args.budget)
            checks.append(report.check_entry(f"component-{key}", _status(r.ok), _cex(r.witness),
                                             size=r.left, process_traces=r.right))
        return checks, {"components": len(checks)}
    for k, r in enumerate(oracles.run_random("translation", args.count, args.seed, args.depth)):
        checks.append(report.check_entry(f"random-{k}", _status(r.ok), _cex(r.witness),
                                         size=r.left, process_traces=r.right))
    return checks, {"instances": args.count}


def _t4_entry(name: str, v) -> dict:
    cex = (v.missing or v.spurious)[:1]
    return report.check_entry(name, v.status.value, _cex(cex[0]) if cex else None,
                              size=v.proc_traces, canonical_traces=v.can_traces,
                              prop3=v.prop3, schedules=v.schedules_checked)


def cmd_check_theorem4(args, scenario):
    checks = []
    if args.process == "example8":
        v = theorem4_oracle(in_out_drop_process(), in_out_drop_typing(), args.depth,
                            extra_schedules=2, seed=args.seed)
        checks.append(_t4_entry("example8", v))
    else:
        for k in range(args.count):
            rng = random.Random(f"heap/{args.seed}/{k}")
            typing = oracles.random_typing(rng)
            p = oracles.random_process(rng, typing)
            checks.append(_t4_entry(f"random-{k}", oracles.heap_oracle(p, typing, args.depth, seed=k)))
    return checks, {"process": args.process}


def cmd_enumerate(args, scenario):
    if scenario is None:
        raise ConfigError("enumerate needs --scenario")
    st = build_stack(scenario)
    proto = scenario["protocol"]
    models = {"protocol": st.protocol, "recomposed": st.recomposed()}
    if proto == "leader":
        models.update(abstract=st.abstract, interface=st.interface)
    if args.model not in models:
        raise ConfigError(f"model {args.model!r} not available; choose from {sorted(models)}")
    es = models[args.model]
    states = reachable(es, es.initial, args.depth, args.budget)
    summary = {"model": args.model, "states": len(states)}
    checks = []
    if proto == "leader":
        pi = {"abstract": lambda e: e, "protocol": leader.pi_pa}.get(args.model, leader.pi_ia)
        traces = enumerate_traces(es, es.initial, args.depth, args.budget)
        res = satisfies(es, es.initial, preimage_property(pi, leader.UNIQUE_LEADER), args.depth)
        summary["traces"] = len(traces)
        checks.append(report.check_entry("unique leader", _status(res.holds),
                                         _cex(res.counterexample), size=len(traces)))
    elif proto == "replication":
        v = replication.find_inconsistency(st, args.depth, args.budget)
        checks.append(report.check_entry("backup consistency", _status(v is None),
                                         _cex(v.trace if v else None), size=len(states)))
    else:
        v = auth.find_attack(st, args.depth, args.budget)
        checks.append(report.check_entry("injective agreement", _status(v is None),
                                         _cex(v.trace if v else None), size=len(states)))
    return checks, summary


def _log_checks(scenario: dict, world, log: TraceLog) -> list:
    proto = scenario["protocol"]
    verdict = replay_against_model(log, world.interface())
    checks = [report.check_entry("replay against model", _status(verdict.ok),
                                 None if verdict.ok else [verdict.to_json()["event"]],
                                 size=len(log.global_trace()),
                                 **({} if verdict.ok else {"index": verdict.index}))]
    if proto == "leader":
        ok = check_global(log, preimage_property(leader.pi_ia, leader.UNIQUE_LEADER))
        checks.append(report.check_entry("unique leader", _status(ok)))
    elif proto == "auth":
        ok = check_global(log, lambda t: auth.agreement_holds(world.cfg, t))
        checks.append(report.check_entry("injective agreement", _status(ok)))
    checks.append(report.check_entry("no fabricated deliveries", _status(no_fabrication(log, world))))
    return checks


def cmd_simulate(args, scenario):
    if scenario is None:
        raise ConfigError("simulate needs --scenario")
    res = run_sim(scenario, seed=args.seed, max_steps=args.steps, strict=not args.audit,
                  backend=Backend(args.backend))
    checks = [report.check_entry("monitors", _status(res.denials == 0), None,
                                 denials=res.denials),
              report.check_entry("online properties", _status(not res.property_violations),
                                 None, problems=list(res.property_violations))]
    checks += _log_checks(scenario, res.world, res.log)
    log_path = args.log or (Path(args.out).with_suffix(".jsonl") if args.out else None)
    if log_path is not None:
        Path(log_path).parent.mkdir(parents=True, exist_ok=True)
        Path(log_path).write_text(res.log.to_jsonl(), encoding="utf-8")
    summary = res.summary()
    summary.setdefault("elects", 0)
    summary.setdefault("replies", 0)
    summary["monitors"] = res.monitor_verdicts
    return checks, summary, res.log.records


def cmd_replay(args, scenario):
    if scenario is None or args.log is None:
        raise ConfigError("replay needs --scenario and --log")
    world = WORLDS[scenario["protocol"]](scenario, FaultPlan.from_json(scenario.get("faults")),
                                        random.Random(0))
    try:
        lines = Path(args.log).read_text("utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    events = load_log(lines, world.message_types)
    log = TraceLog([Record(k, None, "io", None, e) for k, e in enumerate(events)])
    return _log_checks(scenario, world, log), {"events": len(events)}


def cmd_dump_iospec(args, scenario):
    if scenario is None:
        raise ConfigError("dump-iospec needs --scenario")
    st = build_stack(scenario)
    key = _component_key(scenario, st, args.component)
    text = render_specification(st.components[key], component_params(scenario))
    return [], {"component": str(key)}, text


HANDLERS = {
    "check-refinement": cmd_check_refinement,
    "check-composition": cmd_check_composition,
    "check-theorem3": cmd_check_theorem3,
    "check-theorem4": cmd_check_theorem4,
    "enumerate": cmd_enumerate,
    "simulate": cmd_simulate,
    "replay": cmd_replay,
    "dump-iospec": cmd_dump_iospec,
}


# --------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ioweave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", help="scenario file or built-in name")
        p.add_argument("--depth", type=int, default=4)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--steps", type=int, default=None)
        p.add_argument("--budget", type=int, default=DEFAULT_NODE_LIMIT,
                       help="maximum number of states or traces explored")
        p.add_argument("--out", help="path of the JSON report; figures are written beside it")
        p.add_argument("--audit", action="store_true",
                       help="simulate: log denied calls and keep going")
        if name in ("check-composition", "check-theorem3", "check-theorem4"):
            p.add_argument("--count", type=int, default=100 if name != "check-theorem4" else 50)
        if name == "check-theorem4":
            p.add_argument("--process", choices=("example8", "random"), default="example8")
        if name == "enumerate":
            p.add_argument("--model", default="protocol")
        if name in ("simulate", "replay"):
            p.add_argument("--log", help="JSON-lines trace log")
        if name == "simulate":
            p.add_argument("--backend", choices=[b.value for b in Backend], default="es")
        if name == "dump-iospec":
            p.add_argument("--component")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> tuple[int, Optional[dict]]:
    """Parse ``argv``, execute, and return the exit code with the report."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_USAGE if exc.code else EXIT_PASS), None
    if args.depth < 0 or args.budget <= 0:
        print("error: --depth must be non-negative and --budget positive", file=sys.stderr)
        return EXIT_USAGE, None
    try:
        scenario = load_scenario(args.scenario) if args.scenario else None
        result = HANDLERS[args.command](args, scenario)
    except (ConfigError, InvalidRing, UniverseNotClosed, jsonschema.ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE, None
    except (BudgetExceeded, StepLimit) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        rep = report.make_report(args.command, [report.check_entry(
            "budget", "BUDGET_EXCEEDED", None, reason=str(exc))],
            scenario and scenario.get("name"), _params(args))
        _emit(args, rep, None)
        return EXIT_BUDGET, rep
    checks, summary = result[0], result[1]
    extra = result[2] if len(result) > 2 else None
    text = extra if isinstance(extra, str) else None
    records = extra if isinstance(extra, list) else None
    rep = report.make_report(args.command, checks, scenario and scenario.get("name"),
                             _params(args), summary, text)
    _emit(args, rep, records)
    status = rep["status"]
    return {"PASS": EXIT_PASS, "FAIL": EXIT_FAIL}.get(status, EXIT_BUDGET), rep


def _params(args) -> dict:
    keep = ("depth", "seed", "steps", "budget", "audit", "count", "process", "model",
            "backend", "component")
    return {k: getattr(args, k) for k in keep if getattr(args, k, None) is not None}


def _emit(args, rep: dict, records: Optional[list]) -> None:
    if args.out:
        report.write_outputs(rep, Path(args.out), records)
    else:
        report.validate_report(rep)
    if "text" in rep:
        print(rep["text"])
        return
    for c in rep["checks"]:
        print(f"{c['status']:<5} {c['name']}")
    for k, v in rep["summary"].items():
        if not isinstance(v, dict):
            print(f"  {k}: {v}")
    print(rep["status"])


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(argv)[0]


if __name__ == "__main__":
    sys.exit(main())
