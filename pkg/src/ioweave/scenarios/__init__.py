"""Built-in scenario documents and helpers to load, validate and
instantiate them."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from ..errors import ConfigError

BUILTIN = ("leader3", "leader4", "repl-3s-1c", "auth-2a")


@lru_cache(maxsize=None)
def schema(name: str) -> dict:
    """A JSON schema shipped with the package (``report`` or ``scenario``)."""
    text = resources.files("ioweave.schemas").joinpath(f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def validate_scenario(doc: Any) -> dict:
    try:
        jsonschema.validate(doc, schema("scenario"))
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid scenario: {exc.message}") from None
    return doc


def load_scenario(ref: str) -> dict:
    """Load by file path, or by built-in name with or without ``.json``."""
    path = Path(ref)
    if path.is_file():
        try:
            doc = json.loads(path.read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{ref}: {exc}") from None
    else:
        name = path.name[:-5] if path.name.endswith(".json") else path.name
        if name not in BUILTIN:
            raise ConfigError(f"no scenario file or built-in scenario named {ref!r}")
        text = resources.files(__package__).joinpath(f"{name}.json").read_text("utf-8")
        doc = json.loads(text)
    doc = validate_scenario(doc)
    doc.setdefault("name", path.stem)
    return doc


def build_stack(scenario: dict):
    """The model stack the scenario describes."""
    from ..protocols import auth, leader, replication

    proto = scenario["protocol"]
    if proto == "leader":
        return leader.build_leader_stack(leader.RingConfig.ring(scenario["ring"], scenario.get("order")))
    if proto == "replication":
        crashes = scenario.get("faults", {}).get("crashes")
        return replication.build_repl_stack(
            int(scenario["servers"]), int(scenario.get("clients", 1)),
            tuple(scenario.get("ops", ("x",))),
            max_crashes=None if crashes is None else len({c[0] for c in crashes}),
            wait_for_acks=not scenario.get("mutant", False))
    return auth.build_auth_stack(tuple(scenario.get("agents", ("A", "B"))),
                                 int(scenario.get("runs", 1)), bool(scenario.get("mutant", False)))
