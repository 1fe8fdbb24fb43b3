"""Scenario files: parsing and load-time validation.

A scenario is JSON with ``agents``, an optional ``escrow_agent``,
``config`` (``delta``/``Delta``), ``oracle`` entries and ``events``.  Each
event names an ``actor``, an ``action`` and its ``params``; ``at`` orders
events (ties keep file order) and ``must_succeed`` aborts the run if the
action is rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

from ..errors import ScenarioError
from ..liquidity import LiquidityConfig
from ..oracle import Oracle

WORLD = "world"

# action -> params naming agents (lists allowed); "lots"-like params are checked separately
ACTIONS: dict[str, tuple[str, ...]] = {
    "mint": (),
    "advance_date": (),
    "advance_all": ("agents",),
    "propose": ("to",),
    "pay": ("to",),
    "redeem": ("issuer",),
    "accept": (),
    "reject": (),
    "instrument": ("with",),
    "open_escrow": ("depositor", "beneficiary", "buyer"),
    "deposit": (),
    "deposit_escrow": ("beneficiary",),
    "cancel": (),
    "exercise": (),
    "adjudicate": (),
    "draw": (),
    "repay": (),
    "oracle_set": (),
    "will": ("with",),
    "retract": ("with",),
    "chain_redeem": ("path",),
    "mark": (),
    "assert_holds": ("agent",),
    "assert_ratio": ("agent",),
    "assert_circulation": (),
    "assert_case": (),
    "assert_date": ("agent",),
}

LOT_PARAMS = ("give", "want", "lots")
WORLD_ACTIONS = {"advance_all", "oracle_set", "mark", "assert_holds", "assert_ratio",
                 "assert_circulation", "assert_case", "assert_date"}
CASE_ACTIONS = {"deposit", "cancel", "exercise", "adjudicate", "draw", "repay", "assert_case"}
INSTRUMENT_AGENT_PARAMS = ("debtor", "price_issuer")


@dataclass(frozen=True)
class ScenarioEvent:
    at: int
    index: int  # position in the file
    actor: str
    action: str
    params: dict
    must_succeed: bool = False
    note: str | None = None

    def to_json(self) -> dict:
        out: dict[str, Any] = {"at": self.at, "actor": self.actor, "action": self.action, "params": self.params}
        if self.must_succeed:
            out["must_succeed"] = True
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class Scenario:
    agents: list[str]
    events: list[ScenarioEvent]
    escrow_agent: str | None = None
    config: LiquidityConfig = field(default_factory=LiquidityConfig)
    oracle_entries: list[dict] = field(default_factory=list)
    name: str = ""
    description: str = ""

    def oracle(self) -> Oracle:
        return Oracle.from_json(self.oracle_entries)

    def to_json(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "description": self.description, "agents": self.agents}
        if self.escrow_agent:
            out["escrow_agent"] = self.escrow_agent
        out["config"] = {"delta": self.config.delta, "Delta": self.config.Delta}
        out["oracle"] = self.oracle_entries
        out["events"] = [e.to_json() for e in self.events]
        return out

    def restricted(self, agents: set[str]) -> "Scenario":
        """Events whose actor and agent references all lie within ``agents``."""
        keep = []
        for e in self.events:
            if e.action == "advance_all":
                targets = [a for a in e.params.get("agents", self.agents) if a in agents]
                if targets:
                    keep.append(replace(e, params={**e.params, "agents": targets}))
                continue
            if e.action.startswith("assert_"):
                continue  # whole-world expectations do not hold for a part
            refs = _agent_refs(e) | ({e.actor} if e.actor != WORLD else set())
            if refs and refs <= agents:
                keep.append(e)
        return Scenario([a for a in self.agents if a in agents], keep, None, self.config,
                        self.oracle_entries, f"{self.name}|{','.join(sorted(agents))}", self.description)


def _agent_refs(e: ScenarioEvent) -> set[str]:
    refs: set[str] = set()
    p = e.params
    for key in ACTIONS.get(e.action, ()):
        v = p.get(key)
        if isinstance(v, str):
            refs.add(v)
        elif isinstance(v, list):
            refs.update(x for x in v if isinstance(x, str))
    for key in LOT_PARAMS:
        for lot in p.get(key, ()) or ():
            if isinstance(lot, (list, tuple)) and lot:
                refs.add(lot[0])
            elif isinstance(lot, dict) and "issuer" in lot:
                refs.add(lot["issuer"])
    if e.action == "redeem" and isinstance(p.get("want"), list) and len(p["want"]) in (2, 3) \
            and isinstance(p["want"][0], str):
        refs.add(p["want"][0])
    if e.action == "instrument":
        inner = p.get("params", {})
        refs.update(inner[k] for k in INSTRUMENT_AGENT_PARAMS if isinstance(inner.get(k), str))
    return refs


def _oracle_entries(raw) -> list[dict]:
    if raw is None:
        return []
    if isinstance(raw, list):
        entries = raw
    elif isinstance(raw, dict):
        # {kind: {subject: {day: value}}}
        entries = [
            {"kind": k, "subject": s, "day": int(d), "value": v}
            for k, subjects in raw.items()
            for s, days in subjects.items()
            for d, v in days.items()
        ]
    else:
        raise ScenarioError("oracle must be a list or a nested mapping", "oracle")
    for i, e in enumerate(entries):
        if not isinstance(e, dict) or not {"kind", "subject", "day", "value"} <= set(e):
            raise ScenarioError("oracle entry needs kind, subject, day, value", f"oracle[{i}]")
    return entries


def parse_scenario(data: dict, source: str = "<scenario>") -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object", source)
    agents = data.get("agents")
    if not isinstance(agents, list) or not all(isinstance(a, str) and a for a in agents):
        raise ScenarioError("'agents' must be a list of names", f"{source}: agents")
    if len(set(agents)) != len(agents):
        raise ScenarioError("duplicate agent names", f"{source}: agents")
    escrow = data.get("escrow_agent")
    if escrow is not None and (not isinstance(escrow, str) or escrow in agents or escrow == WORLD):
        raise ScenarioError("escrow_agent must be a fresh name", f"{source}: escrow_agent")
    if WORLD in agents:
        raise ScenarioError(f"{WORLD!r} is reserved", f"{source}: agents")
    cfg = data.get("config") or {}
    try:
        config = LiquidityConfig(int(cfg.get("delta", 90)), int(cfg.get("Delta", 360)))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc), f"{source}: config") from None

    known = set(agents)
    actors = known | {WORLD} | ({escrow} if escrow else set())
    cases: set[str] = set()
    events = []
    at = 0
    for i, raw in enumerate(data.get("events") or []):
        loc = f"{source}: events[{i}]"
        if not isinstance(raw, dict):
            raise ScenarioError("event must be an object", loc)
        action = raw.get("action")
        if action not in ACTIONS:
            raise ScenarioError(f"unknown action {action!r}", loc)
        actor = raw.get("actor", WORLD if action in WORLD_ACTIONS else None)
        if actor not in actors:
            raise ScenarioError(f"unknown actor {actor!r}", loc)
        if actor == WORLD and action not in WORLD_ACTIONS:
            raise ScenarioError(f"action {action!r} needs an agent as actor", loc)
        params = raw.get("params") or {}
        if not isinstance(params, dict):
            raise ScenarioError("params must be an object", loc)
        at = int(raw.get("at", at))
        ev = ScenarioEvent(at, i, actor, action, params, bool(raw.get("must_succeed", False)), raw.get("note"))
        unknown = _agent_refs(ev) - known
        if escrow:
            unknown.discard(escrow)
        if unknown:
            raise ScenarioError(f"unknown agent(s) {sorted(unknown)}", loc)
        if action in ("open_escrow", "deposit_escrow"):
            cid = params.get("case")
            if action == "open_escrow" and not cid:
                raise ScenarioError("open_escrow needs an explicit 'case' id", loc)
            if cid:
                if cid in cases:
                    raise ScenarioError(f"case id {cid!r} reused", loc)
                cases.add(cid)
            if not escrow:
                raise ScenarioError("scenario declares no escrow_agent", loc)
        if action in CASE_ACTIONS and params.get("case") not in cases:
            raise ScenarioError(f"unknown escrow case {params.get('case')!r}", loc)
        events.append(ev)
    events.sort(key=lambda e: (e.at, e.index))
    return Scenario(
        agents, events, escrow, config, _oracle_entries(data.get("oracle")),
        str(data.get("name", "")), str(data.get("description", "")),
    )


def loads_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", f"{source}:{exc.lineno}:{exc.colno}") from None
    return parse_scenario(data, source)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read: {exc.strerror}", str(path)) from None
    return loads_scenario(text, str(path))


def shipped(name: str) -> Scenario:
    """A scenario bundled with the package, e.g. ``shipped("village-market")``."""
    fname = name if name.endswith(".json") else f"{name}.json"
    ref = resources.files("grassroots_bonds.scenarios").joinpath(fname)
    if not ref.is_file():
        raise ScenarioError("no such shipped scenario", fname)
    return loads_scenario(ref.read_text(encoding="utf-8"), fname)


def shipped_names() -> list[str]:
    root = resources.files("grassroots_bonds.scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))
