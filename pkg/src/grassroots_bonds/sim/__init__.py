"""Deterministic event-driven simulator for bond economies."""

from .generators import escrow_race_scenario, gen_mutual_credit, random_scenario
from .harness import RunResult, Runner, ScenarioAborted, build_world, run_scenario
from .narrative import narrate, narrative_lines
from .scenario import Scenario, ScenarioEvent, load_scenario, loads_scenario, parse_scenario, shipped, shipped_names
from .trace import TraceRecord, diff_traces, read_jsonl, write_jsonl
from .world import World

__all__ = [
    "RunResult", "Runner", "Scenario", "ScenarioAborted", "ScenarioEvent", "TraceRecord", "World",
    "build_world", "diff_traces", "escrow_race_scenario", "gen_mutual_credit", "load_scenario", "loads_scenario", "narrate",
    "narrative_lines", "parse_scenario", "random_scenario", "read_jsonl", "run_scenario", "shipped",
    "shipped_names", "write_jsonl",
]
