import io
import json

import pytest

from grassroots_bonds.errors import ScenarioError
from grassroots_bonds.liquidity import circulation
from grassroots_bonds.sim import (
    World,
    diff_traces,
    escrow_race_scenario,
    gen_mutual_credit,
    loads_scenario,
    narrative_lines,
    parse_scenario,
    random_scenario,
    read_jsonl,
    run_scenario,
    shipped,
    shipped_names,
    write_jsonl,
)


def scenario(events, agents=("a", "b"), **extra):
    return parse_scenario({"agents": list(agents), "events": events, **extra}, "s.json")


# -- parsing ----------------------------------------------------------------------------


@pytest.mark.parametrize(
    "events,where,what",
    [
        ([{"actor": "zz", "action": "mint", "params": {"k": 1, "maturity": 0}}], "events[0]", "unknown actor"),
        ([{"actor": "a", "action": "fly"}], "events[0]", "unknown action"),
        ([{"actor": "a", "action": "mint"}, {"actor": "a", "action": "pay", "params": {"to": "q"}}],
         "events[1]", "unknown agent"),
        ([{"action": "mint", "params": {}}], "events[0]", "unknown actor"),
        ([{"actor": "a", "action": "cancel", "params": {"case": "c"}}], "events[0]", "unknown escrow case"),
    ],
)
def test_parse_errors_carry_location(events, where, what):
    with pytest.raises(ScenarioError) as err:
        scenario(events)
    assert err.value.location == f"s.json: {where}"
    assert what in str(err.value)


def test_case_ids_are_not_reused():
    ev = {"actor": "a", "action": "deposit_escrow",
          "params": {"case": "c", "beneficiary": "b", "lots": [["a", 0, 1]], "release_at": 2}}
    with pytest.raises(ScenarioError, match="reused"):
        scenario([ev, ev], escrow_agent="e")
    with pytest.raises(ScenarioError, match="no escrow_agent"):
        scenario([ev])


def test_bad_json_reports_line_and_column():
    with pytest.raises(ScenarioError) as err:
        loads_scenario('{"agents": [\n  "a",,\n]}', "x.json")
    assert err.value.location.startswith("x.json:2:")


def test_events_are_ordered_by_at_then_file_order():
    s = scenario([
        {"at": 2, "actor": "a", "action": "mint", "params": {"k": 1, "maturity": 0}},
        {"at": 1, "actor": "b", "action": "mint", "params": {"k": 1, "maturity": 0}},
        {"actor": "a", "action": "mint", "params": {"k": 2, "maturity": 0}},  # inherits at=1
    ])
    assert [(e.at, e.index) for e in s.events] == [(1, 1), (1, 2), (2, 0)]


def test_restricted_keeps_only_local_events():
    s = shipped("village-market")
    part = s.restricted({"alice", "bob"})
    assert part.agents == ["alice", "bob"]
    assert not any(e.action.startswith("assert_") for e in part.events)
    assert all(e.actor in ("alice", "bob", "world") for e in part.events)


def test_shipped_scenarios_listed():
    assert {"village-market", "escrow-showcase"} <= set(shipped_names())
    with pytest.raises(ScenarioError):
        shipped("nope")


# -- traces ----------------------------------------------------------------------------


def test_trace_jsonl_roundtrip(village):
    buf = io.StringIO()
    write_jsonl(village.trace, buf)
    back = list(read_jsonl(io.StringIO(buf.getvalue())))
    assert back == village.trace
    assert diff_traces(village.trace, back) == []


def test_diff_traces_reports_fields_and_length(village):
    t = list(village.trace)
    changed = json.loads(t[3].dumps())
    changed["actor"] = "mallory"
    other = t[:3] + [type(t[3]).from_json(changed)] + t[4:-1]
    diffs = diff_traces(t, other)
    assert diffs[0].seq == t[3].seq and diffs[0].field == "actor"
    assert diffs[-1].field == "length"
    assert len(diff_traces(t, other, limit=1)) == 1


def test_read_jsonl_names_bad_line():
    with pytest.raises(ValueError, match="line 2"):
        list(read_jsonl(io.StringIO('{"seq": 0, "day_of_actor": 0, "actor": "a", "action": "x", '
                                    '"params": {}, "result": {}, "world_hash": "0"}\n{"seq": 1}\n')))


def test_village_runs_clean_and_is_reproducible(village):
    assert village.ok and not village.errors
    again = run_scenario(shipped("village-market"), seed=42)
    assert [r.dumps() for r in again.trace] == [r.dumps() for r in village.trace]
    assert all(len(r.world_hash) == 32 for r in village.trace)


def test_seed_orders_deliveries_but_not_totals():
    def go(seed):
        w = World(list("abcd"), seed=seed)
        for a in "abcd":
            w.mint(a, 3, 0)
        for a, b in ["ab", "cd", "ac", "bd"]:
            w.propose(a, b, [[a, 0, 1]], [[b, 0, 1]], auto_accept=True)
        w.drain()
        w.audit()
        return w

    orders = {tuple(r.params["proposal"] for r in go(s).trace if r.action == "deliver") for s in range(6)}
    assert len(orders) > 1
    assert go(3).world_hash() == go(3).world_hash()
    assert {circulation(go(s).view()).total for s in range(6)} == {8}


def test_narrative_reads_like_prose(village):
    lines = narrative_lines(village.trace)
    assert lines[0] == "[day 0] Alice mints 15 alice-coins"
    assert "[day 0] Bob accepts proposal t1 on receipt" in lines


def test_rejections_are_traced_and_run_continues():
    s = scenario([
        {"actor": "a", "action": "pay", "params": {"to": "b", "lots": [["b", 0, 1]]}},
        {"actor": "a", "action": "mint", "params": {"k": 1, "maturity": 0}},
    ])
    r = run_scenario(s)
    assert len(r.errors) == 1 and r.trace[-1].action == "mint"
    assert r.conservation_ok


def test_must_succeed_aborts():
    s = scenario([
        {"actor": "a", "action": "pay", "params": {"to": "b", "lots": [["b", 0, 1]]}, "must_succeed": True},
        {"actor": "a", "action": "mint", "params": {"k": 1, "maturity": 0}},
    ])
    r = run_scenario(s)
    assert r.aborted and not r.ok
    assert r.trace[-1].action != "mint"


def test_failed_assertion_is_reported():
    s = scenario([
        {"actor": "a", "action": "mint", "params": {"k": 1, "maturity": 0}},
        {"action": "assert_circulation", "params": {"total": 5}},
    ])
    r = run_scenario(s)
    assert len(r.failed_assertions) == 1 and not r.ok


# -- generators ---------------------------------------------------------------------------


def test_gen_mutual_credit_small():
    r = run_scenario(parse_scenario(gen_mutual_credit(4, 10)))
    assert r.ok
    assert circulation(r.world.view()).total == 4 * 3 * 10
    with pytest.raises(ValueError):
        gen_mutual_credit(0, 1)


@pytest.mark.parametrize("seed", range(5))
def test_random_scenarios_conserve(seed):
    r = run_scenario(parse_scenario(random_scenario(seed)), seed=seed)
    assert r.conservation_ok and r.correct


@pytest.mark.parametrize("seed", range(5))
def test_escrow_races_settle(seed):
    r = run_scenario(parse_scenario(escrow_race_scenario(seed)), seed=seed)
    assert r.conservation_ok and r.correct
    statuses = {c.case_id: c.status for c in r.world.escrow.cases.values()}
    assert all(statuses[f"tr{i}"] in ("released", "cancelled") for i in range(3))


def test_escrow_showcase():
    r = run_scenario(shipped("escrow-showcase"), seed=1)
    assert r.ok, (r.failed_assertions, r.aborted)
