"""Run scenarios against a :class:`World` and collect checker verdicts."""

from __future__ import annotations

import gc
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from ..bonds import Lot
from ..errors import BondsError, ConservationViolation, ScenarioError
from ..liquidity import LiquidityConfig, circulation, ratios
from ..volition import Verdict, mint_class, swap_class
from .scenario import Scenario, ScenarioEvent
from .trace import TraceRecord
from .world import World


class ScenarioAborted(BondsError):
    """A ``must_succeed`` event was rejected."""

    def __init__(self, message: str, record: TraceRecord):
        super().__init__(message)
        self.record = record


@dataclass
class RunResult:
    world: World
    trace: list[TraceRecord]
    conservation_error: str | None = None
    verdict: Verdict | None = None
    aborted: str | None = None
    errors: list[TraceRecord] = field(default_factory=list)
    failed_assertions: list[TraceRecord] = field(default_factory=list)

    @property
    def conservation_ok(self) -> bool:
        return self.conservation_error is None

    @property
    def correct(self) -> bool:
        return self.verdict is not None and self.verdict.correct

    @property
    def ok(self) -> bool:
        return (self.conservation_ok and self.correct and self.aborted is None
                and not self.failed_assertions)


def _frac(text) -> Fraction | None:
    if text is None or text == "—":
        return None
    return Fraction(str(text))


class Runner:
    """Executes scenario events one at a time; every rejection is traced."""

    def __init__(self, world: World):
        self.world = world

    def run_event(self, ev: ScenarioEvent) -> list[TraceRecord]:
        w = self.world
        try:
            out = self._dispatch(ev)
        except ConservationViolation:
            raise
        except BondsError as exc:
            rec = w.record_error(ev.actor, ev.action, ev.params, exc)
            if ev.must_succeed:
                raise ScenarioAborted(f"event {ev.index} ({ev.action}) failed: {exc}", rec) from exc
            out = [rec]
        return out + w.drain()

    def _dispatch(self, ev: ScenarioEvent) -> list[TraceRecord]:
        w, a, p = self.world, ev.actor, ev.params
        act = ev.action
        if act == "mint":
            return [w.mint(a, p["k"], p.get("maturity", 0))]
        if act == "advance_date":
            return w.advance_date(a, p["to"])
        if act == "advance_all":
            return self._advance_all(p)
        if act == "propose":
            return [w.propose(a, p["to"], p.get("give", ()), p.get("want", ()), p.get("proposal"),
                              auto_accept=bool(p.get("auto_accept", False)))]
        if act == "pay":
            return [w.pay(a, p["to"], p["lots"])]
        if act == "redeem":
            return [w.redeem(a, p["issuer"], p.get("coin_maturity", 0), p["want"])]
        if act == "accept":
            return w.accept(a, p["proposal"])
        if act == "reject":
            return [w.reject(a, p["proposal"])]
        if act == "instrument":
            return w.instrument(a, p["with"], p["kind"], p.get("params", {}), p.get("coin_maturity", 0),
                                p.get("proposal"), bool(p.get("auto_accept", True)))
        if act == "open_escrow":
            params = {k: v for k, v in p.items() if k not in ("kind", "case")}
            return [w.open_escrow(a, p["kind"], p["case"], **params)]
        if act == "deposit":
            return w.deposit(a, p["case"], p["lots"], p.get("role"))
        if act == "deposit_escrow":
            return w.deposit_escrow(a, p["beneficiary"], p["lots"], p["release_at"], p.get("case"))
        if act == "cancel":
            return w.cancel(a, p["case"])
        if act == "exercise":
            return w.exercise(a, p["case"])
        if act == "adjudicate":
            return w.adjudicate(p["case"])
        if act == "draw":
            return w.draw(a, p["case"], p["k"])
        if act == "repay":
            return [w.repay(a, p["case"], p["k"])]
        if act == "oracle_set":
            w.oracle.set(p["kind"], p["subject"], p["day"], p["value"])
            return [w.record(a, "oracle_set", dict(p))]
        if act in ("will", "retract"):
            cls = self._class_of(a, p)
            (w.will if act == "will" else w.retract)(a, cls)
            return [w.record(a, act, dict(p), {"ok": True, "class": str(cls)})]
        if act == "chain_redeem":
            return w.chain_redeem(p["path"])
        if act == "mark":
            return [w.mark(p["name"])]
        if act.startswith("assert_"):
            return [self._assert(ev)]
        raise ScenarioError(f"unhandled action {act!r}")

    def _class_of(self, actor, p):
        if p.get("kind", "Mint") == "Mint":
            return mint_class(actor, p["k"], p.get("maturity", 0))
        if p["kind"] == "Swap":
            return swap_class(actor, p["with"], [Lot.parse(l) for l in p.get("give", ())],
                              [Lot.parse(l) for l in p.get("want", ())])
        raise ScenarioError(f"cannot will a {p['kind']!r} class from a script")

    def _advance_all(self, p) -> list[TraceRecord]:
        w = self.world
        targets = list(p.get("agents") or w.agents)
        if "agents" not in p and w.escrow is not None:
            targets.append(w.escrow.agent_id)  # escrow last: ticks see everyone's new day
        out = []
        for agent in targets:
            try:
                out += w.advance_date(agent, p["to"])
            except BondsError as exc:
                if isinstance(exc, ConservationViolation):
                    raise
                out.append(w.record_error(agent, "advance_date", {"to": p["to"]}, exc))
        return out

    def _assert(self, ev: ScenarioEvent) -> TraceRecord:
        w, p = self.world, ev.params
        failures = []
        if ev.action == "assert_holds":
            led = w.ledger(p["agent"])
            for lot in p["lots"]:
                issuer, maturity, count = lot
                have = led.holdings.count_exact(issuer, maturity)
                if have != count:
                    failures.append(f"{p['agent']} holds {have} {issuer}@{maturity}, expected {count}")
        elif ev.action == "assert_ratio":
            cfg = LiquidityConfig(p.get("delta", w.config.delta), p.get("Delta", w.config.Delta))
            rep = ratios(w.view(), p["agent"], cfg)
            for name in ("cash", "quick", "current"):
                if name in p:
                    want, have = _frac(p[name]), getattr(rep, name)
                    if want != have:
                        failures.append(f"{name} ratio of {p['agent']} is {rep.exact()[name]}, expected {p[name]}")
        elif ev.action == "assert_circulation":
            circ = circulation(w.view())
            if "total" in p and circ.total != p["total"]:
                failures.append(f"circulation {circ.total}, expected {p['total']}")
            for issuer, n in (p.get("per_issuer") or {}).items():
                if circ.per_issuer.get(issuer) != n:
                    failures.append(f"{issuer} circulation {circ.per_issuer.get(issuer)}, expected {n}")
        elif ev.action == "assert_case":
            case = w._escrow().case(p["case"])
            if "status" in p and case.status != p["status"]:
                failures.append(f"case {case.case_id} is {case.status}, expected {p['status']}")
            if "drawn" in p and getattr(case, "drawn", None) != p["drawn"]:
                failures.append(f"case {case.case_id} drawn {getattr(case, 'drawn', None)}, expected {p['drawn']}")
        elif ev.action == "assert_date":
            if w.date_of(p["agent"]) != p["day"]:
                failures.append(f"{p['agent']} is at day {w.date_of(p['agent'])}, expected {p['day']}")
        result = {"ok": not failures}
        if failures:
            result["failures"] = failures
        rec = w.record(ev.actor, ev.action, dict(p), result)
        if failures:
            w.failed_assertions.append(rec)
        return rec


@contextmanager
def _no_cyclic_gc():
    # world state is acyclic and freed by refcount; full collections over
    # hundreds of thousands of live bags dominate large runs otherwise
    was = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was:
            gc.enable()


def build_world(scenario: Scenario, **kwargs) -> World:
    return World(
        scenario.agents,
        escrow_id=scenario.escrow_agent,
        oracle=scenario.oracle(),
        config=scenario.config,
        **kwargs,
    )


def run_scenario(
    scenario: Scenario,
    seed: int | None = None,
    audit: str = "event",
    monitor: bool = True,
    record_run: bool = False,
    keep_trace: bool = True,
    sink: Callable[[TraceRecord], None] | None = None,
    observers=(),
) -> RunResult:
    """Execute every event, then run the end-of-run checkers.

    A conservation failure stops the run at the offending record; so does a
    rejected ``must_succeed`` event.  Other rejections are traced and the run
    carries on.
    """
    with _no_cyclic_gc():
        return _run(scenario, seed, audit, monitor, record_run, keep_trace, sink, observers)


def _run(scenario, seed, audit, monitor, record_run, keep_trace, sink, observers) -> RunResult:
    world = build_world(scenario, seed=seed, audit=audit, monitor=monitor,
                        record_run=record_run, keep_trace=keep_trace, sink=sink)
    world.observers.extend(observers)
    runner = Runner(world)
    result = RunResult(world, world.trace)
    try:
        for ev in scenario.events:
            runner.run_event(ev)
        if audit != "off":
            world.audit()
    except ConservationViolation as exc:
        result.conservation_error = str(exc)
    except ScenarioAborted as exc:
        result.aborted = str(exc)
        try:
            world.audit()
        except ConservationViolation as cexc:
            result.conservation_error = str(cexc)
    if monitor:
        result.verdict = world.verdict()
    result.errors = list(world.errors)
    result.failed_assertions = list(world.failed_assertions)
    return result
