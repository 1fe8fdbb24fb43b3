"""Command-line front end.

    grassroots-bonds run SCRIPT [--check all] [--format jsonl|table|narrative] [-o FILE]
    grassroots-bonds ratios SCRIPT --agent bob --at after-step-2
    grassroots-bonds report SCRIPT --out-dir DIR
    grassroots-bonds diff-trace EXPECTED ACTUAL
    grassroots-bonds gen-mutual-credit --n 11 --k 100

``-`` reads a script from stdin.  Exit status: 0 ok, 1 a check failed,
2 usage or parse error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import IO

from . import __version__
from .errors import BondsError, ScenarioError
from .liquidity import LiquidityConfig, circulation, ratios
from .sim.generators import gen_mutual_credit
from .sim.harness import RunResult, run_scenario
from .sim.narrative import narrate
from .sim.scenario import Scenario, load_scenario, loads_scenario
from .sim.trace import TraceRecord, diff_traces, read_jsonl

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- helpers -----------------------------------------------------------------


def _load(path: str) -> Scenario:
    if path == "-":
        return loads_scenario(sys.stdin.read(), "<stdin>")
    return load_scenario(path)


def _config(scenario: Scenario, args) -> LiquidityConfig:
    delta = args.delta if args.delta is not None else scenario.config.delta
    Delta = args.Delta if args.Delta is not None else scenario.config.Delta
    try:
        return LiquidityConfig(delta, Delta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


@contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _brief(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), sort_keys=False)


def _table_row(rec: TraceRecord) -> str:
    day = "" if rec.day_of_actor is None else str(rec.day_of_actor)
    status = "ok" if rec.result.get("ok", True) else "REJECTED"
    return f"{rec.seq:>6}  {day:>4}  {rec.actor:<10} {rec.action:<18} {status:<8} {_brief(rec.params)}"


TABLE_HEADER = f"{'seq':>6}  {'day':>4}  {'actor':<10} {'action':<18} {'status':<8} params"


def _writer(fmt: str, fh: IO[str]):
    if fmt == "jsonl":
        def write(rec):
            fh.write(rec.dumps())
            fh.write("\n")
    elif fmt == "table":
        fh.write(TABLE_HEADER + "\n")

        def write(rec):
            fh.write(_table_row(rec) + "\n")
    else:
        def write(rec):
            line = narrate(rec)
            if line is not None:
                fh.write(line + "\n")
    return write


def _summary(result: RunResult, checks: set[str], err: IO[str]) -> int:
    """Print the checker outcome to ``err``; return the exit status."""
    failed = False
    w = result.world
    circ = circulation(w.view())
    print(f"records: {w.seq}", file=err)
    print(f"circulation: {circ.total}", file=err)
    if "conservation" in checks:
        if result.conservation_ok:
            print("conservation: ok", file=err)
        else:
            print(f"conservation: FAILED ({result.conservation_error})", file=err)
            failed = True
    if "correct-run" in checks:
        v = result.verdict
        if v is not None and v.correct:
            print("correct-run: correct", file=err)
        else:
            print(f"correct-run: FAILED ({v})", file=err)
            failed = True
    if result.errors:
        print(f"rejected events: {len(result.errors)}", file=err)
    for rec in result.failed_assertions:
        print(f"assertion failed at seq {rec.seq}: {'; '.join(rec.result.get('failures', []))}", file=err)
        failed = True
    if result.aborted:
        print(f"aborted: {result.aborted}", file=err)
        failed = True
    return EXIT_CHECK if failed else EXIT_OK


def _checks(value: str | None) -> set[str]:
    if value is None:
        return set()
    return {"conservation", "correct-run"} if value == "all" else {value}


# -- subcommands ---------------------------------------------------------------


def cmd_run(args) -> int:
    scenario = _load(args.script)
    checks = _checks(args.check)
    with _output(args.output) as fh:
        result = run_scenario(
            scenario,
            seed=args.seed,
            audit=args.audit,
            monitor="correct-run" in checks,
            keep_trace=False,
            sink=_writer(args.format, fh),
        )
        fh.flush()
    return _summary(result, checks, sys.stderr)


def _capture_at(scenario: Scenario, at: str | None, agents: list[str], cfg: LiquidityConfig, seed):
    """Replay and snapshot the ratio reports at a mark name or trace seq."""
    captured: dict = {}
    target_seq = int(at) if at is not None and at.isdigit() else None

    def grab(world, rec):
        hit = (at is not None and target_seq is None and rec.action == "mark" and rec.params.get("name") == at)
        hit = hit or (target_seq is not None and rec.seq == target_seq)
        if hit and not captured:
            view = world.view()
            captured["reports"] = [ratios(view, a, cfg) for a in agents]
            captured["seq"] = rec.seq

    result = run_scenario(scenario, seed=seed, audit="end", monitor=False, keep_trace=False, observers=[grab])
    if at is None:
        view = result.world.view()
        return [ratios(view, a, cfg) for a in agents], result.world.seq - 1
    if not captured:
        raise UsageError(f"no mark or seq {at!r} in the replayed trace")
    return captured["reports"], captured["seq"]


def cmd_ratios(args) -> int:
    scenario = _load(args.script)
    cfg = _config(scenario, args)
    agents = args.agent or list(scenario.agents)
    unknown = [a for a in agents if a not in scenario.agents]
    if unknown:
        raise UsageError(f"unknown agent(s): {', '.join(unknown)}")
    reports, seq = _capture_at(scenario, args.at, agents, cfg, args.seed)
    if args.format == "jsonl":
        for rep in reports:
            row = {"seq": seq, "delta": cfg.delta, "Delta": cfg.Delta, **rep.to_json(),
                   "rounded": rep.rounded()}
            print(_brief(row))
        return EXIT_OK
    print(f"ratios at seq {seq} (delta={cfg.delta}, Delta={cfg.Delta})")
    print(f"{'agent':<10} {'day':>4}  {'cash':<16} {'quick':<16} {'current':<16}")
    for rep in reports:
        ex, rd = rep.exact(), rep.rounded()
        cells = [f"{ex[n]} ({rd[n]})" if ex[n] != "—" else "—" for n in ("cash", "quick", "current")]
        print(f"{rep.agent:<10} {rep.day:>4}  {cells[0]:<16} {cells[1]:<16} {cells[2]:<16}")
    return EXIT_OK


def cmd_report(args) -> int:
    from . import plotting

    scenario = _load(args.script)
    cfg = _config(scenario, args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stride = max(1, len(scenario.events) // 1000)
    series: list[tuple[int, int]] = []

    def sample(world, rec):
        if rec.seq % stride == 0:
            series.append((rec.seq, circulation(world.view()).total))

    with open(out / "trace.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        result = run_scenario(scenario, seed=args.seed, audit="end", keep_trace=False,
                              sink=_writer("jsonl", fh), observers=[sample])
    w = result.world
    view = w.view()
    if not series or series[-1][0] != w.seq - 1:
        series.append((w.seq - 1, circulation(view).total))

    reports = [ratios(view, a, cfg) for a in w.agents]
    with open(out / "ratios.csv", "w", encoding="utf-8", newline="") as fh:
        cw = csv.writer(fh)
        cw.writerow(["agent", "day", "cash", "quick", "current", "cash_rounded", "quick_rounded",
                     "current_rounded", "current_liabilities"])
        for rep in reports:
            ex, rd = rep.exact(), rep.rounded()
            cw.writerow([rep.agent, rep.day, ex["cash"], ex["quick"], ex["current"],
                         rd["cash"], rd["quick"], rd["current"], rep.current_liabilities])

    holders = list(view.assets) + ([w.escrow.agent_id] if w.escrow is not None else [])
    counts: dict = {}
    with open(out / "holdings.csv", "w", encoding="utf-8", newline="") as fh:
        cw = csv.writer(fh)
        cw.writerow(["holder", "issuer", "maturity", "count"])
        bags = [(h, view.assets[h]) for h in view.assets]
        if w.escrow is not None:
            bags.append((w.escrow.agent_id, view.custody))
        for holder, bag in bags:
            for issuer, maturity, n in sorted((i, m, n) for (i, m), n in bag.group_counts()):
                cw.writerow([holder, issuer, maturity, n])
                counts[(holder, issuer)] = counts.get((holder, issuer), 0) + n

    circ = circulation(view)
    with open(out / "circulation.csv", "w", encoding="utf-8", newline="") as fh:
        cw = csv.writer(fh)
        cw.writerow(["issuer", "in_circulation"])
        for issuer in sorted(circ.per_issuer):
            cw.writerow([issuer, circ.per_issuer[issuer]])
        cw.writerow(["total", circ.total])
    with open(out / "circulation_series.csv", "w", encoding="utf-8", newline="") as fh:
        cw = csv.writer(fh)
        cw.writerow(["seq", "total"])
        cw.writerows(series)

    plotting.plot_circulation_series([s for s, _ in series], [t for _, t in series], out / "circulation.png")
    if len(w.agents) <= 40:
        plotting.plot_ratios(reports, out / "ratios.png")
        plotting.plot_holdings(holders, sorted(w.agents), counts, out / "holdings.png")
    for name in sorted(p.name for p in out.iterdir()):
        print(out / name)
    return _summary(result, {"conservation"}, sys.stderr)


def cmd_diff_trace(args) -> int:
    def read(path):
        try:
            with open(path, encoding="utf-8") as fh:
                return list(read_jsonl(fh))
        except OSError as exc:
            raise UsageError(f"{path}: {exc.strerror}") from None
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from None

    expected, actual = read(args.expected), read(args.actual)
    diffs = diff_traces(expected, actual, args.limit)
    for d in diffs:
        print(d)
    if diffs:
        print(f"{len(diffs)} difference(s)", file=sys.stderr)
        return EXIT_CHECK
    print(f"identical ({len(expected)} records)", file=sys.stderr)
    return EXIT_OK


def cmd_gen_mutual_credit(args) -> int:
    try:
        data = gen_mutual_credit(args.n, args.k)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    with _output(args.output) as fh:
        json.dump(data, fh, ensure_ascii=False, indent=None, separators=(",", ":"))
        fh.write("\n")
    return EXIT_OK


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="grassroots-bonds", description="Grassroots bonds simulator.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def script_args(p, with_cfg=True):
        p.add_argument("script", help="scenario JSON, or - for stdin")
        p.add_argument("--seed", type=int, default=None, help="scheduler seed (default: round-robin)")
        if with_cfg:
            p.add_argument("--delta", type=int, default=None, help="quick horizon in days")
            p.add_argument("--Delta", type=int, default=None, help="current horizon in days")

    p = sub.add_parser("run", help="run a scenario and write its trace")
    script_args(p, with_cfg=False)
    p.add_argument("-o", "--output", help="trace file (default stdout)")
    p.add_argument("--format", choices=("jsonl", "table", "narrative"), default="jsonl")
    p.add_argument("--check", choices=("conservation", "correct-run", "all"), default=None)
    p.add_argument("--audit", choices=("event", "end", "off"), default="event",
                   help="when the conservation audit runs (default: after every record)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ratios", help="liquidity ratios at a mark or trace seq")
    script_args(p)
    p.add_argument("--agent", action="append", help="agent to report (repeatable; default all)")
    p.add_argument("--at", help="mark name or trace seq (default: end of run)")
    p.add_argument("--format", choices=("table", "jsonl"), default="table")
    p.set_defaults(func=cmd_ratios)

    p = sub.add_parser("report", help="write CSV tables and PNG figures for a run")
    script_args(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("diff-trace", help="field-level diff of two JSONL traces")
    p.add_argument("expected")
    p.add_argument("actual")
    p.add_argument("--limit", type=int, default=None)
    p.set_defaults(func=cmd_diff_trace)

    p = sub.add_parser("gen-mutual-credit", help="emit an N-villager mutual-credit scenario")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen_mutual_credit)
    return ap


def main(argv: list[str] | None = None) -> int:
    if hasattr(sys.stdout, "reconfigure"):
        sys.stdout.reconfigure(encoding="utf-8")
        sys.stderr.reconfigure(encoding="utf-8")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BondsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
