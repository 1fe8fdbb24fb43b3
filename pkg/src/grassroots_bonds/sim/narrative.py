"""Plain-language lines rendered from trace records.

The machine trace is the source of truth; these templates only retell it.
"""

from __future__ import annotations

from typing import Iterable

from .trace import TraceRecord


def _name(agent: str) -> str:
    return agent[:1].upper() + agent[1:]


def _lots(lots) -> str:
    parts = []
    for issuer, maturity, count in lots:
        noun = "coin" if maturity == 0 else "bond"
        plural = "" if count == 1 else "s"
        when = "" if maturity == 0 else f" (day {maturity})"
        parts.append(f"{count} {issuer}-{noun}{plural}{when}")
    return " + ".join(parts) if parts else "nothing"


def narrate(rec: TraceRecord) -> str | None:
    a, p, r = _name(rec.actor), rec.params, rec.result
    day = "" if rec.day_of_actor is None else f"[day {rec.day_of_actor}] "
    act = rec.action
    if not r.get("ok", True):
        if act.startswith("assert_"):
            return f"{day}CHECK FAILED: {'; '.join(r.get('failures', []))}"
        return f"{day}{a}: {act} rejected — {r.get('error', 'unknown error')}"
    if act == "mint":
        return f"{day}{a} mints {_lots([[rec.actor, p['maturity'], p['k']]])}"
    if act == "advance_date":
        return f"{day}{a} advances to day {p['to']}"
    if act == "propose":
        what = f" ({p['instrument']})" if "instrument" in p else ""
        want = _lots(p["want"]) if p["want"] else "nothing"
        return f"{day}{a} offers {_name(p['to'])} {_lots(p['give'])} for {want}{what}"
    if act == "deliver":
        if r.get("response") == "declined_with_menu":
            menu = ", ".join(f"{i}-bond (day {m})" for i, m, _ in r.get("menu", []))
            return f"{day}{a} cannot supply what {_name(p['from'])} asked for; menu: {menu or 'empty'}"
        if p.get("auto_accept") and r.get("response") == "accepted":
            return f"{day}{a} accepts proposal {p['proposal']} on receipt"
        return None
    if act == "accept":
        return f"{day}{a} accepts proposal {p['proposal']}"
    if act in ("reject", "returned"):
        return f"{day}{a}: proposal {p['proposal']} declined"
    if act == "swap":
        what = f" [{p['instrument']}]" if "instrument" in p else ""
        return f"{day}{_name(p['p'])} gives {_name(p['q'])} {_lots(p['x'])} for {_lots(p['y'])}{what}"
    if act == "pay":
        return f"{day}{_name(p['p'])} pays {_name(p['q'])} {_lots(p['x'])}"
    if act == "redeem":
        return f"{day}{_name(p['p'])} redeems {_lots(p['x'])} with {_name(p['q'])} for {_lots(p['y'])}"
    if act == "escrow_open":
        return f"{day}{a} opens {p['kind']} escrow {p['case']}"
    if act == "escrow_deposit":
        extra = f", released day {p['release_at']} unless cancelled" if "release_at" in p else ""
        return f"{day}{a} deposits {_lots(p['lots'])} in escrow {p['case']}{extra}"
    if act == "escrow_release":
        return f"{day}{a} releases {_lots(p['lots'])} to {_name(p['to'])} ({p['reason']})"
    if act == "escrow_cancel":
        return f"{day}{a} cancels escrow {p['case']}"
    if act == "escrow_exercise":
        return f"{day}{a} exercises option {p['case']}"
    if act == "escrow_adjudicate":
        return f"{day}{a} adjudicates {p['case']}: {r.get('status')}"
    if act == "credit_draw":
        return f"{day}{a} draws {p['k']} on credit line {p['case']} (drawn {r.get('drawn')})"
    if act == "credit_repay":
        return f"{day}{a} repays {p['k']} on credit line {p['case']} (drawn {r.get('drawn')})"
    if act == "reimburse":
        return f"{day}{a} reimburses {_name(p['to'])} with {_lots(p['lots'])}"
    if act == "mark":
        return f"— {p['name']} —"
    if act.startswith("assert_"):
        return None
    return f"{day}{a}: {act}"


def narrative_lines(records: Iterable[TraceRecord]) -> list[str]:
    return [line for line in map(narrate, records) if line is not None]
