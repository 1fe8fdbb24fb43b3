"""Scenario generators: community mutual credit and random event streams."""

from __future__ import annotations

import random
from itertools import combinations


def villager_names(n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"v{i:0{width}d}" for i in range(n)]


def gen_mutual_credit(n: int, k: int, names: list[str] | None = None) -> dict:
    """Every pair of ``n`` villagers swaps ``k`` freshly minted coins 1-for-1.

    Each villager mints its whole outlay, ``(n - 1) * k`` coins, up front;
    pair ``(i, j)`` is then one proposal from ``i``, accepted on delivery.
    """
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    names = names or villager_names(n)
    if len(names) != n:
        raise ValueError("names must match n")
    events: list[dict] = []
    if n > 1:
        events += [
            {"actor": a, "action": "mint", "params": {"k": (n - 1) * k, "maturity": 0}} for a in names
        ]
    for a, b in combinations(names, 2):
        events.append({
            "actor": a,
            "action": "propose",
            "params": {"to": b, "give": [[a, 0, k]], "want": [[b, 0, k]], "auto_accept": True},
        })
    events.append({"action": "assert_circulation", "params": {"total": n * (n - 1) * k}})
    return {
        "name": f"mutual-credit-{n}x{k}",
        "description": f"{n} villagers, pairwise {k}-coin mutual credit",
        "agents": names,
        "config": {"delta": 90, "Delta": 360},
        "oracle": [],
        "events": events,
    }


def _lot(rng: random.Random, bag_lots, max_count: int):
    issuer, maturity, have = rng.choice(bag_lots)
    return [issuer, maturity, rng.randint(1, min(have, max_count))]


def random_scenario(seed: int, agents=("a", "b", "c", "d", "e"), n_events: int = 30,
                    escrow: bool = True) -> dict:
    """A seeded mixed stream of mints, trades, payments, redemptions and escrow.

    Events are drawn blind (without simulating), so some are rejected at
    run time; rejections are part of what the checkers must survive.
    """
    rng = random.Random(seed)
    agents = list(agents)
    events: list[dict] = []
    day = 0
    cases = 0
    for _ in range(n_events):
        actor = rng.choice(agents)
        other = rng.choice([a for a in agents if a != actor])
        roll = rng.random()
        if roll < 0.2:
            events.append({"actor": actor, "action": "mint",
                           "params": {"k": rng.randint(1, 20), "maturity": rng.choice([0, 0, 5, 10, 40])}})
        elif roll < 0.4:
            k = rng.randint(1, 10)
            events.append({"actor": actor, "action": "propose",
                           "params": {"to": other, "give": [[actor, rng.choice([0, 5]), k]],
                                      "want": [[other, rng.choice([0, 10]), rng.randint(1, 10)]],
                                      "auto_accept": rng.random() < 0.7}})
        elif roll < 0.5:
            events.append({"actor": actor, "action": "pay",
                           "params": {"to": other, "lots": [[other, 0, rng.randint(1, 5)]]}})
        elif roll < 0.6:
            events.append({"actor": actor, "action": "redeem",
                           "params": {"issuer": other, "coin_maturity": 0,
                                      "want": [rng.choice(agents), rng.choice([0, 5, 10])]}})
        elif roll < 0.7:
            events.append({"actor": actor, "action": "instrument",
                           "params": {"with": other, "kind": "SymmetricMutualCredit",
                                      "params": {"k": rng.randint(1, 10)}}})
        elif roll < 0.8 and escrow:
            cases += 1
            events.append({"actor": actor, "action": "deposit_escrow",
                           "params": {"case": f"r{cases}", "beneficiary": other,
                                      "lots": [[rng.choice(agents), 0, rng.randint(1, 3)]],
                                      "release_at": day + rng.randint(0, 6)}})
            if rng.random() < 0.5:
                events.append({"actor": actor, "action": "cancel", "params": {"case": f"r{cases}"}})
        elif roll < 0.9:
            day += rng.randint(1, 5)
            events.append({"action": "advance_all", "params": {"to": day}})
        else:
            events.append({"actor": actor, "action": "chain_redeem",
                           "params": {"path": [actor] + rng.sample([a for a in agents if a != actor], 2)}})
    scenario = {
        "name": f"random-{seed}",
        "agents": agents,
        "config": {"delta": 90, "Delta": 360},
        "oracle": [],
        "events": events,
    }
    if escrow:
        scenario["escrow_agent"] = "escrow"
    return scenario


def escrow_race_scenario(seed: int, cases: int = 3) -> dict:
    """Timed releases with cancels placed around their deadlines, plus a credit line.

    On each day the depositors may act before or after the escrow agent
    advances, so a cancel on the release day can land on either side of the
    timer.  The credit line sees random draws (some not whole-interest) and
    repayments until it expires.
    """
    rng = random.Random(seed)
    agents = ["p", "q", "r"]
    rate = rng.choice(["0", "1/10", "1/5", "1/2"])
    limit = 20
    expiry = rng.randint(6, 12)
    schedule = sorted(rng.sample(range(1, expiry + 1), rng.randint(0, 3)))
    events: list[dict] = [
        {"actor": "p", "action": "mint", "params": {"k": 10 * cases + limit, "maturity": 0}},
        {"actor": "p", "action": "open_escrow",
         "params": {"kind": "CreditLine", "case": "line", "depositor": "p", "beneficiary": "q",
                    "limit": limit, "rate": rate, "schedule": schedule, "expiry": expiry}},
        {"actor": "p", "action": "deposit", "params": {"case": "line", "lots": [["p", 0, limit]]}},
    ]
    deadlines = {}
    for i in range(cases):
        cid = f"tr{i}"
        deadlines[cid] = rng.randint(1, 6)
        events.append({"actor": "p", "action": "deposit_escrow",
                       "params": {"case": cid, "beneficiary": rng.choice(["q", "r"]),
                                  "lots": [["p", 0, rng.randint(1, 10)]], "release_at": deadlines[cid]}})
    cancel_day = {cid: t + rng.choice([-1, 0, 0, 1]) for cid, t in deadlines.items() if rng.random() < 0.7}
    last = max(max(deadlines.values()), expiry) + 1
    for day in range(1, last + 1):
        escrow_first = rng.random() < 0.5
        if escrow_first:
            events.append({"actor": "escrow", "action": "advance_date", "params": {"to": day}})
        events.append({"action": "advance_all", "params": {"to": day, "agents": agents}})
        for cid, d in cancel_day.items():
            if d == day:
                events.append({"actor": "p", "action": "cancel", "params": {"case": cid}})
        if rng.random() < 0.5:
            events.append({"actor": "q", "action": "draw", "params": {"case": "line", "k": rng.randint(1, 8)}})
        if rng.random() < 0.3:
            events.append({"actor": "q", "action": "repay", "params": {"case": "line", "k": rng.randint(1, 4)}})
        if not escrow_first:
            events.append({"actor": "escrow", "action": "advance_date", "params": {"to": day}})
    return {
        "name": f"escrow-race-{seed}",
        "agents": agents,
        "escrow_agent": "escrow",
        "config": {"delta": 90, "Delta": 360},
        "oracle": [],
        "events": events,
    }
