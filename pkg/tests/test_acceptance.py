"""Acceptance suite: one test per numbered criterion.

Each test is marked ``criterion(n, title)``; conftest prints a PASS/FAIL line
per criterion in the terminal summary.
"""

import random
import subprocess
import sys
import time
from fractions import Fraction
from importlib import resources

import pytest

from grassroots_bonds.bonds import AgentLedger, Bond, BondBag
from grassroots_bonds.errors import ChainBroken
from grassroots_bonds.liquidity import BalanceView, LiquidityConfig, circulation, foreign_assets, nu, ratios
from grassroots_bonds.sim import (
    World,
    escrow_race_scenario,
    gen_mutual_credit,
    parse_scenario,
    random_scenario,
    run_scenario,
    shipped,
    shipped_names,
)
from grassroots_bonds.volition import check_interleaving, interleave, round_robin

SCENARIOS = resources.files("grassroots_bonds.scenarios")


def lots(rec, key):
    return [tuple(l) for l in rec.params[key]]


# -- 1 ------------------------------------------------------------------------------


@pytest.mark.criterion(1, "golden ratios after village steps 1-2")
def test_golden_ratios(record_property):
    t0 = time.perf_counter()
    got = {}

    def grab(world, rec):
        if rec.action == "mark" and rec.params["name"] == "after-step-2":
            view = world.view()
            got.update({a: ratios(view, a, LiquidityConfig(90, 360)) for a in ("bob", "diana")})
            got["dates"] = {a: world.date_of(a) for a in world.agents}

    run_scenario(shipped("village-market"), seed=42, observers=[grab])
    elapsed = time.perf_counter() - t0
    bob, diana = got["bob"], got["diana"]
    record_property("detail", f"bob {bob.exact()['cash']}, diana {diana.exact()['cash']}/"
                              f"{diana.exact()['quick']}, {elapsed:.2f}s")
    assert set(got["dates"].values()) == {0}
    assert bob.cash == bob.quick == bob.current == Fraction(35, 39)
    assert bob.exact() == {"cash": "35/39", "quick": "35/39", "current": "35/39"}
    assert diana.exact() == {"cash": "0/35", "quick": "42/35", "current": "42/35"}
    assert diana.quick == diana.current == Fraction(42, 35)
    assert bob.rounded()["cash"] == "0.90" and diana.rounded()["quick"] == "1.20"
    assert elapsed < 1.0


# -- 2 ------------------------------------------------------------------------------


@pytest.mark.criterion(2, "village-market end to end, conservation after every event")
def test_village_market_end_to_end(record_property):
    t0 = time.perf_counter()
    r = run_scenario(shipped("village-market"), seed=42, audit="event")
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{len(r.trace)} records, {elapsed:.2f}s")
    assert r.ok and not r.errors
    t = r.trace

    def find(action, **params):
        return [x for x in t if x.action == action and all(x.params.get(k) == v for k, v in params.items())]

    # step 1: 15 <-> 15 mutual credit
    (s1,) = find("swap", p="alice", q="bob", instrument="SymmetricMutualCredit")
    assert lots(s1, "x") == [("alice", 0, 15)] and lots(s1, "y") == [("bob", 0, 15)]
    # step 2: 20 coins for 24 bonds maturing day 25
    (s2,) = find("swap", p="diana", q="bob", instrument="ZeroCouponLoan")
    assert lots(s2, "x") == [("diana", 0, 20)] and lots(s2, "y") == [("bob", 25, 24)]
    # step 3: Bob pays Alice 5
    (s3,) = find("pay", p="bob", q="alice")
    assert lots(s3, "x") == [("alice", 0, 5)] and s3.result["class"] == "payment"
    # step 4: 5 <-> 5 portfolio swap
    (s4,) = find("swap", proposal="step4")
    assert lots(s4, "x") == [("frank", 0, 5)] and lots(s4, "y") == [("alice", 0, 5)]
    # step 5: escrow of 5 frank-coins released at day 7
    (s5,) = find("escrow_deposit", case="dock")
    assert lots(s5, "lots") == [("frank", 0, 5)] and s5.params["release_at"] == 7
    (rel,) = find("escrow_release", case="dock")
    assert rel.params["reason"] == "timer" and rel.day_of_actor == 7 and lots(rel, "lots") == [("frank", 0, 5)]
    # step 6: five unit redemptions Frank <-> Diana
    s6 = find("redeem", p="frank", q="diana")
    assert len(s6) == 5
    assert all(lots(x, "x") == [("diana", 0, 1)] and len(x.params["y"]) == 1 for x in s6)
    assert all(x.params["y"][0][2] == 1 for x in s6)
    # step 7: 10 bob-bonds for 4 frank-coins
    (s7,) = find("swap", instrument="SaleOfDebt")
    assert lots(s7, "x") == [("bob", 25, 10)] and lots(s7, "y") == [("frank", 0, 4)]
    assert [x.seq for x in (s1, s2, s3, s4, s5, s6[0], s7)] == sorted(x.seq for x in (s1, s2, s3, s4, s5, s6[0], s7))
    assert elapsed < 1.0


# -- 3 ------------------------------------------------------------------------------


@pytest.mark.criterion(3, "mutual-credit circulation N(N-1)k")
def test_circulation_formula(record_property):
    small = run_scenario(parse_scenario(gen_mutual_credit(11, 100)))
    view = small.world.view()
    assert small.ok
    assert circulation(view).total == 11_000
    assert {foreign_assets(view, a, 0) for a in small.world.agents} == {1_000}

    t0 = time.perf_counter()
    big = run_scenario(parse_scenario(gen_mutual_credit(501, 100)), audit="end", monitor=False, keep_trace=False)
    elapsed = time.perf_counter() - t0
    total = circulation(big.world.view()).total
    record_property("detail", f"N=501 total {total:,} in {elapsed:.1f}s")
    assert big.conservation_ok and not big.failed_assertions and not big.errors
    assert total == 25_050_000
    assert elapsed < 30.0


# -- 4 ------------------------------------------------------------------------------


@pytest.mark.criterion(4, "conservation over 1,000 seeded random runs")
def test_conservation_random_runs(record_property):
    bad, rejected = [], 0
    for seed in range(1000):
        r = run_scenario(parse_scenario(random_scenario(seed)), seed=seed, audit="event", monitor=False)
        rejected += len(r.errors)
        if not r.conservation_ok:
            bad.append((seed, r.conservation_error))
    record_property("detail", f"{len(bad)} failures, {rejected} rejected events survived")
    assert not bad


# -- 5 ------------------------------------------------------------------------------


def _chain(rng, k):
    """p_0 .. p_k where p_i holds one p_{i+1}-coin, plus some clutter."""
    names = [f"p{i}" for i in range(k + 1)]
    w = World(names, seed=rng.randrange(1 << 30))
    for a in names:
        w.mint(a, rng.randint(1, 3), rng.choice([0, 0, 40]))
    for i in range(k):
        w.mint(names[i + 1], 1, 0)
        w.propose(names[i + 1], names[i], [[names[i + 1], 0, 1]], [], auto_accept=True)
    w.drain()
    return w, names


def _snapshot(w):
    return {a: (w.ledger(a).holdings.lot_key(), w.ledger(a).next_serial) for a in w.agents}


@pytest.mark.criterion(5, "chain redemption: k-1 redeems, broken chains change nothing")
def test_chain_redemption(record_property):
    rng = random.Random(5)
    runs = broken = 0
    for _ in range(300):
        k = rng.randint(1, 10)
        w, path = _chain(rng, k)
        n0 = len(w.trace)
        recs = w.chain_redeem(path)
        assert len(recs) == k - 1 and all(r.action == "redeem" for r in recs)
        assert len(w.trace) == n0 + k - 1
        assert w.ledger("p0").holdings.count(issuer=path[-1]) >= 1
        if k > 1:
            assert w.ledger("p0").holdings.count(issuer="p1") == 0
        w.audit()
        runs += 1

        w, path = _chain(rng, k)
        cut = rng.randrange(k)  # p_cut gives its p_{cut+1}-coin back
        w.pay(path[cut], path[cut + 1], [[path[cut + 1], 0, 1]])
        w.drain()
        before, n0, h = _snapshot(w), len(w.trace), w.world_hash()
        with pytest.raises(ChainBroken) as err:
            w.chain_redeem(path)
        assert err.value.link == cut
        assert _snapshot(w) == before and len(w.trace) == n0 and w.world_hash() == h
        broken += 1
    record_property("detail", f"{runs} chains, {broken} broken chains")


# -- 6 ------------------------------------------------------------------------------


@pytest.mark.criterion(6, "peg round trip: mutual credit then redemptions both ways")
def test_peg_round_trip(record_property):
    w = World(["alice", "bob"])
    w.instrument("alice", "bob", "SymmetricMutualCredit", {"k": 100})
    w.drain()
    assert w.ledger("alice").holdings.count_exact("bob", 0) == 100
    # each redemption cancels one cross-holding on each side, so 100 in all,
    # alternating direction
    for i in range(100):
        holder, issuer = ("alice", "bob") if i % 2 == 0 else ("bob", "alice")
        w.redeem(holder, issuer, 0, [holder, 0])
        w.drain()
    w.audit()
    redeems = [r for r in w.trace if r.action == "redeem"]
    record_property("detail", f"{len(redeems)} redemptions")
    assert len(redeems) == 100
    assert {r.params["p"] for r in redeems} == {"alice", "bob"}
    for a, b in (("alice", "bob"), ("bob", "alice")):
        h = w.ledger(a).holdings
        assert h.count(issuer=b) == 0
        assert h.count_exact(a, 0) == 100 == len(h)
    assert circulation(w.view()).total == 0


# -- 7 ------------------------------------------------------------------------------


@pytest.mark.criterion(7, "escrow race exclusivity and credit-line identities")
def test_escrow_races(record_property):
    outcomes = {"released": 0, "cancelled": 0}
    draws = 0
    for seed in range(500):
        violations = []

        def watch(world, rec):
            for case in world.escrow.cases.values():
                if hasattr(case, "limit") and not 0 <= case.drawn <= case.limit:
                    violations.append((rec.seq, case.drawn))

        r = run_scenario(parse_scenario(escrow_race_scenario(seed)), seed=seed, observers=[watch])
        assert r.conservation_ok and r.correct, seed
        assert not violations, (seed, violations)
        t = r.trace
        for cid, case in r.world.escrow.cases.items():
            if case.kind != "TimedRelease":
                continue
            mine = [x for x in t if x.params.get("case") == cid]
            released = [x for x in mine if x.action == "escrow_release" and x.params["reason"] == "timer"]
            cancelled = [x for x in mine if x.action == "escrow_cancel"]
            returned = [x for x in mine if x.action == "escrow_release" and x.params["reason"] == "cancelled"]
            assert len(released) + len(cancelled) == 1, (seed, cid)
            assert len(returned) == len(cancelled), (seed, cid)
            assert case.status in outcomes
            outcomes[case.status] += 1

        line = r.world.escrow.cases["line"]
        for i, x in enumerate(t):
            if x.action != "credit_draw":
                continue
            d = next(dr for dr in line.draws if dr.amount == x.params["k"] and
                     list(dr.interest_dates) == x.result["interest_dates"])
            assert Fraction(d.interest_each) == line.rate * d.amount
            assert d.interest_dates == tuple(s for s in line.schedule if s > d.day)
            fwd = t[i + 1]
            assert fwd.action == "escrow_release" and fwd.params["reason"] == "draw forwarded"
            assert sum(n for *_, n in fwd.params["lots"]) == d.amount + d.interest_total
            assert x.result["minted"] == d.amount + d.interest_total
            draws += 1
    record_property("detail", f"{outcomes['released']} released, {outcomes['cancelled']} cancelled, {draws} draws")
    assert outcomes["released"] and outcomes["cancelled"]


# -- 8 ------------------------------------------------------------------------------


def _random_view(rng):
    names = [f"a{i}" for i in range(rng.randint(2, 6))]
    leds = {}
    for a in names:
        bs = [Bond(rng.choice(names), rng.choice([0, 10, 90, 91, 180, 360, 361, 900]), s)
              for s in range(rng.randint(0, 30))]
        leds[a] = AgentLedger(a, local_date=rng.randint(0, 400)).with_holdings(BondBag(bs))
    return BalanceView.of(leds), names


@pytest.mark.criterion(8, "ratio nesting and nu monotone over 1,000 random worlds")
def test_ratio_nesting(record_property):
    rng = random.Random(8)
    defined = 0
    for _ in range(1000):
        view, names = _random_view(rng)
        cfg = LiquidityConfig(rng.randint(1, 100), rng.randint(101, 500))
        for a in names:
            r = ratios(view, a, cfg)
            assert r.cash_assets <= r.quick_assets <= r.current_assets
            if r.defined:
                defined += 1
                assert r.cash <= r.quick <= r.current
            ts = sorted(rng.randint(0, 1000) for _ in range(4))
            for q in names:
                counts = [nu(view, a, t, q) for t in ts]
                assert counts == sorted(counts)
    record_property("detail", f"{defined} defined reports")


# -- 9 ------------------------------------------------------------------------------


@pytest.mark.criterion(9, "correct-run verdicts and interleaving smoke test")
def test_correct_runs_and_interleaving(record_property):
    for name in shipped_names():
        r = run_scenario(shipped(name), seed=42)
        assert r.verdict is not None and r.verdict.correct, name

    village = shipped("village-market")
    p = run_scenario(village.restricted({"alice", "bob"}), record_run=True).world.run
    q = run_scenario(village.restricted({"eve", "frank"}), record_run=True).world.run
    merged = interleave(p, q, round_robin(len(p.taken), len(q.taken)))
    verdict = check_interleaving(p, q, merged)
    record_property("detail", f"{len(shipped_names())} scenarios; interleaved {len(merged.taken)} steps")
    assert verdict.correct
    assert len(p.taken) > 0 and len(q.taken) > 0


# -- 10 ------------------------------------------------------------------------------


@pytest.mark.criterion(10, "run --seed 42 is byte-identical across invocations")
def test_cli_determinism(record_property):
    script = str(SCENARIOS.joinpath("village-market.json"))
    cmd = [sys.executable, "-m", "grassroots_bonds", "run", script, "--seed", "42"]
    outs = [subprocess.run(cmd, capture_output=True, check=True).stdout for _ in range(2)]
    record_property("detail", f"{len(outs[0])} bytes")
    assert outs[0] and outs[0] == outs[1]
