from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from grassroots_bonds.bonds import AgentLedger, Bond, BondBag
from grassroots_bonds.liquidity import (
    BalanceView,
    LiquidityConfig,
    circulation,
    foreign_assets,
    liabilities,
    nu,
    ratios,
)
from grassroots_bonds.sim import World


def view(holdings, dates=None):
    leds = {a: AgentLedger(a, local_date=(dates or {}).get(a, 0)).with_holdings(BondBag(bs))
            for a, bs in holdings.items()}
    return BalanceView.of(leds)


def test_nu_counts_by_maturity_and_excludes_self():
    v = view({"a": [Bond("a", 0, 0)], "b": [Bond("a", 0, 1), Bond("a", 50, 2), Bond("a", 400, 3)]})
    assert nu(v, "a", 0, "b") == 1
    assert nu(v, "a", 50, "b") == 2
    assert nu(v, "a", 400, "a") == 0
    assert nu(v, "a", 0, "nobody") == 0


def test_ratios_share_a_denominator():
    v = view({
        "a": [Bond("b", 0, 0), Bond("b", 60, 1), Bond("c", 200, 0), Bond("c", 900, 1)],
        "b": [Bond("a", 0, 0), Bond("a", 100, 1)],
        "c": [Bond("a", 300, 2), Bond("a", 361, 3)],
    })
    r = ratios(v, "a")
    assert (r.cash_assets, r.quick_assets, r.current_assets, r.current_liabilities) == (1, 2, 3, 3)
    assert r.exact() == {"cash": "1/3", "quick": "2/3", "current": "3/3"}
    assert r.cash == Fraction(1, 3) and r.current == 1
    assert r.rounded() == {"cash": "0.33", "quick": "0.67", "current": "1.00"}


def test_horizon_follows_local_date():
    v = view({"a": [], "b": [Bond("a", 400, 0)]}, dates={"a": 50})
    assert ratios(v, "a").current_liabilities == 1
    assert ratios(v, "a", LiquidityConfig(10, 20)).current_liabilities == 0


def test_undefined_ratio_renders_as_dash():
    r = ratios(view({"a": [Bond("b", 0, 0)], "b": []}), "a")
    assert not r.defined and r.cash is None
    assert r.exact()["cash"] == "—" and r.rounded()["current"] == "—"


def test_zero_numerator_is_kept():
    r = ratios(view({"a": [], "b": [Bond("a", 0, i) for i in range(35)]}), "a")
    assert r.exact()["cash"] == "0/35"


def test_config_validation():
    with pytest.raises(ValueError):
        LiquidityConfig(360, 90)


def test_locked_bonds_stay_with_proposer_and_custody_is_liability():
    w = World(["p", "q"], escrow_id="e")
    w.mint("q", 4, 0)
    w.propose("q", "p", [["q", 0, 4]], [], auto_accept=True)
    w.drain()
    w.propose("p", "q", [["q", 0, 2]], [["q", 0, 9]])  # 2 locked, not yet answered
    v = w.view()
    assert foreign_assets(v, "p", 0) == 4
    w.mint("p", 3, 0)
    w.deposit_escrow("p", "q", [["p", 0, 3]], 5, "t")
    v = w.view()
    assert liabilities(v, "p", 0) == 3
    assert foreign_assets(v, "q", 0) == 0
    assert circulation(v).per_issuer == {"p": 3, "q": 4}


def test_circulation_ignores_own_bonds():
    v = view({"a": [Bond("a", 0, 0), Bond("b", 0, 0)], "b": [Bond("a", 0, 1), Bond("a", 9, 2)]})
    assert circulation(v).per_issuer == {"a": 2, "b": 1}
    assert circulation(v).total == 3


# -- properties ---------------------------------------------------------------------

names = "abcd"
world_st = st.dictionaries(
    st.sampled_from(names),
    st.lists(st.tuples(st.sampled_from(names), st.sampled_from([0, 30, 90, 91, 200, 360, 361, 1000])), max_size=15),
    min_size=1,
)


def _build(raw, dates):
    holdings, serial = {}, 0
    for a in names:
        bs = []
        for issuer, m in raw.get(a, []):
            bs.append(Bond(issuer, m, serial))
            serial += 1
        holdings[a] = bs
    return view(holdings, dates)


@given(world_st, st.dictionaries(st.sampled_from(names), st.integers(0, 400)))
def test_ratio_numerators_nest(raw, dates):
    v = _build(raw, dates)
    for a in names:
        r = ratios(v, a)
        assert 0 <= r.cash_assets <= r.quick_assets <= r.current_assets
        if r.defined:
            assert r.cash <= r.quick <= r.current


@given(world_st, st.integers(0, 1200), st.integers(0, 1200))
def test_nu_is_monotone_in_horizon(raw, t1, t2):
    v = _build(raw, {})
    lo, hi = sorted((t1, t2))
    for p in names:
        for q in names:
            assert nu(v, p, lo, q) <= nu(v, p, hi, q)
