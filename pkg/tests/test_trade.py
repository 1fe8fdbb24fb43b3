import pytest

from grassroots_bonds.bonds import AgentLedger, Bond, BondBag, Lot, apply_swap
from grassroots_bonds.errors import OneShotViolation, TransactionRejected
from grassroots_bonds.trade import (
    Accept,
    Decline,
    DeclineWithMenu,
    SwapSpec,
    TradeClass,
    accept_trade,
    build_menu,
    classify_trade,
    propose_trade,
    reject_trade,
    respond_auto,
    settle_response,
)

from conftest import holds, ledger


def _pair():
    a, b = ledger("a", (10, 0)), ledger("b", (10, 0))
    return apply_swap(a, b, a.holdings.select([Lot("a", 0, 5)])[0], b.holdings.select([Lot("b", 0, 5)])[0])


def test_proposal_locks_offered_bonds():
    a, _ = _pair()
    a2, prop = propose_trade(a, "b", SwapSpec([Lot("a", 0, 3)], [Lot("b", 0, 3)]), "t1")
    assert holds(a2, "a", 0) == 2
    assert len(prop.offered) == 3


def test_normal_trade_accept_and_settle():
    a, b = _pair()
    a, prop = propose_trade(a, "b", SwapSpec([Lot("a", 0, 3)], [Lot("b", 0, 2)]), "t1")
    assert classify_trade(b, prop) is TradeClass.NORMAL
    b2, resp = respond_auto(b, prop)
    assert resp is None and b2 is b
    b3, resp = accept_trade(b, prop)
    assert isinstance(resp, Accept)
    a3 = settle_response(a, prop, resp)
    assert holds(a3, "b", 0) == 7 and holds(b3, "a", 0) == 8


def test_reply_is_one_shot():
    a, b = _pair()
    a, prop = propose_trade(a, "b", SwapSpec([Lot("a", 0, 1)], []), "t1")
    b, resp = accept_trade(b, prop)
    settle_response(a, prop, resp)
    with pytest.raises(OneShotViolation):
        settle_response(a, prop, resp)
    with pytest.raises(OneShotViolation):
        reject_trade(b, prop)


def test_reject_returns_locked_bonds():
    a, b = _pair()
    a1, prop = propose_trade(a, "b", SwapSpec([Lot("a", 0, 4)], [Lot("b", 0, 1)]), "t1")
    _, resp = reject_trade(b, prop)
    assert isinstance(resp, Decline)
    assert settle_response(a1, prop, resp).holdings == a.holdings


def test_accept_without_wanted_bonds_declines():
    a, b = _pair()
    a1, prop = propose_trade(a, "b", SwapSpec([Lot("a", 0, 1)], [Lot("b", 0, 50)]), "t1")
    b1, resp = accept_trade(b, prop)
    assert isinstance(resp, Decline) and b1 is b


def test_payment_is_auto_accepted():
    a, b = _pair()
    a, prop = propose_trade(a, "b", SwapSpec([Lot("b", 0, 2)], []), "t1")
    assert classify_trade(b, prop) is TradeClass.PAYMENT
    b2, resp = respond_auto(b, prop)
    assert isinstance(resp, Accept) and holds(b2, "b", 0) == 7


def test_redemption_auto_and_menu():
    a, b = _pair()
    b = b.with_holdings(b.holdings.plus([Bond("c", 9, 0), Bond("c", 3, 4), Bond("d", 20, 1)]))
    a1, prop = propose_trade(a, "b", SwapSpec([Lot("b", 0, 1)], [Lot("c", 9, 1)]), "t1")
    assert classify_trade(b, prop) is TradeClass.REDEMPTION
    b2, resp = respond_auto(b, prop)
    assert isinstance(resp, Accept) and Bond("c", 9, 0) in settle_response(a1, prop, resp).holdings

    a1, prop = propose_trade(a, "b", SwapSpec([Lot("b", 0, 1)], [Lot("z", 0, 1)]), "t2")
    b3, resp = respond_auto(b, prop)
    assert isinstance(resp, DeclineWithMenu) and b3 is b
    # one per foreign issuer, the earliest maturing
    assert list(resp.menu) == [Bond("a", 0, 0), Bond("c", 3, 4), Bond("d", 20, 1)]


def test_menu_skips_own_bonds():
    led = ledger("m", (3, 0)).with_holdings(ledger("m", (3, 0)).holdings.plus([Bond("x", 5, 2)]))
    assert build_menu(led) == [Bond("x", 5, 2)]


def test_immature_coin_is_not_a_redemption():
    a = AgentLedger("a")
    b = ledger("b", (1, 10), (1, 0))
    b, a = apply_swap(b, a, BondBag([Bond("b", 10, 0)]), BondBag())
    _, prop = propose_trade(a, "b", SwapSpec([Lot("b", 10, 1)], [Lot("b", 0, 1)]), "t1")
    assert classify_trade(b, prop) is TradeClass.NORMAL


def test_propose_guards():
    a, _ = _pair()
    with pytest.raises(TransactionRejected):
        propose_trade(a, "a", SwapSpec([Lot("a", 0, 1)], []))
    with pytest.raises(TransactionRejected):
        propose_trade(a, "b", SwapSpec([], []))
    with pytest.raises(TransactionRejected):
        propose_trade(a, "b", SwapSpec([Lot("a", 0, 99)], []))
