import pytest

from grassroots_bonds.bonds import AgentLedger, Bond, BondBag, Lot
from grassroots_bonds.errors import InterleavingError, MalformedTrace, NoChange, NotEnabled
from grassroots_bonds.volition import (
    AdvanceDate,
    AgentState,
    GuardedTransaction,
    Kind,
    Mint,
    Pay,
    Run,
    Swap,
    VolitionSet,
    advance_class,
    change_volition,
    check_correct_run,
    check_interleaving,
    class_enabled,
    execute_volitional,
    interleave,
    is_enabled,
    mint_class,
    pay_class,
    redeem_class,
    round_robin,
    swap_class,
    verdict_from_log,
)

from conftest import ledger


def world(**ledgers):
    return {a: AgentState(VolitionSet(a), led) for a, led in ledgers.items()}


def willing(w, agent, *classes):
    out = dict(w)
    out[agent] = AgentState(change_volition(w[agent].volition, add=classes), w[agent].ledger)
    return out


def test_swap_class_is_symmetric_and_lot_level():
    a = swap_class("a", "b", [Lot("a", 0, 2)], [Lot("b", 5, 1)])
    b = swap_class("b", "a", [Lot("b", 5, 1)], [Lot("a", 0, 1), Lot("a", 0, 1)])
    assert a == b
    assert a.guards == {"a", "b"}


def test_guards_per_kind():
    assert mint_class("a", 3, 0).guards == {"a"}
    assert advance_class("a").guards == frozenset()
    assert pay_class("a", "b", [Lot("b", 0, 1)]).guards == {"a"}
    assert redeem_class("a", "b", 0, "c", 5).guards == {"a"}


def test_class_of_concrete_swap_matches_lot_class():
    x = BondBag.minted("a", 0, 7, 2)
    y = BondBag.minted("b", 5, 0, 1)
    assert Swap("a", "b", x, y).tx_class() == swap_class("a", "b", [Lot("a", 0, 2)], [Lot("b", 5, 1)])


def test_change_volition_must_change():
    v = VolitionSet("a")
    c = mint_class("a", 1, 0)
    v2 = change_volition(v, add=[c])
    assert c in v2
    with pytest.raises(NoChange):
        change_volition(v2, add=[c])


def test_unwilled_transaction_is_not_enabled():
    w = world(a=AgentLedger("a"))
    gt = GuardedTransaction.of(Mint("a", 2, 0))
    assert not is_enabled(gt, w)
    with pytest.raises(NotEnabled):
        execute_volitional(gt, w)


def test_execution_discharges_the_class_for_everyone():
    a, b = ledger("a", (2, 0)), ledger("b", (2, 0))
    w = world(a=a, b=b)
    cls = swap_class("a", "b", [Lot("a", 0, 2)], [Lot("b", 0, 2)])
    w = willing(willing(w, "a", cls), "b", cls)
    gt = GuardedTransaction.of(Swap("a", "b", a.holdings, b.holdings))
    out = execute_volitional(gt, w)
    assert cls not in out["a"].volition and cls not in out["b"].volition
    assert out["a"].ledger.holdings.count_exact("b", 0) == 2


def test_swap_needs_both_guards():
    a, b = ledger("a", (1, 0)), ledger("b", (1, 0))
    cls = swap_class("a", "b", [Lot("a", 0, 1)], [Lot("b", 0, 1)])
    w = willing(world(a=a, b=b), "a", cls)
    assert not class_enabled(cls, w)
    assert class_enabled(cls, willing(w, "b", cls))


def test_advance_date_is_unguarded():
    gt = GuardedTransaction.of(AdvanceDate("a", 4))
    assert gt.guards == frozenset()
    assert is_enabled(gt, world(a=AgentLedger("a")))


def test_pay_class_enabled_follows_holdings():
    a = AgentLedger("a").with_holdings(BondBag.minted("b", 0, 0, 1))
    cls = pay_class("a", "b", [Lot("b", 0, 2)])
    w = willing(world(a=a, b=AgentLedger("b")), "a", cls)
    assert not class_enabled(cls, w)
    cls1 = pay_class("a", "b", [Lot("b", 0, 1)])
    assert class_enabled(cls1, willing(w, "a", cls1))


# -- correct runs ----------------------------------------------------------------


C, D = mint_class("a", 1, 0), mint_class("b", 1, 0)


def test_verdict_flags_class_enabled_to_the_end():
    v = verdict_from_log([frozenset(), frozenset({C}), frozenset({C})], [None, None])
    assert not v and v.violation == C and v.suffix_index == 1


def test_verdict_accepts_taken_class():
    assert verdict_from_log([frozenset({C}), frozenset()], [C])
    # taken inside the suffix, then re-enabled only at the very end: still a violation
    v = verdict_from_log([frozenset({C}), frozenset({C}), frozenset({C})], [C, None])
    assert not v and v.suffix_index == 1


def test_verdict_rejects_misaligned_log():
    with pytest.raises(MalformedTrace):
        verdict_from_log([frozenset(), frozenset()], [])


def _mint_run(agent, n):
    state = {agent: AgentState(VolitionSet(agent), AgentLedger(agent))}
    run = Run([state], [])
    led = state[agent].ledger
    for _ in range(n):
        gt = GuardedTransaction.of(Mint(agent, 1, 0))
        cls = gt.txn.tx_class()
        willed = {agent: AgentState(VolitionSet(agent, frozenset({cls})), led)}
        run.snapshots.append(willed)
        run.taken.append(None)
        after = execute_volitional(gt, willed)
        led = after[agent].ledger
        run.snapshots.append(after)
        run.taken.append(cls)
    return run


def test_check_correct_run_on_minting_run():
    run = _mint_run("a", 3)
    assert check_correct_run(run)
    # drop the last step: the willed mint stays enabled to the end
    cut = Run(run.snapshots[:-1], run.taken[:-1])
    v = check_correct_run(cut)
    assert not v and v.violation.kind is Kind.MINT


def test_interleaving_of_disjoint_runs():
    p, q = _mint_run("a", 2), _mint_run("b", 3)
    merged = interleave(p, q, round_robin(len(p.taken), len(q.taken)))
    assert len(merged.taken) == len(p.taken) + len(q.taken)
    assert check_interleaving(p, q, merged)


def test_interleaving_rejects_foreign_step():
    p, q = _mint_run("a", 1), _mint_run("b", 1)
    merged = interleave(p, q, ["p", "p", "q", "q"])
    merged.snapshots[2] = {**merged.snapshots[2], "a": merged.snapshots[0]["a"]}
    with pytest.raises(InterleavingError):
        check_interleaving(p, q, merged)


def test_interleaving_needs_disjoint_agents():
    p = _mint_run("a", 1)
    with pytest.raises(InterleavingError):
        check_interleaving(p, p, p)


def test_pay_requires_payee_coin_class():
    tx = Pay("a", "b", BondBag([Bond("b", 0, 0)]))
    assert tx.tx_class() == pay_class("a", "b", [Lot("b", 0, 1)])
