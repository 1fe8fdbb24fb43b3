"""Financial instruments as voluntary bond swaps.

Each constructor yields an :class:`InstrumentPlan`: the mints each side
owes and the lots that change hands.  The counterparty's mints are
obligations it performs only after seeing the proposal, just before it
accepts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

from .bonds import AgentId, Lot
from .errors import PlanError
from .oracle import Oracle
from .trade import SwapSpec
from .volition import lot_key

Schedule = tuple[tuple[int, int], ...]  # (count, date) pairs


def _positive(name: str, value) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise PlanError(f"{name} must be a positive integer, got {value!r}")


def _schedule(name: str, entries) -> Schedule:
    sched = tuple((int(k), int(d)) for k, d in entries)
    if not sched:
        raise PlanError(f"{name} is empty")
    for k, _ in sched:
        _positive(f"{name} amount", k)
    dates = [d for _, d in sched]
    if any(b <= a for a, b in zip(dates, dates[1:])):
        raise PlanError(f"{name} dates must be strictly ascending: {dates}")
    return sched


@dataclass(frozen=True)
class SymmetricMutualCredit:
    k: int


@dataclass(frozen=True)
class ZeroCouponLoan:
    k: int
    k_prime: int
    maturity: int


@dataclass(frozen=True)
class BalloonLoan:
    k: int
    interest: Schedule
    maturity: int


@dataclass(frozen=True)
class FixedPaymentLoan:
    k: int
    payments: Schedule


@dataclass(frozen=True)
class SaleOfDebt:
    """Sell ``k`` bonds of ``debtor`` maturing ``maturity`` for ``k_prime`` coins.

    With ``mint_fresh`` the buyer mints the price in its own coins; otherwise
    it pays from holdings with coins of ``price_issuer``.
    """

    debtor: AgentId
    k: int
    maturity: int
    k_prime: int
    mint_fresh: bool = True
    price_issuer: AgentId | None = None
    price_maturity: int = 0


@dataclass(frozen=True)
class ForwardContract:
    k: int
    k_prime: int
    maturity: int


@dataclass(frozen=True)
class InterestRateSwap:
    """``p`` pays the fixed schedule; ``q`` pays ``notional * rate(d_j)``."""

    fixed: Schedule
    notional: int
    reference: str


Instrument = (
    SymmetricMutualCredit
    | ZeroCouponLoan
    | BalloonLoan
    | FixedPaymentLoan
    | SaleOfDebt
    | ForwardContract
    | InterestRateSwap
)


@dataclass(frozen=True)
class InstrumentPlan:
    p: AgentId
    q: AgentId
    mints_p: tuple[tuple[int, int], ...]
    mints_q: tuple[tuple[int, int], ...]
    swap: SwapSpec

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "mints_p": [list(m) for m in self.mints_p],
            "mints_q": [list(m) for m in self.mints_q],
            "give": [l.as_list() for l in self.swap.give],
            "want": [l.as_list() for l in self.swap.want],
        }


def _variable_amounts(spec: InterestRateSwap, oracle: Oracle | None) -> list[int]:
    if oracle is None:
        raise PlanError("interest-rate swap needs an oracle to resolve variable amounts")
    out = []
    for _, d in spec.fixed:
        rate = oracle.rate(spec.reference, d)
        if rate is None:
            raise PlanError(f"no reference rate for {spec.reference!r} on day {d}")
        amount = Fraction(spec.notional) * rate
        if amount.denominator != 1 or amount < 0:
            raise PlanError(f"variable amount {amount} on day {d} is not a non-negative integer")
        out.append(int(amount))
    return out


def plan_instrument(
    spec: Instrument,
    p: AgentId,
    q: AgentId,
    oracle: Oracle | None = None,
    coin_maturity: int = 0,
) -> InstrumentPlan:
    """Plan ``spec`` with ``p`` giving x and ``q`` giving y.

    ``coin_maturity`` is the maturity stamped on freshly minted coins; 0
    makes them coins for everyone from the outset.
    """
    if p == q:
        raise PlanError("an instrument needs two distinct parties")
    c = coin_maturity

    if isinstance(spec, SymmetricMutualCredit):
        _positive("k", spec.k)
        return InstrumentPlan(
            p, q, ((spec.k, c),), ((spec.k, c),),
            SwapSpec([Lot(p, c, spec.k)], [Lot(q, c, spec.k)]),
        )

    if isinstance(spec, ZeroCouponLoan):
        _positive("k", spec.k)
        _positive("k'", spec.k_prime)
        if spec.k_prime >= spec.k:
            raise PlanError(f"zero-coupon loan needs k' < k, got k'={spec.k_prime}, k={spec.k}")
        return InstrumentPlan(
            p, q, ((spec.k_prime, c),), ((spec.k, spec.maturity),),
            SwapSpec([Lot(p, c, spec.k_prime)], [Lot(q, spec.maturity, spec.k)]),
        )

    if isinstance(spec, BalloonLoan):
        _positive("k", spec.k)
        sched = _schedule("interest schedule", spec.interest)
        if spec.maturity < sched[-1][1]:
            raise PlanError("principal must not mature before the last interest date")
        mints_q = sched + ((spec.k, spec.maturity),)
        return InstrumentPlan(
            p, q, ((spec.k, c),), mints_q,
            SwapSpec([Lot(p, c, spec.k)], [Lot(q, d, n) for n, d in mints_q]),
        )

    if isinstance(spec, FixedPaymentLoan):
        _positive("k", spec.k)
        sched = _schedule("payment schedule", spec.payments)
        return InstrumentPlan(
            p, q, ((spec.k, c),), sched,
            SwapSpec([Lot(p, c, spec.k)], [Lot(q, d, n) for n, d in sched]),
        )

    if isinstance(spec, SaleOfDebt):
        _positive("k", spec.k)
        _positive("k'", spec.k_prime)
        if spec.k_prime >= spec.k:
            raise PlanError("sale of debt is at a discount: k' < k")
        if spec.debtor in (p, q):
            raise PlanError("the debtor is not a party to a sale of its debt")
        if spec.mint_fresh:
            price, mints_q = Lot(q, c, spec.k_prime), ((spec.k_prime, c),)
        else:
            if spec.price_issuer is None:
                raise PlanError("paying from holdings needs a price_issuer")
            price, mints_q = Lot(spec.price_issuer, spec.price_maturity, spec.k_prime), ()
        return InstrumentPlan(
            p, q, (), mints_q,
            SwapSpec([Lot(spec.debtor, spec.maturity, spec.k)], [price]),
        )

    if isinstance(spec, ForwardContract):
        _positive("k", spec.k)
        _positive("k'", spec.k_prime)
        d = spec.maturity
        return InstrumentPlan(
            p, q, ((spec.k, d),), ((spec.k_prime, d),),
            SwapSpec([Lot(p, d, spec.k)], [Lot(q, d, spec.k_prime)]),
        )

    if isinstance(spec, InterestRateSwap):
        sched = _schedule("fixed schedule", spec.fixed)
        _positive("notional", spec.notional)
        variable = _variable_amounts(spec, oracle)
        mints_q = tuple((n, d) for n, (_, d) in zip(variable, sched) if n > 0)
        return InstrumentPlan(
            p, q, sched, mints_q,
            SwapSpec([Lot(p, d, n) for n, d in sched], [Lot(q, d, n) for n, d in mints_q]),
        )

    raise PlanError(f"unknown instrument {spec!r}")


@dataclass(frozen=True)
class Settlement:
    date: int
    payer: AgentId
    payee: AgentId
    plan: InstrumentPlan


def plan_rate_settlements(
    spec: InterestRateSwap, p: AgentId, q: AgentId, oracle: Oracle
) -> list[Settlement]:
    """Periodic-settlement variant: one net-difference transfer per date."""
    sched = _schedule("fixed schedule", spec.fixed)
    variable = _variable_amounts(spec, oracle)
    out = []
    for (fixed, d), floating in zip(sched, variable):
        net = fixed - floating
        if net == 0:
            continue
        payer, payee = (p, q) if net > 0 else (q, p)
        n = abs(net)
        plan = InstrumentPlan(payer, payee, ((n, d),), (), SwapSpec([Lot(payer, d, n)], []))
        out.append(Settlement(d, payer, payee, plan))
    return out


class TwoLegKind(str, Enum):
    CURRENCY_SWAP = "currency_swap"
    REPO = "repo"


@dataclass(frozen=True)
class TwoLegPlan:
    kind: TwoLegKind
    legs: tuple[InstrumentPlan, InstrumentPlan]


def two_leg_sequence(kind: TwoLegKind | str, legs: Sequence[InstrumentPlan]) -> TwoLegPlan:
    kind = TwoLegKind(kind)
    if len(legs) != 2:
        raise PlanError("a two-leg sequence has exactly two legs")
    first, second = legs
    if (first.p, first.q) != (second.p, second.q):
        raise PlanError("both legs must be proposed by the same party to the same counterparty")
    g1, w1 = lot_key(first.swap.give), lot_key(first.swap.want)
    g2, w2 = lot_key(second.swap.give), lot_key(second.swap.want)
    if kind is TwoLegKind.CURRENCY_SWAP:
        if (g2, w2) != (w1, g1):
            raise PlanError("currency swap second leg must reverse the first")
    else:
        if w2 != g1:
            raise PlanError("repo second leg must repurchase the bonds sold in the first")
        if {i for i, _, _ in g2} != {i for i, _, _ in w1}:
            raise PlanError("repo second leg must pay in the currency received in the first")
    return TwoLegPlan(kind, (first, second))


def repo(
    p: AgentId, q: AgentId, debtor: AgentId, maturity: int, k: int, k1: int, k2: int,
    coin_maturity: int = 0,
) -> TwoLegPlan:
    """Sell ``k`` debtor bonds for ``k1`` q-coins now, buy them back for ``k2`` later."""
    c = coin_maturity
    sale = InstrumentPlan(p, q, (), ((k1, c),), SwapSpec([Lot(debtor, maturity, k)], [Lot(q, c, k1)]))
    buyback = InstrumentPlan(p, q, (), (), SwapSpec([Lot(q, c, k2)], [Lot(debtor, maturity, k)]))
    return two_leg_sequence(TwoLegKind.REPO, [sale, buyback])


def currency_swap(p: AgentId, q: AgentId, k: int, coin_maturity: int = 0) -> TwoLegPlan:
    first = plan_instrument(SymmetricMutualCredit(k), p, q, coin_maturity=coin_maturity)
    back = InstrumentPlan(p, q, (), (), SwapSpec(first.swap.want, first.swap.give))
    return two_leg_sequence(TwoLegKind.CURRENCY_SWAP, [first, back])


@dataclass(frozen=True)
class MortgagePlan:
    """A fixed-payment loan whose borrower posts collateral with an escrow agent."""

    loan: InstrumentPlan
    collateral: tuple[Lot, ...]
    due: int = field(default=0)


def mortgage(
    loan: FixedPaymentLoan, lender: AgentId, borrower: AgentId, collateral: Sequence[Lot],
    coin_maturity: int = 0,
) -> MortgagePlan:
    plan = plan_instrument(loan, lender, borrower, coin_maturity=coin_maturity)
    lots = tuple(Lot.parse(l) for l in collateral)
    if not lots:
        raise PlanError("a mortgage needs collateral")
    if any(l.issuer == borrower for l in lots):
        raise PlanError("collateral must be bonds not issued by the borrower")
    return MortgagePlan(plan, lots, max(d for _, d in plan.mints_q))


INSTRUMENT_KINDS = {
    "SymmetricMutualCredit": SymmetricMutualCredit,
    "ZeroCouponLoan": ZeroCouponLoan,
    "BalloonLoan": BalloonLoan,
    "FixedPaymentLoan": FixedPaymentLoan,
    "SaleOfDebt": SaleOfDebt,
    "ForwardContract": ForwardContract,
    "InterestRateSwap": InterestRateSwap,
}


def instrument_from_json(kind: str, params: dict) -> Instrument:
    try:
        cls = INSTRUMENT_KINDS[kind]
    except KeyError:
        raise PlanError(f"unknown instrument kind {kind!r}") from None
    params = dict(params)
    for key in ("interest", "payments", "fixed"):
        if key in params:
            params[key] = tuple(tuple(e) for e in params[key])
    try:
        return cls(**params)
    except TypeError as exc:
        raise PlanError(f"bad parameters for {kind}: {exc}") from None
