"""Two-phase bilateral trade: propose with locked bonds, then accept or decline.

The proposer's offered bonds leave its holdings at proposal time and travel
with the proposal.  Each proposal carries a one-shot reply token; the
recipient binds it exactly once, and the proposer settles it exactly once.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .bonds import AgentId, AgentLedger, Bond, BondBag, Lot, as_bag
from .errors import InsufficientBonds, OneShotViolation, TransactionRejected
from .volition import TransactionClass, lot_key, pay_class, redeem_class, swap_class


class TradeClass(str, Enum):
    PAYMENT = "payment"
    REDEMPTION = "redemption"
    NORMAL = "normal"


@dataclass(frozen=True)
class SwapSpec:
    give: tuple[Lot, ...] = ()
    want: tuple[Lot, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "give", tuple(Lot.parse(l) for l in self.give))
        object.__setattr__(self, "want", tuple(Lot.parse(l) for l in self.want))


@dataclass(frozen=True)
class Accept:
    their_bonds: BondBag


@dataclass(frozen=True)
class Decline:
    returned: BondBag


@dataclass(frozen=True)
class DeclineWithMenu:
    returned: BondBag
    menu: tuple[Bond, ...]


TradeResponse = Accept | Decline | DeclineWithMenu


class ReplyToken:
    """Single-assignment reply slot: bound once by the recipient, consumed once."""

    __slots__ = ("_response", "_consumed")

    def __init__(self) -> None:
        self._response = None
        self._consumed = False

    @property
    def bound(self) -> bool:
        return self._response is not None

    @property
    def response(self):
        return self._response

    def bind(self, response) -> None:
        if self._response is not None:
            raise OneShotViolation("reply already bound")
        self._response = response

    def consume(self):
        if self._response is None:
            raise OneShotViolation("no reply bound yet")
        if self._consumed:
            raise OneShotViolation("reply already settled")
        self._consumed = True
        return self._response


_ids = itertools.count()


@dataclass(frozen=True)
class TradeProposal:
    proposal_id: str
    proposer: AgentId
    recipient: AgentId
    want: tuple[Lot, ...]
    offered: BondBag
    reply: ReplyToken = field(default_factory=ReplyToken, compare=False, repr=False)

    def to_json(self) -> dict:
        return {
            "proposal": self.proposal_id,
            "from": self.proposer,
            "to": self.recipient,
            "want": [l.as_list() for l in self.want],
            "offered": [list(r) for r in self.offered.canonical_runs()],
        }


def propose_trade(
    proposer: AgentLedger, to: AgentId, spec: SwapSpec, proposal_id: str | None = None
) -> tuple[AgentLedger, TradeProposal]:
    if to == proposer.owner:
        raise TransactionRejected("cannot trade with oneself")
    if not spec.give and not spec.want:
        raise TransactionRejected("empty trade")
    selected, remaining = proposer.holdings.select(spec.give)
    pid = proposal_id if proposal_id is not None else f"t{next(_ids)}"
    proposal = TradeProposal(pid, proposer.owner, to, spec.want, selected)
    return proposer.with_holdings(remaining), proposal


def classify_trade(recipient: AgentLedger, proposal: TradeProposal) -> TradeClass:
    if not proposal.want:
        return TradeClass.PAYMENT
    if len(proposal.offered) == 1:
        (coin,) = proposal.offered
        if coin.issuer == recipient.owner and recipient.is_coin(coin):
            return TradeClass.REDEMPTION
    return TradeClass.NORMAL


def build_menu(ledger: AgentLedger) -> list[Bond]:
    """One bond per foreign issuer held: the earliest maturing, first held."""
    best: dict[AgentId, Bond] = {}
    for (issuer, maturity), _ in ledger.holdings.group_counts():
        if issuer == ledger.owner:
            continue
        if issuer not in best or maturity < best[issuer].maturity:
            best[issuer] = ledger.holdings.first(issuer, maturity)
    return [best[i] for i in sorted(best)]


def _absorb(recipient: AgentLedger, bonds: BondBag) -> AgentLedger:
    return recipient.with_holdings(recipient.holdings.plus(bonds))


def _check_addressed(recipient: AgentLedger, proposal: TradeProposal) -> None:
    if proposal.recipient != recipient.owner:
        raise TransactionRejected(
            f"proposal {proposal.proposal_id} is addressed to {proposal.recipient}, not {recipient.owner}"
        )


def respond_auto(
    recipient: AgentLedger, proposal: TradeProposal
) -> tuple[AgentLedger, TradeResponse | None]:
    """Answer payments and redemptions without consulting the recipient.

    Returns ``(ledger, None)`` for a normal trade, which awaits the
    recipient's explicit consent.
    """
    _check_addressed(recipient, proposal)
    kind = classify_trade(recipient, proposal)
    if kind is TradeClass.PAYMENT:
        response = Accept(BondBag())
        proposal.reply.bind(response)
        return _absorb(recipient, proposal.offered), response
    if kind is TradeClass.REDEMPTION:
        try:
            selected, remaining = recipient.holdings.select(proposal.want)
        except InsufficientBonds:
            response = DeclineWithMenu(proposal.offered, tuple(build_menu(recipient)))
            proposal.reply.bind(response)
            return recipient, response
        response = Accept(selected)
        proposal.reply.bind(response)
        return recipient.with_holdings(remaining.plus(proposal.offered)), response
    return recipient, None


def accept_trade(
    recipient: AgentLedger, proposal: TradeProposal
) -> tuple[AgentLedger, TradeResponse]:
    _check_addressed(recipient, proposal)
    try:
        selected, remaining = recipient.holdings.select(proposal.want)
    except InsufficientBonds:
        response = Decline(proposal.offered)
        proposal.reply.bind(response)
        return recipient, response
    response = Accept(selected)
    proposal.reply.bind(response)
    return recipient.with_holdings(remaining.plus(proposal.offered)), response


def reject_trade(recipient: AgentLedger, proposal: TradeProposal) -> tuple[AgentLedger, TradeResponse]:
    _check_addressed(recipient, proposal)
    response = Decline(proposal.offered)
    proposal.reply.bind(response)
    return recipient, response


def _satisfies(bonds: BondBag, want: Sequence[Lot]) -> bool:
    return lot_key(bonds) == lot_key(want)


def settle_response(
    proposer: AgentLedger, proposal: TradeProposal, response: TradeResponse
) -> AgentLedger:
    if proposal.proposer != proposer.owner:
        raise TransactionRejected(f"proposal {proposal.proposal_id} was not made by {proposer.owner}")
    if proposal.reply.response is not response:
        raise TransactionRejected(f"response does not belong to proposal {proposal.proposal_id}")
    proposal.reply.consume()
    if isinstance(response, Accept):
        if not _satisfies(response.their_bonds, proposal.want):
            raise TransactionRejected("accepted bonds do not match the wanted lots")
        return _absorb(proposer, response.their_bonds)
    if as_bag(response.returned) != proposal.offered:
        raise TransactionRejected("declined trade did not return the offered bonds")
    return _absorb(proposer, response.returned)


def trade_tx_class(proposal: TradeProposal, kind: TradeClass) -> TransactionClass:
    """The bond transaction a trade realises, for volition bookkeeping."""
    p, q = proposal.proposer, proposal.recipient
    if kind is TradeClass.REDEMPTION:
        (coin,) = proposal.offered
        (lot,) = proposal.want if len(proposal.want) == 1 else (None,)
        if lot is not None and lot.count == 1:
            return redeem_class(p, q, coin.maturity, lot.issuer, lot.maturity)
    if kind is TradeClass.PAYMENT and all(i == q for i in proposal.offered.issuers()):
        return pay_class(p, q, proposal.offered)
    return swap_class(p, q, proposal.offered, proposal.want)
