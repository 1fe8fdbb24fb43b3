"""Escrow agent: cases holding bonds until dates, cancellations or oracle events.

Deposits, releases and returns are all plain swaps with the escrow agent.
Every release is reported as a :class:`Transfer`; applying transfers to
ledgers is the caller's business, so the agent never touches a ledger it
was not handed.  All deadlines are judged against the escrow agent's own
local date.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import ClassVar, Iterable

from .bonds import EMPTY, AgentId, AgentLedger, BondBag, Lot, mint
from .errors import EscrowError, TransactionRejected
from .oracle import Oracle


class CaseKind(str, Enum):
    TIMED_RELEASE = "TimedRelease"
    COLLATERAL = "Collateral"
    GUARANTEE = "Guarantee"
    OPTION = "Option"
    INSURANCE = "Insurance"
    CDS = "CDS"
    LETTER_OF_CREDIT = "LetterOfCredit"
    CREDIT_LINE = "CreditLine"


@dataclass(frozen=True)
class Transfer:
    """``e`` hands ``bonds`` to ``to``: the swap ``{(e, bonds), (to, ∅)}``."""

    case_id: str
    to: AgentId
    bonds: BondBag
    reason: str

    def to_json(self) -> dict:
        return {
            "case": self.case_id,
            "to": self.to,
            "bonds": [list(r) for r in self.bonds.canonical_runs()],
            "reason": self.reason,
        }


@dataclass(frozen=True)
class Obligation:
    """A follow-up swap a party owes: ``debtor`` mints ``k`` bonds at ``maturity`` for ``creditor``."""

    case_id: str
    debtor: AgentId
    creditor: AgentId
    k: int
    maturity: int


@dataclass(frozen=True)
class Draw:
    day: int
    amount: int
    interest_dates: tuple[int, ...]
    interest_each: int

    @property
    def interest_total(self) -> int:
        return self.interest_each * len(self.interest_dates)


@dataclass
class EscrowCase:
    case_id: str
    depositor: AgentId
    beneficiary: AgentId
    held: dict[str, BondBag] = field(default_factory=dict)
    status: str = "open"

    kind: ClassVar[CaseKind]
    terminal: ClassVar[frozenset[str]] = frozenset()

    # -- shared plumbing --------------------------------------------------

    @property
    def done(self) -> bool:
        return self.status in self.terminal

    def holdings(self) -> BondBag:
        total = EMPTY
        for bag in self.held.values():
            total = total.plus(bag)
        return total

    def _release(self, role: str, to: AgentId, reason: str) -> list[Transfer]:
        bag = self.held.pop(role, EMPTY)
        return [Transfer(self.case_id, to, bag, reason)] if bag else []

    def _require_live(self) -> None:
        if self.done:
            raise EscrowError(f"case {self.case_id} is already {self.status}")

    # -- per-kind hooks ---------------------------------------------------

    def roles(self) -> dict[str, AgentId]:
        """Deposit role -> the agent allowed to make it."""
        raise NotImplementedError

    def check_deposit(self, role: str, bonds: BondBag, d_e: int) -> None:
        pass

    def after_deposit(self, role: str, d_e: int) -> list[Transfer]:
        return []

    def tick(self, d_e: int, oracle: Oracle | None) -> list[Transfer]:
        return []

    def params(self) -> dict:
        return {}

    def to_json(self) -> dict:
        return {
            "case": self.case_id,
            "kind": self.kind.value,
            "status": self.status,
            "held": {r: [list(x) for x in b.canonical_runs()] for r, b in sorted(self.held.items())},
            **self.params(),
        }


def _only_issuer(bonds: BondBag, issuer: AgentId, what: str) -> None:
    if any(i != issuer for i in bonds.issuers()):
        raise EscrowError(f"{what} must be {issuer}-bonds")


@dataclass
class TimedRelease(EscrowCase):
    """Release to the beneficiary once ``d_e >= release_at`` unless cancelled first."""

    release_at: int = 0
    kind: ClassVar[CaseKind] = CaseKind.TIMED_RELEASE
    terminal: ClassVar[frozenset[str]] = frozenset({"released", "cancelled"})

    def roles(self):
        return {"bonds": self.depositor}

    def check_deposit(self, role, bonds, d_e):
        if "bonds" in self.held:
            raise EscrowError(f"case {self.case_id} is already funded")

    def tick(self, d_e, oracle):
        if self.done or "bonds" not in self.held or d_e < self.release_at:
            return []
        self.status = "released"
        return self._release("bonds", self.beneficiary, "timer")

    def cancel(self, by: AgentId) -> list[Transfer]:
        self._require_live()
        if by != self.depositor:
            raise EscrowError(f"only {self.depositor} may cancel case {self.case_id}")
        self.status = "cancelled"
        return self._release("bonds", self.depositor, "cancelled")

    def params(self):
        return {"depositor": self.depositor, "beneficiary": self.beneficiary, "release_at": self.release_at}


@dataclass
class Collateral(EscrowCase):
    """Borrower (depositor) pledges bonds; lender (beneficiary) gets them on default."""

    subject: AgentId | None = None
    kind: ClassVar[CaseKind] = CaseKind.COLLATERAL
    terminal: ClassVar[frozenset[str]] = frozenset({"defaulted", "fulfilled"})
    role_name: ClassVar[str] = "collateral"

    def roles(self):
        return {self.role_name: self.depositor}

    @property
    def defaulter(self) -> AgentId:
        return self.subject or self.depositor

    @property
    def borrower(self) -> AgentId:
        return self.depositor

    def adjudicate(self, oracle: Oracle, d_e: int) -> list[Transfer]:
        self._require_live()
        verdict = oracle.event_by("default", self.defaulter, d_e)
        if verdict is None:
            return []
        if verdict:
            self.status = "defaulted"
            return self._release(self.role_name, self.beneficiary, "default")
        self.status = "fulfilled"
        return self._release(self.role_name, self.depositor, "fulfilment")

    def params(self):
        return {"depositor": self.depositor, "lender": self.beneficiary, "subject": self.defaulter}


@dataclass
class Guarantee(Collateral):
    """Guarantor (depositor) posts own bonds covering ``borrower`` towards the lender."""

    kind: ClassVar[CaseKind] = CaseKind.GUARANTEE
    role_name: ClassVar[str] = "guarantee"

    def check_deposit(self, role, bonds, d_e):
        _only_issuer(bonds, self.depositor, "a guarantee")

    @property
    def defaulter(self) -> AgentId:
        if self.subject is None:
            raise EscrowError("a guarantee needs the borrower as subject")
        return self.subject

    def params(self):
        return {"guarantor": self.depositor, "lender": self.beneficiary, "borrower": self.subject}


class Style(str, Enum):
    AMERICAN = "American"
    EUROPEAN = "European"


@dataclass
class Option(EscrowCase):
    """Holder ``p`` (depositor) may buy the underlying of writer ``q`` (beneficiary)."""

    establish_by: int = 0
    expiry: int = 0
    style: Style = Style.AMERICAN
    kind: ClassVar[CaseKind] = CaseKind.OPTION
    terminal: ClassVar[frozenset[str]] = frozenset({"exercised", "expired", "unwound"})

    def __post_init__(self) -> None:
        self.style = Style(self.style.title() if isinstance(self.style, str) else self.style)
        if self.establish_by > self.expiry:
            raise EscrowError("establishment window must close no later than expiry")

    def roles(self):
        return {"premium": self.depositor, "strike": self.depositor, "underlying": self.beneficiary}

    @property
    def established(self) -> bool:
        return "premium" in self.held and "underlying" in self.held

    def check_deposit(self, role, bonds, d_e):
        if d_e > self.establish_by:
            raise EscrowError(f"option {self.case_id} sealed after day {self.establish_by}")
        if role in self.held:
            raise EscrowError(f"duplicate {role} deposit into option {self.case_id}")
        if role == "premium":
            _only_issuer(bonds, self.depositor, "the premium")

    def after_deposit(self, role, d_e):
        if self.established:
            self.status = "established"
        return []

    def exercise(self, by: AgentId, d_e: int) -> list[Transfer]:
        self._require_live()
        if by != self.depositor:
            raise EscrowError(f"only {self.depositor} holds option {self.case_id}")
        if not self.established:
            raise EscrowError(f"option {self.case_id} is not established")
        if self.style is Style.AMERICAN and d_e > self.expiry:
            raise EscrowError(f"American exercise after expiry day {self.expiry}")
        if self.style is Style.EUROPEAN and d_e != self.expiry:
            raise EscrowError(f"European exercise only on day {self.expiry}, escrow is at {d_e}")
        self.status = "exercised"
        return (
            self._release("underlying", self.depositor, "exercise")
            + self._release("premium", self.beneficiary, "exercise")
            + self._release("strike", self.beneficiary, "exercise")
        )

    def tick(self, d_e, oracle):
        if self.done:
            return []
        if not self.established and d_e > self.establish_by:
            self.status = "unwound"
            out = []
            for role, who in self.roles().items():
                out += self._release(role, who, "unwound")
            return out
        if self.established and d_e > self.expiry:
            self.status = "expired"
            return (
                self._release("underlying", self.beneficiary, "expiry")
                + self._release("premium", self.beneficiary, "expiry")
                + self._release("strike", self.depositor, "expiry")
            )
        return []

    def params(self):
        return {
            "holder": self.depositor, "writer": self.beneficiary,
            "establish_by": self.establish_by, "expiry": self.expiry, "style": self.style.value,
        }


@dataclass
class Insurance(EscrowCase):
    """Insured ``p`` (depositor) pays a premium; insurer ``q`` (beneficiary) holds reserves."""

    expiry: int = 0
    payout: int = 1
    subject: str = ""
    kind: ClassVar[CaseKind] = CaseKind.INSURANCE
    terminal: ClassVar[frozenset[str]] = frozenset({"claimed", "expired"})

    def roles(self):
        return {"premium": self.depositor, "reserves": self.beneficiary}

    def check_deposit(self, role, bonds, d_e):
        if role in self.held:
            raise EscrowError(f"duplicate {role} deposit into case {self.case_id}")
        if role == "reserves":
            _only_issuer(bonds, self.beneficiary, "insurer reserves")
            if len(bonds) < self.payout:
                raise EscrowError(f"reserves {len(bonds)} do not cover the payout {self.payout}")
        if role == "premium":
            _only_issuer(bonds, self.depositor, "the premium")
            if "reserves" not in self.held:
                raise EscrowError("insurer reserves must be in place before the premium")

    def after_deposit(self, role, d_e):
        if "premium" in self.held and "reserves" in self.held:
            self.status = "active"
        return []

    def _claim(self) -> list[Transfer]:
        reserves = self.held.pop("reserves")
        paid, rest = reserves.select(_front_lots(reserves, self.payout))
        self.status = "claimed"
        out = [Transfer(self.case_id, self.depositor, paid, "claim")]
        if rest:
            out.append(Transfer(self.case_id, self.beneficiary, rest, "reserves"))
        return out + self._release("premium", self.beneficiary, "premium")

    def adjudicate(self, oracle: Oracle, d_e: int) -> list[Transfer]:
        self._require_live()
        if self.status != "active":
            raise EscrowError(f"insurance {self.case_id} is not active")
        if oracle.event_by("insured_event", self.subject, min(d_e, self.expiry)):
            return self._claim()
        return []

    def tick(self, d_e, oracle):
        if self.done or d_e < self.expiry:
            return []
        if self.status == "active" and oracle is not None and oracle.event_by(
            "insured_event", self.subject, self.expiry
        ):
            return self._claim()
        self.status = "expired"
        return self._release("premium", self.beneficiary, "expiry") + self._release(
            "reserves", self.beneficiary, "expiry"
        )

    def params(self):
        return {
            "insured": self.depositor, "insurer": self.beneficiary,
            "expiry": self.expiry, "payout": self.payout, "subject": self.subject,
        }


@dataclass
class CDS(EscrowCase):
    """Buyer ``p`` (depositor) pays premiums through ``e`` to seller ``q`` (beneficiary)."""

    reference: AgentId = ""
    expiry: int = 0
    kind: ClassVar[CaseKind] = CaseKind.CDS
    terminal: ClassVar[frozenset[str]] = frozenset({"credit_event", "expired"})

    def roles(self):
        return {"premium": self.depositor, "reserves": self.beneficiary}

    def check_deposit(self, role, bonds, d_e):
        if role == "premium":
            _only_issuer(bonds, self.depositor, "CDS premiums")
        elif "reserves" in self.held:
            raise EscrowError(f"duplicate reserves deposit into case {self.case_id}")
        else:
            _only_issuer(bonds, self.beneficiary, "CDS reserves")

    def after_deposit(self, role, d_e):
        if role == "premium":
            return self._release("premium", self.beneficiary, "premium forwarded")
        return []

    def _event(self, oracle: Oracle | None, day: int) -> bool:
        return bool(oracle is not None and oracle.event_by("default", self.reference, day))

    def adjudicate(self, oracle: Oracle, d_e: int) -> list[Transfer]:
        self._require_live()
        if self._event(oracle, min(d_e, self.expiry)):
            self.status = "credit_event"
            return self._release("reserves", self.depositor, "credit event")
        return []

    def tick(self, d_e, oracle):
        if self.done or d_e < self.expiry:
            return []
        if self._event(oracle, self.expiry):
            self.status = "credit_event"
            return self._release("reserves", self.depositor, "credit event")
        self.status = "expired"
        return self._release("reserves", self.beneficiary, "expiry")

    def params(self):
        return {"buyer": self.depositor, "seller": self.beneficiary,
                "reference": self.reference, "expiry": self.expiry}


@dataclass
class LetterOfCredit(EscrowCase):
    """Bank ``b`` (depositor) backs buyer ``q``'s payment to seller ``p`` (beneficiary)."""

    buyer: AgentId = ""
    amount: int = 1
    reimburse_maturity: int | None = None
    expiry: int | None = None
    kind: ClassVar[CaseKind] = CaseKind.LETTER_OF_CREDIT
    terminal: ClassVar[frozenset[str]] = frozenset({"presented", "expired"})

    def __post_init__(self) -> None:
        if self.reimburse_maturity is None:
            raise EscrowError("letter of credit needs a reimbursement maturity")

    def roles(self):
        return {"credit": self.depositor}

    def check_deposit(self, role, bonds, d_e):
        if "credit" in self.held:
            raise EscrowError(f"letter of credit {self.case_id} already issued")
        _only_issuer(bonds, self.depositor, "a letter of credit")
        if len(bonds) != self.amount:
            raise EscrowError(f"letter of credit is for {self.amount} bonds, got {len(bonds)}")

    def adjudicate(self, oracle: Oracle, d_e: int) -> tuple[list[Transfer], list[Obligation]]:
        self._require_live()
        if "credit" not in self.held:
            raise EscrowError(f"letter of credit {self.case_id} has not been issued")
        if not oracle.event_by("delivery", self.beneficiary, d_e):
            return [], []
        self.status = "presented"
        owed = Obligation(self.case_id, self.buyer, self.depositor, self.amount, self.reimburse_maturity)
        return self._release("credit", self.beneficiary, "presentation"), [owed]

    def tick(self, d_e, oracle):
        if self.done or self.expiry is None or d_e < self.expiry:
            return []
        self.status = "expired"
        return self._release("credit", self.depositor, "expiry")

    def params(self):
        return {"bank": self.depositor, "seller": self.beneficiary, "buyer": self.buyer,
                "amount": self.amount, "reimburse_maturity": self.reimburse_maturity,
                "expiry": self.expiry}


@dataclass
class CreditLine(EscrowCase):
    """Lender ``p`` (depositor) commits ``limit`` coins to borrower ``q`` (beneficiary)."""

    limit: int = 0
    rate: Fraction = Fraction(0)
    schedule: tuple[int, ...] = ()
    expiry: int = 0
    drawn: int = 0
    coin_maturity: int | None = None
    draws: list[Draw] = field(default_factory=list)
    kind: ClassVar[CaseKind] = CaseKind.CREDIT_LINE
    terminal: ClassVar[frozenset[str]] = frozenset({"expired"})

    def __post_init__(self) -> None:
        self.rate = Fraction(self.rate)
        self.schedule = tuple(int(d) for d in self.schedule)
        if isinstance(self.limit, bool) or not isinstance(self.limit, int) or self.limit <= 0:
            raise EscrowError(f"credit limit must be a positive integer, got {self.limit!r}")
        if self.rate < 0:
            raise EscrowError("interest rate must be non-negative")
        if (self.rate * self.limit).denominator != 1:
            raise EscrowError(f"rate {self.rate} on limit {self.limit} is not a whole number of bonds")
        if any(b <= a for a, b in zip(self.schedule, self.schedule[1:])):
            raise EscrowError("payment dates must be strictly ascending")
        if self.schedule and self.schedule[-1] > self.expiry:
            raise EscrowError("payment dates must not fall after line expiry")

    def roles(self):
        return {"line": self.depositor}

    def check_deposit(self, role, bonds, d_e):
        _only_issuer(bonds, self.depositor, "credit-line funds")
        mats = {l.maturity for l in bonds.lots()}
        if len(mats) != 1 or (self.coin_maturity is not None and mats != {self.coin_maturity}):
            raise EscrowError("credit-line funds must be coins of a single maturity")
        if self.status == "expired":
            raise EscrowError(f"credit line {self.case_id} has expired")
        if "line" not in self.held and self.coin_maturity is None and len(bonds) != self.limit:
            raise EscrowError(f"establishment deposits the full limit {self.limit}")

    def after_deposit(self, role, d_e):
        (m,) = {l.maturity for l in self.held["line"].lots()}
        self.coin_maturity = m
        if self.status == "open":
            self.status = "active"
        return []

    @property
    def available(self) -> int:
        return self.limit - self.drawn

    def _live_line(self) -> None:
        if self.status != "active":
            raise EscrowError(f"credit line {self.case_id} is {self.status}")

    def draw(self, borrower: AgentLedger, k: int, d_e: int) -> tuple[AgentLedger, list[Transfer], Draw]:
        self._live_line()
        if borrower.owner != self.beneficiary:
            raise EscrowError(f"{borrower.owner} is not the borrower on {self.case_id}")
        if isinstance(k, bool) or not isinstance(k, int) or k <= 0:
            raise EscrowError(f"draw must be a positive integer, got {k!r}")
        if k > self.available:
            raise EscrowError(f"draw {k} exceeds available {self.available}")
        each = self.rate * k
        if each.denominator != 1:
            raise EscrowError(f"interest {each} on draw {k} is not a whole number of bonds")
        dates = tuple(d for d in self.schedule if d > d_e)
        coins, rest = self.held["line"].select([Lot(self.depositor, self.coin_maturity, k)])
        # q mints principal and interest, swaps them to e for the coins
        led = mint(borrower, k, self.expiry)
        minted = BondBag.minted(borrower.owner, self.expiry, borrower.next_serial, k)
        for d in dates:
            if each:
                minted = minted.plus(BondBag.minted(borrower.owner, d, led.next_serial, int(each)))
                led = mint(led, int(each), d)
        led = led.with_holdings(led.holdings.minus(minted).plus(coins))
        if rest:
            self.held["line"] = rest
        else:
            del self.held["line"]
        self.drawn += k
        record = Draw(d_e, k, dates, int(each))
        self.draws.append(record)
        return led, [Transfer(self.case_id, self.depositor, minted, "draw forwarded")], record

    def repay(
        self, borrower: AgentLedger, lender: AgentLedger, k: int
    ) -> tuple[AgentLedger, AgentLedger]:
        self._live_line()
        if (borrower.owner, lender.owner) != (self.beneficiary, self.depositor):
            raise EscrowError(f"repayment parties do not match case {self.case_id}")
        if isinstance(k, bool) or not isinstance(k, int) or k <= 0:
            raise EscrowError(f"repayment must be a positive integer, got {k!r}")
        if k > self.drawn:
            raise EscrowError(f"repayment {k} exceeds drawn {self.drawn}")
        coins, b_rest = borrower.holdings.select([Lot(self.depositor, self.coin_maturity, k)])
        principal, l_rest = lender.holdings.select([Lot(borrower.owner, self.expiry, k)])
        # swap, then the lender redeposits the coins it received
        self.held["line"] = self.held.get("line", EMPTY).plus(coins)
        self.drawn -= k
        return (
            borrower.with_holdings(b_rest.plus(principal)),
            lender.with_holdings(l_rest),
        )

    def tick(self, d_e, oracle):
        if self.done or d_e < self.expiry:
            return []
        self.status = "expired"
        return self._release("line", self.depositor, "expiry")

    def params(self):
        return {"lender": self.depositor, "borrower": self.beneficiary, "limit": self.limit,
                "rate": str(self.rate), "schedule": list(self.schedule), "expiry": self.expiry,
                "drawn": self.drawn}


def _front_lots(bag: BondBag, k: int) -> list[Lot]:
    out = []
    for lot in bag.lots():
        if k <= 0:
            break
        take = min(k, lot.count)
        out.append(Lot(lot.issuer, lot.maturity, take))
        k -= take
    return out


def resolve_role(case: EscrowCase, depositor: AgentId, role: str | None) -> str:
    roles = case.roles()
    if role is None:
        mine = [r for r, who in roles.items() if who == depositor]
        if len(mine) != 1:
            raise EscrowError(f"deposit role for {depositor} on {case.case_id} is ambiguous: {mine}")
        role = mine[0]
    if roles.get(role) != depositor:
        raise EscrowError(f"{depositor} may not make a {role!r} deposit on {case.case_id}")
    return role


CASE_TYPES: dict[CaseKind, type[EscrowCase]] = {
    cls.kind: cls
    for cls in (TimedRelease, Collateral, Guarantee, Option, Insurance, CDS, LetterOfCredit, CreditLine)
}


class EscrowAgent:
    """A single escrow agent managing many cases under its own local date."""

    def __init__(self, agent_id: AgentId = "escrow", local_date: int = 0):
        self.agent_id = agent_id
        self.local_date = local_date
        self.cases: dict[str, EscrowCase] = {}
        self._ids = itertools.count(1)

    def open(self, kind: CaseKind | str, case_id: str | None = None, **params) -> EscrowCase:
        try:
            cls = CASE_TYPES[CaseKind(kind)]
        except ValueError:
            raise EscrowError(f"unknown case kind {kind!r}") from None
        if case_id is None:
            case_id = f"c{next(self._ids)}"
            while case_id in self.cases:
                case_id = f"c{next(self._ids)}"
        elif case_id in self.cases:
            raise EscrowError(f"case id {case_id!r} already used")
        try:
            case = cls(case_id=case_id, **params)
        except EscrowError:
            raise
        except (TypeError, ValueError, ArithmeticError) as exc:
            raise EscrowError(f"bad parameters for {cls.kind.value}: {exc}") from None
        if self.agent_id in (case.depositor, case.beneficiary):
            raise EscrowError("the escrow agent cannot be a party to its own case")
        self.cases[case_id] = case
        return case

    def case(self, case_id: str) -> EscrowCase:
        try:
            return self.cases[case_id]
        except KeyError:
            raise EscrowError(f"unknown escrow case {case_id!r}") from None

    def deposit(
        self, ledger: AgentLedger, case_id: str, lots: Iterable, role: str | None = None
    ) -> tuple[AgentLedger, list[Transfer]]:
        """Swap ``{(depositor, x), (e, ∅)}``; holdings untouched on any failure."""
        case = self.case(case_id)
        case._require_live()
        role = resolve_role(case, ledger.owner, role)
        lots = [Lot.parse(l) for l in lots]
        if not lots:
            raise EscrowError("deposit of zero lots")
        selected, remaining = ledger.holdings.select(lots)
        case.check_deposit(role, selected, self.local_date)
        case.held[role] = case.held.get(role, EMPTY).plus(selected)
        out = case.after_deposit(role, self.local_date)
        return ledger.with_holdings(remaining), out

    def advance_date(self, new_date: int, oracle: Oracle | None = None) -> list[Transfer]:
        if new_date <= self.local_date:
            raise TransactionRejected(
                f"{self.agent_id}: date must strictly increase ({self.local_date} -> {new_date})"
            )
        self.local_date = new_date
        return self.tick(oracle)

    def tick(self, oracle: Oracle | None = None) -> list[Transfer]:
        out = []
        for case in self.cases.values():
            out += case.tick(self.local_date, oracle)
        return out

    def cancel(self, case_id: str, by: AgentId) -> list[Transfer]:
        case = self.case(case_id)
        if not isinstance(case, TimedRelease):
            raise EscrowError(f"case {case_id} ({case.kind.value}) cannot be cancelled")
        return case.cancel(by)

    def exercise(self, case_id: str, by: AgentId) -> list[Transfer]:
        case = self.case(case_id)
        if not isinstance(case, Option):
            raise EscrowError(f"case {case_id} is not an option")
        return case.exercise(by, self.local_date)

    def adjudicate(self, case_id: str, oracle: Oracle) -> tuple[list[Transfer], list[Obligation]]:
        case = self.case(case_id)
        if not isinstance(case, (Collateral, Insurance, CDS, LetterOfCredit)):
            raise EscrowError(f"case {case_id} ({case.kind.value}) has nothing to adjudicate")
        result = case.adjudicate(oracle, self.local_date)
        return result if isinstance(result, tuple) else (result, [])

    def draw(self, case_id: str, borrower: AgentLedger, k: int):
        case = self.case(case_id)
        if not isinstance(case, CreditLine):
            raise EscrowError(f"case {case_id} is not a credit line")
        return case.draw(borrower, k, self.local_date)

    def repay(self, case_id: str, borrower: AgentLedger, lender: AgentLedger, k: int):
        case = self.case(case_id)
        if not isinstance(case, CreditLine):
            raise EscrowError(f"case {case_id} is not a credit line")
        return case.repay(borrower, lender, k)

    def held(self) -> BondBag:
        total = EMPTY
        for case in self.cases.values():
            total = total.plus(case.holdings())
        return total

    def to_json(self) -> dict:
        return {
            "agent": self.agent_id,
            "local_date": self.local_date,
            "cases": [c.to_json() for c in self.cases.values()],
        }

