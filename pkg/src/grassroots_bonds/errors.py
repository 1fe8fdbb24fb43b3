"""Exception hierarchy shared by all layers."""

from __future__ import annotations


class BondsError(Exception):
    """Base class for every error raised by this package."""


class TransactionRejected(BondsError):
    """A transition's precondition failed; no state was modified."""


class InsufficientBonds(TransactionRejected):
    def __init__(self, message: str, lot=None):
        super().__init__(message)
        self.lot = lot


class ImmatureBond(TransactionRejected):
    pass


class NotAPayment(TransactionRejected):
    """A Pay was requested with bonds not issued by the payee."""


class ChainBroken(TransactionRejected):
    def __init__(self, message: str, link: int):
        super().__init__(message)
        self.link = link


class NotEnabled(TransactionRejected):
    pass


class NoChange(TransactionRejected):
    """A change-volition that leaves the willed set as it was."""


class OneShotViolation(BondsError):
    """A reply token was bound or consumed twice."""


class EscrowError(TransactionRejected):
    pass


class PlanError(BondsError, ValueError):
    pass


class UnknownAgent(BondsError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class MalformedTrace(BondsError, ValueError):
    pass


class InterleavingError(BondsError):
    pass


class ScenarioError(BondsError):
    """Load-time problem with a scenario script."""

    def __init__(self, message: str, location: str | None = None):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class ConservationViolation(BondsError):
    pass
