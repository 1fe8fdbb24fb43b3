"""Grassroots bonds: personal IOUs, voluntary swaps, escrow and liquidity analytics."""

from .bonds import AgentLedger, Bond, BondBag, Lot, advance_date, apply_pay, apply_redeem, apply_swap, chain_redeem, mint
from .errors import BondsError, TransactionRejected
from .liquidity import LiquidityConfig, circulation, nu, ratios

__version__ = "0.1.0"

__all__ = [
    "AgentLedger", "Bond", "BondBag", "BondsError", "LiquidityConfig", "Lot", "TransactionRejected",
    "advance_date", "apply_pay", "apply_redeem", "apply_swap", "chain_redeem", "circulation", "mint",
    "nu", "ratios",
]
