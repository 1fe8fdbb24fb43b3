"""Liquidity analytics: ν, cash/quick/current ratios, circulation."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .bonds import EMPTY, AgentId, AgentLedger, BondBag


@dataclass(frozen=True)
class LiquidityConfig:
    delta: int = 90  # near-term horizon
    Delta: int = 360  # operating cycle

    def __post_init__(self) -> None:
        if not 0 < self.delta < self.Delta:
            raise ValueError(f"need 0 < delta < Delta, got delta={self.delta}, Delta={self.Delta}")


@dataclass
class BalanceView:
    """Who holds what, for analytics.

    ``assets`` are bonds an agent owns, including ones locked in its own
    outstanding proposals.  ``custody`` is held by an escrow agent: it counts
    as circulating and as the issuer's liability, but as nobody's asset.
    """

    assets: dict[AgentId, BondBag]
    dates: dict[AgentId, int]
    custody: BondBag = field(default=EMPTY)

    @classmethod
    def of(cls, ledgers: Mapping[AgentId, AgentLedger], locked=None, custody: BondBag = EMPTY):
        assets = {a: l.holdings for a, l in ledgers.items()}
        for owner, bag in (locked or {}).items():
            assets[owner] = assets.get(owner, EMPTY).plus(bag)
        return cls(assets, {a: l.local_date for a, l in ledgers.items()}, custody)


def _as_view(world) -> BalanceView:
    if isinstance(world, BalanceView):
        return world
    return BalanceView.of(world)


def nu(world, p: AgentId, t: int, q: AgentId) -> int:
    """Number of ``p``-bonds maturing by ``t`` held by ``q``; 0 when ``p == q``."""
    if p == q:
        return 0
    view = _as_view(world)
    bag = view.assets.get(q)
    return 0 if bag is None else bag.count(issuer=p, max_maturity=t)


def liabilities(world, p: AgentId, t: int) -> int:
    view = _as_view(world)
    total = sum(nu(view, p, t, q) for q in view.assets)
    return total + view.custody.count(issuer=p, max_maturity=t)


def foreign_assets(world, p: AgentId, t: int) -> int:
    """Σ_r ν_{r,t}(p): bonds of others held by ``p`` maturing by ``t``."""
    view = _as_view(world)
    bag = view.assets.get(p, EMPTY)
    return bag.count(max_maturity=t) - bag.count(issuer=p, max_maturity=t)


def _ratio(num: int, den: int) -> Fraction | None:
    return None if den == 0 else Fraction(num, den)


def _render(num: int, den: int) -> str:
    return "—" if den == 0 else f"{num}/{den}"


@dataclass(frozen=True)
class RatioReport:
    """Raw numerators over the shared denominator, so 0/35 stays 0/35."""

    agent: AgentId
    day: int
    cash_assets: int
    quick_assets: int
    current_assets: int
    current_liabilities: int

    @property
    def defined(self) -> bool:
        return self.current_liabilities != 0

    @property
    def cash(self) -> Fraction | None:
        return _ratio(self.cash_assets, self.current_liabilities)

    @property
    def quick(self) -> Fraction | None:
        return _ratio(self.quick_assets, self.current_liabilities)

    @property
    def current(self) -> Fraction | None:
        return _ratio(self.current_assets, self.current_liabilities)

    def exact(self) -> dict[str, str]:
        den = self.current_liabilities
        return {
            "cash": _render(self.cash_assets, den),
            "quick": _render(self.quick_assets, den),
            "current": _render(self.current_assets, den),
        }

    def rounded(self, places: int = 2) -> dict[str, str]:
        out = {}
        for name in ("cash", "quick", "current"):
            value = getattr(self, name)
            out[name] = "—" if value is None else f"{float(value):.{places}f}"
        return out

    def to_json(self) -> dict:
        return {
            "agent": self.agent,
            "day": self.day,
            "current_liabilities": self.current_liabilities,
            **self.exact(),
        }


def ratios(world, p: AgentId, cfg: LiquidityConfig = LiquidityConfig()) -> RatioReport:
    view = _as_view(world)
    d = view.dates.get(p, 0)
    return RatioReport(
        agent=p,
        day=d,
        cash_assets=foreign_assets(view, p, d),
        quick_assets=foreign_assets(view, p, d + cfg.delta),
        current_assets=foreign_assets(view, p, d + cfg.Delta),
        current_liabilities=liabilities(view, p, d + cfg.Delta),
    )


@dataclass(frozen=True)
class Circulation:
    per_issuer: dict[AgentId, int]

    @property
    def total(self) -> int:
        return sum(self.per_issuer.values())


def circulation(world) -> Circulation:
    """Per issuer, its bonds held by anyone else (escrow custody included)."""
    view = _as_view(world)
    per: dict[AgentId, int] = {a: 0 for a in view.assets}
    for holder, bag in view.assets.items():
        for (issuer, _), n in bag.group_counts():
            if issuer != holder:
                per[issuer] = per.get(issuer, 0) + n
    for (issuer, _), n in view.custody.group_counts():
        per[issuer] = per.get(issuer, 0) + n
    return Circulation(dict(sorted(per.items())))
