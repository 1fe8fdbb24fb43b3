"""Unit bonds, per-agent ledgers and the five bond transactions.

A bond is a unit IOU ``(issuer, maturity, serial)``.  Holdings are multisets
of bonds.  They are stored as runs of consecutive serials per
``(issuer, maturity)`` group so that a mint of 50,000 coins costs one entry,
but every operation still acts on individual, serial-numbered bonds.

All transaction functions are pure: they return new ledgers and leave their
arguments untouched, so a rejected transaction never changes state.
"""

from __future__ import annotations

import hashlib
from functools import cached_property, lru_cache
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    ChainBroken,
    ImmatureBond,
    InsufficientBonds,
    NotAPayment,
    TransactionRejected,
)

AgentId = str

_MASK = (1 << 128) - 1


@dataclass(frozen=True, order=True)
class Bond:
    issuer: AgentId
    maturity: int
    serial: int

    def __str__(self) -> str:
        return f"¢[{self.issuer},{self.maturity}]#{self.serial}"


@dataclass(frozen=True)
class Lot:
    """``count`` bonds of one issuer with one exact maturity."""

    issuer: AgentId
    maturity: int
    count: int

    def __post_init__(self) -> None:
        _check_count(self.count, "lot count")
        _check_day(self.maturity, "lot maturity")

    def as_list(self) -> list:
        return [self.issuer, self.maturity, self.count]

    @classmethod
    def parse(cls, raw) -> "Lot":
        if isinstance(raw, Lot):
            return raw
        if isinstance(raw, Mapping):
            return cls(raw["issuer"], raw["maturity"], raw["count"])
        issuer, maturity, count = raw
        return cls(issuer, maturity, count)


def _check_count(value, what: str) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        raise TransactionRejected(f"{what} must be an integer, got {value!r}")
    if value <= 0:
        raise TransactionRejected(f"{what} must be positive, got {value}")


def _check_day(value, what: str) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise TransactionRejected(f"{what} must be a non-negative integer day, got {value!r}")


def _canon(runs: Sequence[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    """Sorted, merged runs: the multiset identity of one group."""
    if len(runs) == 1:
        return tuple(runs)
    out: list[list[int]] = []
    for start, count in sorted(runs):
        if out and out[-1][0] + out[-1][1] == start:
            out[-1][1] += count
        else:
            out.append([start, count])
    return tuple((s, c) for s, c in out)


@lru_cache(maxsize=1 << 18)
def _group_hash(key: tuple[AgentId, int], runs) -> int:
    if not runs:
        return 0
    h = hashlib.blake2b(repr((key, _canon(runs))).encode(), digest_size=16)
    return int.from_bytes(h.digest(), "big")


def _append_run(groups: dict, key, start: int, count: int) -> None:
    runs = groups.get(key)
    if not runs:
        groups[key] = ((start, count),)
        return
    last_start, last_count = runs[-1]
    if last_start + last_count == start:
        groups[key] = runs[:-1] + ((last_start, last_count + count),)
    else:
        groups[key] = runs + ((start, count),)


def _take_front(runs, k: int):
    """Split ``k`` bonds off the front of ``runs`` -> (taken, rest)."""
    taken = []
    rest = list(runs)
    while k:
        start, count = rest[0]
        if count <= k:
            taken.append((start, count))
            rest.pop(0)
            k -= count
        else:
            taken.append((start, k))
            rest[0] = (start + k, count - k)
            k = 0
    return tuple(taken), tuple(rest)


def _cut(runs, start: int, count: int):
    """Remove serials ``[start, start+count)`` from ``runs``; None if not all present."""
    end = start + count
    out = []
    removed = 0
    for s, c in runs:
        e = s + c
        lo, hi = max(s, start), min(e, end)
        if lo >= hi:
            out.append((s, c))
            continue
        removed += hi - lo
        if s < lo:
            out.append((s, lo - s))
        if hi < e:
            out.append((hi, e - hi))
    if removed != count:
        return None
    return tuple(out)


class BondBag:
    """Immutable multiset of bonds.

    Iteration order is insertion order of ``(issuer, maturity)`` groups and,
    within a group, the order bonds arrived.  Equality is multiset equality.
    """

    __slots__ = ("_groups", "_size", "_digest", "_key")

    def __init__(self, bonds: Iterable[Bond] = ()):
        groups: dict = {}
        size = 0
        for b in bonds:
            _append_run(groups, (b.issuer, b.maturity), b.serial, 1)
            size += 1
        self._groups = groups
        self._size = size
        self._digest = None
        self._key = None

    @classmethod
    def _make(cls, groups: dict, size: int, digest: int | None = None) -> "BondBag":
        bag = cls.__new__(cls)
        bag._groups = groups
        bag._size = size
        bag._digest = digest
        bag._key = None
        return bag

    @classmethod
    def from_runs(cls, runs: Iterable[Sequence]) -> "BondBag":
        """Build from ``(issuer, maturity, first_serial, count)`` entries."""
        groups: dict = {}
        size = 0
        for issuer, maturity, start, count in runs:
            if count <= 0:
                raise ValueError(f"run count must be positive: {count}")
            _append_run(groups, (issuer, maturity), start, count)
            size += count
        return cls._make(groups, size)

    @classmethod
    def minted(cls, issuer: AgentId, maturity: int, first_serial: int, k: int) -> "BondBag":
        return cls._make({(issuer, maturity): ((first_serial, k),)}, k)

    # -- queries ---------------------------------------------------------

    def __len__(self) -> int:
        return self._size

    def __bool__(self) -> bool:
        return self._size > 0

    def __iter__(self) -> Iterator[Bond]:
        for (issuer, maturity), runs in self._groups.items():
            for start, count in runs:
                for serial in range(start, start + count):
                    yield Bond(issuer, maturity, serial)

    def __contains__(self, bond: Bond) -> bool:
        for start, count in self._groups.get((bond.issuer, bond.maturity), ()):
            if start <= bond.serial < start + count:
                return True
        return False

    def __eq__(self, other) -> bool:
        if not isinstance(other, BondBag):
            return NotImplemented
        return self._size == other._size and self.canonical_runs() == other.canonical_runs()

    def __hash__(self) -> int:
        return hash(tuple(self.canonical_runs()))

    def __repr__(self) -> str:
        body = ", ".join(f"{i}@{m}×{n}" for (i, m), n in self.group_counts())
        return f"BondBag({body})"

    def group_counts(self) -> list[tuple[tuple[AgentId, int], int]]:
        return [(key, sum(c for _, c in runs)) for key, runs in self._groups.items() if runs]

    def count(self, issuer: AgentId | None = None, max_maturity: int | None = None) -> int:
        total = 0
        for (i, m), runs in self._groups.items():
            if issuer is not None and i != issuer:
                continue
            if max_maturity is not None and m > max_maturity:
                continue
            total += sum(c for _, c in runs)
        return total

    def lot_key(self) -> tuple[tuple[AgentId, int, int], ...]:
        """Sorted ``(issuer, maturity, count)`` triples, cached."""
        if self._key is None:
            self._key = tuple(sorted((i, m, n) for (i, m), n in self.group_counts()))
        return self._key

    def count_exact(self, issuer: AgentId, maturity: int) -> int:
        runs = self._groups.get((issuer, maturity))
        if not runs:
            return 0
        if len(runs) == 1:
            return runs[0][1]
        return sum(c for _, c in runs)

    def issuers(self) -> list[AgentId]:
        seen: dict = {}
        for (i, _), runs in self._groups.items():
            if runs:
                seen[i] = None
        return list(seen)

    def lots(self) -> list[Lot]:
        return [Lot(i, m, n) for (i, m), n in self.group_counts()]

    def canonical_runs(self) -> list[tuple[AgentId, int, int, int]]:
        """Sorted, merged ``(issuer, maturity, first_serial, count)`` runs."""
        out = []
        for key in sorted(k for k, r in self._groups.items() if r):
            for start, count in _canon(self._groups[key]):
                out.append((key[0], key[1], start, count))
        return out

    def raw_runs(self) -> list[tuple[AgentId, int, int, int]]:
        return [(i, m, s, c) for (i, m), runs in self._groups.items() for s, c in runs]

    def first(self, issuer: AgentId, maturity: int) -> Bond | None:
        runs = self._groups.get((issuer, maturity))
        if not runs:
            return None
        return Bond(issuer, maturity, runs[0][0])

    @property
    def digest(self) -> int:
        """Additive multiset hash over canonical groups (128 bits)."""
        if self._digest is None:
            total = 0
            for key, runs in self._groups.items():
                total += _group_hash(key, runs)
            self._digest = total & _MASK
        return self._digest

    # -- derivations -----------------------------------------------------

    def _derive(self, groups: dict, size: int, changed: dict) -> "BondBag":
        digest = None
        if self._digest is not None:
            digest = self._digest
            for key, old in changed.items():
                digest += _group_hash(key, groups.get(key, ())) - _group_hash(key, old)
            digest &= _MASK
        for key in changed:
            if key in groups and not groups[key]:
                del groups[key]
        return BondBag._make(groups, size, digest)

    def plus(self, other: "BondBag | Iterable[Bond]") -> "BondBag":
        if not isinstance(other, BondBag):
            other = BondBag(other)
        if not other:
            return self
        groups = dict(self._groups)
        changed = {}
        for key, runs in other._groups.items():
            if key not in changed:
                changed[key] = groups.get(key, ())
            for start, count in runs:
                _append_run(groups, key, start, count)
        return self._derive(groups, self._size + other._size, changed)

    def minus(self, other: "BondBag | Iterable[Bond]") -> "BondBag":
        """Remove exactly the bonds of ``other``; InsufficientBonds if any is missing."""
        if not isinstance(other, BondBag):
            other = BondBag(other)
        if not other:
            return self
        groups = dict(self._groups)
        changed = {}
        for key, runs in other._groups.items():
            if key not in changed:
                changed[key] = groups.get(key, ())
            for start, count in runs:
                cut = _cut(groups.get(key, ()), start, count)
                if cut is None:
                    raise InsufficientBonds(
                        f"bonds {key[0]}@{key[1]} serials {start}..{start + count - 1} not held"
                    )
                groups[key] = cut
        return self._derive(groups, self._size - other._size, changed)

    def select(self, lots: Iterable[Lot]) -> tuple["BondBag", "BondBag"]:
        """All-or-nothing lot selection -> ``(selected, remaining)``.

        Each lot takes the first ``count`` bonds of exactly its issuer and
        maturity, in holding order.
        """
        lots = [Lot.parse(l) for l in lots]
        need: dict = {}
        for lot in lots:
            key = (lot.issuer, lot.maturity)
            need[key] = need.get(key, 0) + lot.count
        for key, n in need.items():
            have = self.count_exact(*key)
            if have < n:
                raise InsufficientBonds(f"need {n} {key[0]}@{key[1]}, hold {have}", Lot(key[0], key[1], n))
        groups = dict(self._groups)
        changed = {}
        sel_groups: dict = {}
        taken_total = 0
        for lot in lots:
            key = (lot.issuer, lot.maturity)
            runs = groups.get(key, ())
            have = sum(c for _, c in runs)
            if have < lot.count:
                raise InsufficientBonds(
                    f"need {lot.count} {lot.issuer}@{lot.maturity}, hold {have}", lot
                )
            if key not in changed:
                changed[key] = runs
            taken, rest = _take_front(runs, lot.count)
            groups[key] = rest
            for start, count in taken:
                _append_run(sel_groups, key, start, count)
            taken_total += lot.count
        selected = BondBag._make(sel_groups, taken_total)
        return selected, self._derive(groups, self._size - taken_total, changed)


EMPTY = BondBag()


def as_bag(bonds) -> BondBag:
    return bonds if isinstance(bonds, BondBag) else BondBag(bonds)


@dataclass(frozen=True)
class AgentLedger:
    """One agent's machine state: holdings, local date, next mint serial."""

    owner: AgentId
    holdings: BondBag = field(default=EMPTY)
    local_date: int = 0
    next_serial: int = 0

    def with_holdings(self, holdings: BondBag) -> "AgentLedger":
        return AgentLedger(self.owner, holdings, self.local_date, self.next_serial)

    def is_coin(self, bond: Bond) -> bool:
        """Maturity is judged by this agent's own clock."""
        return bond.maturity <= self.local_date

    @cached_property
    def digest(self) -> bytes:
        h = hashlib.blake2b(digest_size=16)
        h.update(repr((self.owner, self.local_date, self.next_serial)).encode())
        h.update(self.holdings.digest.to_bytes(16, "big"))
        return h.digest()

    def to_json(self) -> dict:
        return {
            "owner": self.owner,
            "local_date": self.local_date,
            "next_serial": self.next_serial,
            "holdings": [list(r) for r in self.holdings.canonical_runs()],
        }


def select_bonds(holdings: BondBag, lots: Iterable[Lot]) -> tuple[BondBag, BondBag]:
    return as_bag(holdings).select(lots)


def mint(ledger: AgentLedger, k: int, maturity: int) -> AgentLedger:
    _check_count(k, "mint amount k")
    _check_day(maturity, "maturity")
    new = BondBag.minted(ledger.owner, maturity, ledger.next_serial, k)
    return replace(
        ledger,
        holdings=ledger.holdings.plus(new),
        next_serial=ledger.next_serial + k,
    )


def advance_date(ledger: AgentLedger, new_date: int) -> AgentLedger:
    _check_day(new_date, "date")
    if new_date <= ledger.local_date:
        raise TransactionRejected(
            f"{ledger.owner}: date must strictly increase ({ledger.local_date} -> {new_date})"
        )
    return replace(ledger, local_date=new_date)


def apply_pay(
    payer: AgentLedger, payee: AgentLedger, lots: "Sequence[Lot] | BondBag"
) -> tuple[AgentLedger, AgentLedger]:
    """Pay ``payee`` in its own coins.

    ``lots`` may also be a BondBag naming the exact bonds to hand over.
    """
    exact = lots if isinstance(lots, BondBag) else None
    lots = exact.lots() if exact is not None else [Lot.parse(l) for l in lots]
    if not lots:
        raise TransactionRejected("pay requires a nonempty multiset")
    for lot in lots:
        if lot.issuer != payee.owner:
            raise NotAPayment(
                f"{lot.issuer}-bonds are not {payee.owner}-coins; use a swap instead"
            )
        if lot.maturity > payer.local_date:
            raise ImmatureBond(
                f"{lot.issuer}@{lot.maturity} is immature for {payer.owner} (day {payer.local_date})"
            )
    if exact is not None:
        selected, remaining = exact, payer.holdings.minus(exact)
    else:
        selected, remaining = payer.holdings.select(lots)
    return (
        payer.with_holdings(remaining),
        payee.with_holdings(payee.holdings.plus(selected)),
    )


def apply_redeem(
    holder: AgentLedger, issuer: AgentLedger, coin: Bond, wanted: Bond
) -> tuple[AgentLedger, AgentLedger]:
    """Surrender one mature ``issuer``-coin for any one bond the issuer holds."""
    if coin.issuer != issuer.owner:
        raise TransactionRejected(f"{coin} was not issued by {issuer.owner}")
    if holder.owner == issuer.owner:
        raise TransactionRejected("an agent cannot redeem with itself")
    if not holder.is_coin(coin):
        raise ImmatureBond(f"{coin} is immature for {holder.owner} (day {holder.local_date})")
    if coin not in holder.holdings:
        raise InsufficientBonds(f"{holder.owner} does not hold {coin}")
    if wanted not in issuer.holdings:
        raise InsufficientBonds(f"{issuer.owner} does not hold {wanted}")
    x, y = BondBag([coin]), BondBag([wanted])
    return (
        holder.with_holdings(holder.holdings.minus(x).plus(y)),
        issuer.with_holdings(issuer.holdings.minus(y).plus(x)),
    )


def apply_swap(
    a: AgentLedger, b: AgentLedger, x, y
) -> tuple[AgentLedger, AgentLedger]:
    """``a`` gives ``x`` and receives ``y``; ``b`` the converse."""
    x, y = as_bag(x), as_bag(y)
    if not x and not y:
        raise TransactionRejected("swap of two empty multisets changes nothing")
    if a.owner == b.owner:
        raise TransactionRejected("swap requires two distinct agents")
    a_rest = a.holdings.minus(x)
    b_rest = b.holdings.minus(y)
    return a.with_holdings(a_rest.plus(y)), b.with_holdings(b_rest.plus(x))


@dataclass(frozen=True)
class Redemption:
    holder: AgentId
    issuer: AgentId
    coin: Bond
    wanted: Bond


def _find_coin(ledger: AgentLedger, issuer: AgentId, max_maturity: int) -> Bond | None:
    best = None
    for (i, m), _ in ledger.holdings.group_counts():
        if i == issuer and m <= max_maturity:
            bond = ledger.holdings.first(i, m)
            if best is None or (bond.maturity, bond.serial) < (best.maturity, best.serial):
                best = bond
    return best


def chain_redeem(
    ledgers: Mapping[AgentId, AgentLedger], path: Sequence[AgentId]
) -> tuple[dict[AgentId, AgentLedger], list[Redemption]]:
    """Move a claim along ``p0 .. pk`` with ``k - 1`` redemptions by ``p0``.

    Link ``i`` holds when ``p_i`` has a ``p_{i+1}``-bond that is mature for
    ``p_i`` and, since ``p0`` will redeem it next, also for ``p0``.
    """
    if len(path) < 2:
        raise ChainBroken("a chain needs at least two agents", 0)
    for agent in path:
        if agent not in ledgers:
            raise ChainBroken(f"unknown agent {agent!r}", path.index(agent))
    work = dict(ledgers)
    p0 = path[0]
    coin = _find_coin(work[p0], path[1], work[p0].local_date)
    if coin is None:
        raise ChainBroken(f"{p0} holds no mature {path[1]}-coin", 0)
    done: list[Redemption] = []
    for i in range(1, len(path) - 1):
        here, nxt = path[i], path[i + 1]
        horizon = min(work[here].local_date, work[p0].local_date)
        wanted = _find_coin(work[here], nxt, horizon)
        if wanted is None:
            raise ChainBroken(f"{here} holds no {nxt}-coin mature for {here} and {p0}", i)
        try:
            work[p0], work[here] = apply_redeem(work[p0], work[here], coin, wanted)
        except TransactionRejected as exc:
            raise ChainBroken(str(exc), i) from exc
        done.append(Redemption(p0, here, coin, wanted))
        coin = wanted
    return work, done
