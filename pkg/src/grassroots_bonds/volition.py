"""Guarded transactions, volitional state and run checkers.

A transaction fires only when every guard has willed its equivalence class.
Executing any member of a class removes the class from every agent's
willed set.  The checkers decide correctness of finite runs and verify
interleavings of runs over disjoint agent sets.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Sequence

from . import bonds as bc
from .bonds import AgentId, AgentLedger, Bond, BondBag, Lot
from .errors import (
    InterleavingError,
    MalformedTrace,
    NoChange,
    NotEnabled,
    TransactionRejected,
    UnknownAgent,
)


class Kind(str, Enum):
    MINT = "Mint"
    ADVANCE_DATE = "AdvanceDate"
    SWAP = "Swap"
    PAY = "Pay"
    REDEEM = "Redeem"


LotKey = tuple[tuple[AgentId, int, int], ...]


def lot_key(lots: Iterable[Lot] | BondBag) -> LotKey:
    """Multiset identity of a lot list: merged, sorted (issuer, maturity, count)."""
    if isinstance(lots, BondBag):
        return lots.lot_key()
    counts: Counter = Counter()
    for lot in lots:
        lot = Lot.parse(lot)
        counts[(lot.issuer, lot.maturity)] += lot.count
    return tuple(sorted((i, m, n) for (i, m), n in counts.items()))


@dataclass(frozen=True, order=True)
class TransactionClass:
    kind: Kind
    key: tuple

    @property
    def participants(self) -> tuple[AgentId, ...]:
        k = self.key
        if self.kind is Kind.MINT or self.kind is Kind.ADVANCE_DATE:
            return (k[0],)
        if self.kind is Kind.SWAP:
            return (k[0][0], k[1][0])
        return (k[0], k[1])

    @property
    def guards(self) -> frozenset[AgentId]:
        if self.kind is Kind.ADVANCE_DATE:
            return frozenset()
        if self.kind is Kind.SWAP:
            return frozenset(self.participants)
        return frozenset([self.key[0]])

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "key": _jsonable(self.key)}

    def __str__(self) -> str:
        return f"[{self.kind.value} {_jsonable(self.key)}]"


def _jsonable(obj):
    if isinstance(obj, tuple):
        return [_jsonable(o) for o in obj]
    return obj


def mint_class(issuer: AgentId, k: int, maturity: int) -> TransactionClass:
    return TransactionClass(Kind.MINT, (issuer, k, maturity))


def advance_class(agent: AgentId) -> TransactionClass:
    # The target date is deliberately not part of the key.
    return TransactionClass(Kind.ADVANCE_DATE, (agent,))


def swap_class(p: AgentId, q: AgentId, x, y) -> TransactionClass:
    sides = sorted([(p, lot_key(x)), (q, lot_key(y))])
    return TransactionClass(Kind.SWAP, tuple(sides))


def pay_class(payer: AgentId, payee: AgentId, x) -> TransactionClass:
    return TransactionClass(Kind.PAY, (payer, payee, lot_key(x)))


def redeem_class(
    holder: AgentId, issuer: AgentId, coin_maturity: int, wanted_issuer: AgentId, wanted_maturity: int
) -> TransactionClass:
    return TransactionClass(
        Kind.REDEEM, (holder, issuer, coin_maturity, (wanted_issuer, wanted_maturity))
    )


# -- concrete transactions -------------------------------------------------


@dataclass(frozen=True)
class Mint:
    issuer: AgentId
    k: int
    maturity: int

    @property
    def participants(self):
        return (self.issuer,)

    def tx_class(self):
        return mint_class(self.issuer, self.k, self.maturity)

    def apply(self, ledgers):
        return {self.issuer: bc.mint(ledgers[self.issuer], self.k, self.maturity)}


@dataclass(frozen=True)
class AdvanceDate:
    agent: AgentId
    new_date: int

    @property
    def participants(self):
        return (self.agent,)

    def tx_class(self):
        return advance_class(self.agent)

    def apply(self, ledgers):
        return {self.agent: bc.advance_date(ledgers[self.agent], self.new_date)}


@dataclass(frozen=True)
class Swap:
    p: AgentId
    q: AgentId
    x: BondBag
    y: BondBag

    @property
    def participants(self):
        return (self.p, self.q)

    def tx_class(self):
        return swap_class(self.p, self.q, self.x, self.y)

    def apply(self, ledgers):
        a, b = bc.apply_swap(ledgers[self.p], ledgers[self.q], self.x, self.y)
        return {self.p: a, self.q: b}


@dataclass(frozen=True)
class Pay:
    payer: AgentId
    payee: AgentId
    x: BondBag

    @property
    def participants(self):
        return (self.payer, self.payee)

    def tx_class(self):
        return pay_class(self.payer, self.payee, self.x)

    def apply(self, ledgers):
        a, b = bc.apply_pay(ledgers[self.payer], ledgers[self.payee], self.x)
        return {self.payer: a, self.payee: b}


@dataclass(frozen=True)
class Redeem:
    holder: AgentId
    issuer: AgentId
    coin: Bond
    wanted: Bond

    @property
    def participants(self):
        return (self.holder, self.issuer)

    def tx_class(self):
        return redeem_class(
            self.holder, self.issuer, self.coin.maturity, self.wanted.issuer, self.wanted.maturity
        )

    def apply(self, ledgers):
        a, b = bc.apply_redeem(ledgers[self.holder], ledgers[self.issuer], self.coin, self.wanted)
        return {self.holder: a, self.issuer: b}


Transaction = Mint | AdvanceDate | Swap | Pay | Redeem


@dataclass(frozen=True)
class GuardedTransaction:
    txn: Transaction
    guards: frozenset[AgentId]

    def __post_init__(self) -> None:
        if not set(self.guards) <= set(self.txn.participants):
            raise ValueError(f"guards {set(self.guards)} are not participants of {self.txn}")

    @classmethod
    def of(cls, txn: Transaction) -> "GuardedTransaction":
        """Guard ``txn`` as the bond contract does: initiator, both parties, or nobody."""
        return cls(txn, txn.tx_class().guards)


@dataclass(frozen=True)
class VolitionSet:
    owner: AgentId
    willed: frozenset[TransactionClass] = field(default_factory=frozenset)

    def __contains__(self, cls: TransactionClass) -> bool:
        return cls in self.willed


class AgentState(NamedTuple):
    volition: VolitionSet
    ledger: AgentLedger


World = Mapping[AgentId, AgentState]


def initial_state(agent: AgentId) -> AgentState:
    return AgentState(VolitionSet(agent), AgentLedger(agent))


def change_volition(
    v: VolitionSet,
    add: Iterable[TransactionClass] = (),
    remove: Iterable[TransactionClass] = (),
) -> VolitionSet:
    willed = (v.willed | frozenset(add)) - frozenset(remove)
    if willed == v.willed:
        raise NoChange(f"volition of {v.owner} unchanged")
    return VolitionSet(v.owner, willed)


def _ledgers(world: World, agents: Iterable[AgentId]) -> dict[AgentId, AgentLedger]:
    out = {}
    for agent in agents:
        if agent not in world:
            raise UnknownAgent(f"unknown participant {agent!r}")
        out[agent] = world[agent].ledger
    return out


def machine_enabled(txn: Transaction, world: World) -> bool:
    ledgers = _ledgers(world, txn.participants)
    try:
        txn.apply(ledgers)
    except TransactionRejected:
        return False
    return True


def is_enabled(gt: GuardedTransaction, world: World) -> bool:
    if not machine_enabled(gt.txn, world):
        return False
    cls = gt.txn.tx_class()
    return all(cls in world[g].volition for g in gt.guards)


def execute_volitional(gt: GuardedTransaction, world: World) -> dict[AgentId, AgentState]:
    if not is_enabled(gt, world):
        raise NotEnabled(f"{gt.txn.tx_class()} is not enabled")
    cls = gt.txn.tx_class()
    changed = gt.txn.apply(_ledgers(world, gt.txn.participants))
    out = {}
    for agent, state in world.items():
        vol = state.volition
        if cls in vol.willed:
            vol = VolitionSet(agent, vol.willed - {cls})
        out[agent] = AgentState(vol, changed.get(agent, state.ledger))
    return out


def instantiate(cls: TransactionClass, world: World) -> Transaction | None:
    """A concrete member of ``cls`` whose machine precondition holds, if any."""
    k = cls.key
    try:
        if cls.kind is Kind.MINT:
            txn = Mint(*k)
        elif cls.kind is Kind.ADVANCE_DATE:
            led = _ledgers(world, k)[k[0]]
            txn = AdvanceDate(k[0], led.local_date + 1)
        elif cls.kind is Kind.SWAP:
            (p, xk), (q, yk) = k
            led = _ledgers(world, (p, q))
            x, _ = led[p].holdings.select(Lot(*l) for l in xk)
            y, _ = led[q].holdings.select(Lot(*l) for l in yk)
            txn = Swap(p, q, x, y)
        elif cls.kind is Kind.PAY:
            payer, payee, xk = k
            led = _ledgers(world, (payer, payee))
            x, _ = led[payer].holdings.select(Lot(*l) for l in xk)
            txn = Pay(payer, payee, x)
        else:
            holder, issuer, coin_m, (w_issuer, w_m) = k
            led = _ledgers(world, (holder, issuer))
            coin = led[holder].holdings.first(issuer, coin_m)
            wanted = led[issuer].holdings.first(w_issuer, w_m)
            if coin is None or wanted is None:
                return None
            txn = Redeem(holder, issuer, coin, wanted)
    except TransactionRejected:
        return None
    return txn if machine_enabled(txn, world) else None


def _holds(ledger: AgentLedger, key) -> bool:
    need: Counter = Counter()
    for issuer, maturity, count in key:
        need[(issuer, maturity)] += count
    return all(ledger.holdings.count_exact(i, m) >= n for (i, m), n in need.items())


def class_enabled(cls: TransactionClass, world: World) -> bool:
    if any(p not in world for p in cls.participants):
        return False
    if not all(cls in world[g].volition for g in cls.guards):
        return False
    if cls.kind is Kind.SWAP:
        # a swap of held lots between two distinct agents always applies
        (p, xk), (q, yk) = cls.key
        return p != q and bool(xk or yk) and _holds(world[p].ledger, xk) and _holds(world[q].ledger, yk)
    return instantiate(cls, world) is not None


def enabled_willed(world: World) -> frozenset[TransactionClass]:
    """Classes that are willed by someone and currently enabled.

    Unguarded AdvanceDate classes are left out: local time is always free to
    advance, so on a finite trace they would trivially never be "taken".
    """
    candidates = set()
    for state in world.values():
        candidates.update(state.volition.willed)
    return frozenset(
        c for c in candidates if c.kind is not Kind.ADVANCE_DATE and class_enabled(c, world)
    )


# -- runs and checkers ------------------------------------------------------


@dataclass
class Run:
    """Snapshots ``s0 .. sn`` and the class taken between consecutive snapshots.

    ``taken[i]`` leads from ``snapshots[i]`` to ``snapshots[i + 1]``; it is
    None for change-volition steps.
    """

    snapshots: list[dict[AgentId, AgentState]] = field(default_factory=list)
    taken: list[TransactionClass | None] = field(default_factory=list)

    @property
    def agents(self) -> frozenset[AgentId]:
        return frozenset(self.snapshots[0]) if self.snapshots else frozenset()


@dataclass(frozen=True)
class Verdict:
    correct: bool
    violation: TransactionClass | None = None
    suffix_index: int | None = None

    def __bool__(self) -> bool:
        return self.correct


def verdict_from_log(
    enabled: Sequence[frozenset[TransactionClass]],
    taken: Sequence[TransactionClass | None],
) -> Verdict:
    """Finite-trace correctness from per-snapshot enabled sets.

    A class violates correctness when it is enabled at every snapshot of
    some suffix (which must reach the end of the trace) and no member is
    taken inside that suffix.
    """
    if not enabled:
        return Verdict(True)
    if len(taken) != len(enabled) - 1:
        raise MalformedTrace(
            f"{len(enabled)} snapshots need {len(enabled) - 1} steps, got {len(taken)}"
        )
    worst: tuple[int, TransactionClass] | None = None
    last = len(enabled) - 1
    for cls in sorted(enabled[-1]):
        i = last
        while i > 0 and cls in enabled[i - 1] and taken[i - 1] != cls:
            i -= 1
        if worst is None or (i, cls) < worst:
            worst = (i, cls)
    if worst is None:
        return Verdict(True)
    return Verdict(False, worst[1], worst[0])


def check_correct_run(run: Run) -> Verdict:
    if not isinstance(run, Run):
        raise MalformedTrace("expected a Run")
    for snap in run.snapshots:
        if not isinstance(snap, Mapping):
            raise MalformedTrace("snapshot is not an agent mapping")
    if run.snapshots and len(run.taken) != len(run.snapshots) - 1:
        raise MalformedTrace(
            f"{len(run.snapshots)} snapshots need {len(run.snapshots) - 1} steps, got {len(run.taken)}"
        )
    if not run.snapshots:
        return Verdict(True)
    final = enabled_willed(run.snapshots[-1])
    # Only classes enabled at the end can violate; test them backwards.
    enabled = [frozenset(c for c in final if class_enabled(c, s)) for s in run.snapshots]
    return verdict_from_log(enabled, run.taken)


def _project(snap: Mapping, agents: frozenset) -> dict:
    return {a: snap[a] for a in agents}


def check_interleaving(run_p: Run, run_q: Run, interleaved: Run) -> Verdict:
    """Verify ``interleaved`` is an interleaving of the two runs, then judge it."""
    ps, qs = run_p.agents, run_q.agents
    if ps & qs:
        raise InterleavingError(f"agent sets overlap: {sorted(ps & qs)}")
    if not run_p.snapshots or not run_q.snapshots or not interleaved.snapshots:
        raise InterleavingError("runs must be nonempty")
    for k, e in enumerate(interleaved.snapshots):
        if frozenset(e) != ps | qs:
            raise InterleavingError(f"snapshot {k} is not over the union of both agent sets")

    def fits(e, i, j):
        return _project(e, ps) == run_p.snapshots[i] and _project(e, qs) == run_q.snapshots[j]

    frontier = {(0, 0)} if fits(interleaved.snapshots[0], 0, 0) else set()
    for k in range(1, len(interleaved.snapshots)):
        if not frontier:
            break
        e = interleaved.snapshots[k]
        nxt = set()
        for i, j in frontier:
            if i + 1 < len(run_p.snapshots) and fits(e, i + 1, j):
                nxt.add((i + 1, j))
            if j + 1 < len(run_q.snapshots) and fits(e, i, j + 1):
                nxt.add((i, j + 1))
        if not nxt:
            raise InterleavingError(f"snapshot {k} is neither a P-step nor a Q-step")
        frontier = nxt
    if not frontier:
        raise InterleavingError("first snapshot does not project onto both initial states")
    if (len(run_p.snapshots) - 1, len(run_q.snapshots) - 1) not in frontier:
        raise InterleavingError("interleaving does not cover both runs")
    return check_correct_run(interleaved)


def interleave(run_p: Run, run_q: Run, schedule: Sequence[str]) -> Run:
    """Merge two runs; ``schedule`` lists 'p' / 'q' for each step taken."""
    i = j = 0
    merged = Run([{**run_p.snapshots[0], **run_q.snapshots[0]}], [])
    for side in schedule:
        if side == "p":
            i += 1
            merged.taken.append(run_p.taken[i - 1])
        elif side == "q":
            j += 1
            merged.taken.append(run_q.taken[j - 1])
        else:
            raise ValueError(f"schedule entries are 'p' or 'q', got {side!r}")
        merged.snapshots.append({**run_p.snapshots[i], **run_q.snapshots[j]})
    return merged


def round_robin(n_p: int, n_q: int) -> list[str]:
    out = []
    while n_p or n_q:
        if n_p:
            out.append("p")
            n_p -= 1
        if n_q:
            out.append("q")
            n_q -= 1
    return out
