"""Mutable world state for the simulator.

The world owns every ledger, the volition sets, in-flight trades, the
escrow agent and the oracle.  Each state change goes through
:meth:`World.record`, which appends a trace record and runs the enabled
checkers.  Trade messages travel over per-pair FIFO channels and are
delivered by :meth:`World.drain`.
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

from ..bonds import (
    EMPTY,
    AgentId,
    AgentLedger,
    BondBag,
    Lot,
    advance_date,
    apply_pay,
    apply_redeem,
    chain_redeem,
    mint,
)
from ..errors import (
    ConservationViolation,
    EscrowError,
    OneShotViolation,
    TransactionRejected,
    UnknownAgent,
)
from ..escrow import EscrowAgent, Transfer, resolve_role
from ..instruments import InstrumentPlan, instrument_from_json, plan_instrument
from ..liquidity import BalanceView, LiquidityConfig
from ..oracle import Oracle
from ..trade import (
    Accept,
    Decline,
    DeclineWithMenu,
    SwapSpec,
    TradeClass,
    TradeProposal,
    accept_trade,
    classify_trade,
    propose_trade,
    reject_trade,
    respond_auto,
    settle_response,
    trade_tx_class,
)
from ..volition import (
    AgentState,
    Kind,
    Run,
    TransactionClass,
    VolitionSet,
    advance_class,
    class_enabled,
    lot_key,
    mint_class,
    redeem_class,
    verdict_from_log,
)
from .trace import TraceRecord

_MASK = (1 << 128) - 1


def lots_json(bonds) -> list[list]:
    """``[[issuer, maturity, count], ...]`` for a bag or lot list."""
    return [list(k) for k in lot_key(bonds)]


def _h(obj) -> int:
    data = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return int.from_bytes(hashlib.blake2b(data, digest_size=16).digest(), "big")


@dataclass
class PendingTrade:
    proposal: TradeProposal
    tx_class: TransactionClass
    locked: BondBag  # bonds in no ledger: offered, or the reply in flight
    stage: str = "sent"  # sent -> delivered -> answered
    kind: TradeClass | None = None
    plan: InstrumentPlan | None = None
    instrument: str | None = None
    auto_accept: bool = False

    def hash(self) -> int:
        p = self.proposal
        data = repr((p.proposal_id, p.proposer, p.recipient, self.stage, self.locked.digest)).encode()
        return int.from_bytes(hashlib.blake2b(data, digest_size=16).digest(), "big")


@dataclass(frozen=True)
class Message:
    kind: str  # "propose" | "response"
    src: AgentId
    dst: AgentId
    proposal_id: str
    response: object = None


class _StateView:
    """Read-only ``AgentId -> AgentState`` mapping over the live world."""

    def __init__(self, world: "World"):
        self._w = world

    def __getitem__(self, agent):
        w = self._w
        return AgentState(w.volitions[agent], w.ledgers[agent])

    def __contains__(self, agent):
        return agent in self._w.ledgers

    def __iter__(self):
        return iter(self._w.ledgers)

    def __len__(self):
        return len(self._w.ledgers)

    def values(self):
        return (self[a] for a in self._w.ledgers)

    def items(self):
        return ((a, self[a]) for a in self._w.ledgers)


class World:
    def __init__(
        self,
        agents: Sequence[AgentId],
        escrow_id: AgentId | None = None,
        oracle: Oracle | None = None,
        config: LiquidityConfig | None = None,
        seed: int | None = None,
        audit: str = "event",
        monitor: bool = True,
        record_run: bool = False,
        keep_trace: bool = True,
        sink: Callable[[TraceRecord], None] | None = None,
    ):
        if len(set(agents)) != len(agents):
            raise ValueError("duplicate agent ids")
        if escrow_id is not None and escrow_id in agents:
            raise ValueError("escrow agent id clashes with an agent")
        if audit not in ("event", "end", "off"):
            raise ValueError(f"audit mode must be event|end|off, got {audit!r}")
        self.agents = list(agents)
        self.ledgers: dict[AgentId, AgentLedger] = {}
        self.volitions: dict[AgentId, VolitionSet] = {a: VolitionSet(a) for a in agents}
        self.willed_by: dict[TransactionClass, set[AgentId]] = {}
        self.pending: dict[str, PendingTrade] = {}
        self.escrow = EscrowAgent(escrow_id) if escrow_id is not None else None
        self.oracle = oracle or Oracle()
        self.config = config or LiquidityConfig()
        self.rng = random.Random(seed) if seed is not None else None
        self.channels: dict[tuple[AgentId, AgentId], deque] = {}
        self.audit_mode = audit
        self.trace: list[TraceRecord] = []
        self.keep_trace = keep_trace
        self.sinks: list[Callable[[TraceRecord], None]] = [sink] if sink else []
        self.observers: list[Callable[["World", TraceRecord], None]] = []
        self.errors: list[TraceRecord] = []
        self.failed_assertions: list[TraceRecord] = []
        self.marks: dict[str, int] = {}
        self.seq = 0
        self._next_pid = 0
        self._ledger_digest: dict[AgentId, int] = {}
        self._ledger_sum = 0
        self._pending_sum = 0
        self._pending_hash: dict[str, int] = {}
        self._rr = 0
        self._in_transit: list[BondBag] = []
        for a in agents:
            self._set(a, AgentLedger(a))
        self.monitor = monitor
        self.enabled_log: list[frozenset] = [frozenset()] if monitor else []
        self.taken_log: list[TransactionClass | None] = []
        self.run: Run | None = Run([self.states()], []) if record_run else None

    # -- state plumbing ---------------------------------------------------

    def _set(self, agent: AgentId, ledger: AgentLedger) -> None:
        d = int.from_bytes(ledger.digest, "big")
        self._ledger_sum = (self._ledger_sum + d - self._ledger_digest.get(agent, 0)) & _MASK
        self._ledger_digest[agent] = d
        self.ledgers[agent] = ledger

    def _set_pending(self, pid: str, pt: PendingTrade | None) -> None:
        old = self._pending_hash.pop(pid, None)
        if old is not None:
            self._pending_sum = (self._pending_sum - old) & _MASK
        if pt is None:
            self.pending.pop(pid, None)
        else:
            self.pending[pid] = pt
            h = self._pending_hash[pid] = pt.hash()
            self._pending_sum = (self._pending_sum + h) & _MASK

    def ledger(self, agent: AgentId) -> AgentLedger:
        try:
            return self.ledgers[agent]
        except KeyError:
            raise UnknownAgent(f"unknown agent {agent!r}") from None

    def date_of(self, agent: AgentId) -> int | None:
        if agent in self.ledgers:
            return self.ledgers[agent].local_date
        if self.escrow is not None and agent == self.escrow.agent_id:
            return self.escrow.local_date
        return None

    def world_hash(self) -> str:
        total = self._ledger_sum + self._pending_sum
        if self.escrow is not None:
            total += _h(self.escrow.to_json())
        return f"{total & _MASK:032x}"

    def states(self) -> dict[AgentId, AgentState]:
        return {a: AgentState(self.volitions[a], self.ledgers[a]) for a in self.agents}

    def locked_by_proposer(self) -> dict[AgentId, BondBag]:
        out: dict[AgentId, BondBag] = {}
        for pt in self.pending.values():
            p = pt.proposal.proposer
            out[p] = out.get(p, EMPTY).plus(pt.locked)
        return out

    def view(self) -> BalanceView:
        custody = self.escrow.held() if self.escrow is not None else EMPTY
        return BalanceView.of(self.ledgers, self.locked_by_proposer(), custody)

    # -- volition ---------------------------------------------------------

    def will(self, agent: AgentId, cls: TransactionClass) -> None:
        v = self.volitions[agent]
        if cls not in v.willed:
            self.volitions[agent] = VolitionSet(agent, v.willed | {cls})
            self.willed_by.setdefault(cls, set()).add(agent)

    def retract(self, agent: AgentId, cls: TransactionClass) -> None:
        v = self.volitions[agent]
        if cls in v.willed:
            self.volitions[agent] = VolitionSet(agent, v.willed - {cls})
            holders = self.willed_by[cls]
            holders.discard(agent)
            if not holders:
                del self.willed_by[cls]

    def discharge(self, cls: TransactionClass) -> None:
        for agent in sorted(self.willed_by.get(cls, ())):
            self.retract(agent, cls)

    def enabled_now(self) -> frozenset[TransactionClass]:
        if not self.willed_by:
            return frozenset()
        view = _StateView(self)
        return frozenset(
            c for c in self.willed_by if c.kind is not Kind.ADVANCE_DATE and class_enabled(c, view)
        )

    # -- trace ------------------------------------------------------------

    def record(
        self,
        actor: AgentId,
        action: str,
        params: dict,
        result: dict | None = None,
        taken: TransactionClass | None = None,
    ) -> TraceRecord:
        if taken is not None:
            self.discharge(taken)
        rec = TraceRecord(
            seq=self.seq,
            day_of_actor=self.date_of(actor),
            actor=actor,
            action=action,
            params=params,
            result=result if result is not None else {"ok": True},
            world_hash=self.world_hash(),
        )
        self.seq += 1
        if self.keep_trace:
            self.trace.append(rec)
        for sink in self.sinks:
            sink(rec)
        if self.audit_mode == "event":
            self.audit()
        if self.monitor:
            self.taken_log.append(taken)
            self.enabled_log.append(self.enabled_now())
        if self.run is not None:
            self.run.taken.append(taken)
            self.run.snapshots.append(self.states())
        for obs in self.observers:
            obs(self, rec)
        return rec

    def record_error(self, actor: AgentId, action: str, params: dict, exc: Exception) -> TraceRecord:
        rec = self.record(actor, action, params, {"ok": False, "error": f"{type(exc).__name__}: {exc}"})
        self.errors.append(rec)
        return rec

    # -- checkers ---------------------------------------------------------

    def supply(self) -> dict[AgentId, dict[str, int]]:
        """Per issuer: minted, and where the bonds are now."""
        out = {a: {"minted": l.next_serial, "held": 0, "locked": 0, "escrowed": 0}
               for a, l in self.ledgers.items()}

        def add(bag: BondBag, where: str):
            for (issuer, _), n in bag.group_counts():
                out.setdefault(issuer, {"minted": 0, "held": 0, "locked": 0, "escrowed": 0})
                out[issuer][where] += n

        for l in self.ledgers.values():
            add(l.holdings, "held")
        for pt in self.pending.values():
            add(pt.locked, "locked")
        if self.escrow is not None:
            add(self.escrow.held(), "escrowed")
        for bag in self._in_transit:
            add(bag, "escrowed")
        return out

    def audit(self) -> None:
        """Exact conservation: each issuer's serials 0..minted-1 appear exactly once."""
        runs: dict[AgentId, list[tuple[int, int]]] = {a: [] for a in self.ledgers}
        bags = [l.holdings for l in self.ledgers.values()]
        bags += [pt.locked for pt in self.pending.values()]
        if self.escrow is not None:
            bags += [c.holdings() for c in self.escrow.cases.values()]
        bags += self._in_transit
        for bag in bags:
            for issuer, _, start, count in bag.raw_runs():
                if issuer not in runs:
                    raise ConservationViolation(f"bonds of unknown issuer {issuer!r}")
                runs[issuer].append((start, count))
        for issuer, rs in runs.items():
            rs.sort()
            expect = 0
            for start, count in rs:
                if start != expect:
                    what = "duplicated" if start < expect else "missing"
                    raise ConservationViolation(
                        f"{issuer}: serial {min(start, expect)} {what} (seq {self.seq - 1})"
                    )
                expect = start + count
            minted = self.ledgers[issuer].next_serial
            if expect != minted:
                raise ConservationViolation(f"{issuer}: {expect} bonds accounted for, {minted} minted")

    def verdict(self):
        if not self.monitor:
            raise RuntimeError("correct-run monitor was disabled")
        return verdict_from_log(self.enabled_log, self.taken_log)

    # -- basic transactions -------------------------------------------------

    def mint(self, agent: AgentId, k: int, maturity: int) -> TraceRecord:
        led = mint(self.ledger(agent), k, maturity)
        self._set(agent, led)
        return self.record(agent, "mint", {"k": k, "maturity": maturity}, taken=mint_class(agent, k, maturity))

    def advance_date(self, agent: AgentId, to: int) -> list[TraceRecord]:
        if self.escrow is not None and agent == self.escrow.agent_id:
            transfers = self.escrow.advance_date(to, self.oracle)
            self._in_transit = [t.bonds for t in transfers]
            out = [self.record(agent, "advance_date", {"to": to}, taken=advance_class(agent))]
            return out + self._apply_transfers(transfers)
        self._set(agent, advance_date(self.ledger(agent), to))
        return [self.record(agent, "advance_date", {"to": to}, taken=advance_class(agent))]

    def _apply_transfers(self, transfers: Sequence[Transfer]) -> list[TraceRecord]:
        """Hand released bonds over one record at a time.

        Bonds already taken out of their case but not yet credited sit in
        ``_in_transit`` so the audit after each record still balances.
        """
        self._in_transit = [t.bonds for t in transfers]
        out = []
        for t in transfers:
            self._in_transit.pop(0)
            led = self.ledger(t.to)
            self._set(t.to, replace(led, holdings=led.holdings.plus(t.bonds)))
            out.append(
                self.record(
                    self.escrow.agent_id,
                    "escrow_release",
                    {"case": t.case_id, "to": t.to, "lots": lots_json(t.bonds), "reason": t.reason},
                )
            )
        return out

    # -- trades -------------------------------------------------------------

    def _pid(self) -> str:
        self._next_pid += 1
        return f"t{self._next_pid}"

    def propose(
        self,
        proposer: AgentId,
        to: AgentId,
        give=(),
        want=(),
        proposal_id: str | None = None,
        plan: InstrumentPlan | None = None,
        instrument: str | None = None,
        auto_accept: bool = False,
    ) -> TraceRecord:
        self.ledger(to)
        pid = proposal_id or self._pid()
        if pid in self.pending:
            raise TransactionRejected(f"proposal id {pid!r} is in use")
        spec = SwapSpec(give, want)
        led, proposal = propose_trade(self.ledger(proposer), to, spec, pid)
        kind = classify_trade(self.ledgers[to], proposal)
        cls = trade_tx_class(proposal, kind)
        self._set(proposer, led)
        self._set_pending(pid, PendingTrade(proposal, cls, proposal.offered, plan=plan,
                                            instrument=instrument, auto_accept=auto_accept))
        self.will(proposer, cls)
        self._send(Message("propose", proposer, to, pid))
        params = {"proposal": pid, "to": to, "give": lots_json(spec.give), "want": lots_json(spec.want)}
        if instrument:
            params["instrument"] = instrument
        return self.record(proposer, "propose", params)

    def pay(self, payer: AgentId, payee: AgentId, lots) -> TraceRecord:
        lots = [Lot.parse(l) for l in lots]
        apply_pay(self.ledger(payer), self.ledger(payee), lots)  # guard check only
        return self.propose(payer, payee, give=lots, want=())

    def redeem(self, holder: AgentId, issuer: AgentId, coin_maturity: int, want) -> TraceRecord:
        if isinstance(want, (list, tuple)) and len(want) == 2:
            want = Lot(want[0], want[1], 1)
        want = Lot.parse(want)
        if want.count != 1:
            raise TransactionRejected("a redemption asks for exactly one bond")
        coin = Lot(issuer, coin_maturity, 1)
        if coin_maturity > self.ledger(holder).local_date:
            raise TransactionRejected(f"{issuer}@{coin_maturity} is not yet a coin for {holder}")
        return self.propose(holder, issuer, give=[coin], want=[want])

    def _send(self, msg: Message) -> None:
        """Append to the FIFO channel of the ordered pair; only nonempty channels are kept."""
        self.channels.setdefault((msg.src, msg.dst), deque()).append(msg)

    def _send_response(self, pt: PendingTrade, response) -> None:
        p = pt.proposal
        if isinstance(response, Accept):
            pt.locked = response.their_bonds
        else:
            pt.locked = response.returned
        pt.stage = "answered"
        self._set_pending(p.proposal_id, pt)
        self._send(Message("response", p.recipient, p.proposer, p.proposal_id, response))

    def _response_json(self, response) -> dict:
        if isinstance(response, Accept):
            return {"response": "accepted", "lots": lots_json(response.their_bonds)}
        out = {"response": "declined"}
        if isinstance(response, DeclineWithMenu):
            out["response"] = "declined_with_menu"
            out["menu"] = [[b.issuer, b.maturity, b.serial] for b in response.menu]
        return out

    def _pending_for(self, recipient: AgentId, pid: str, stage: str) -> PendingTrade:
        pt = self.pending.get(pid)
        if pt is None:
            raise TransactionRejected(f"no pending proposal {pid!r}")
        if pt.proposal.recipient != recipient:
            raise TransactionRejected(f"proposal {pid} is not addressed to {recipient}")
        if pt.stage != stage:
            raise TransactionRejected(f"proposal {pid} is {pt.stage}, not {stage}")
        return pt

    def accept(self, recipient: AgentId, pid: str) -> list[TraceRecord]:
        pt = self._pending_for(recipient, pid, "delivered")
        out = []
        if pt.plan is not None:
            for k, d in pt.plan.mints_q:
                out.append(self.mint(recipient, k, d))
        led, response = accept_trade(self.ledgers[recipient], pt.proposal)
        self._set(recipient, led)
        if isinstance(response, Accept):
            self.will(recipient, pt.tx_class)
        self._send_response(pt, response)
        out.append(self.record(recipient, "accept", {"proposal": pid}, self._response_json(response)))
        return out

    def reject(self, recipient: AgentId, pid: str) -> TraceRecord:
        pt = self._pending_for(recipient, pid, "delivered")
        led, response = reject_trade(self.ledgers[recipient], pt.proposal)
        self._set(recipient, led)
        self._send_response(pt, response)
        return self.record(recipient, "reject", {"proposal": pid}, self._response_json(response))

    def deliver(self, msg: Message) -> list[TraceRecord]:
        """Run the recipient's handler on one message; handlers are total."""
        pt = self.pending.get(msg.proposal_id)
        params = {"proposal": msg.proposal_id, "from": msg.src, "message": msg.kind}
        if msg.kind == "propose":
            if pt is None or pt.stage != "sent":
                return [self.record(msg.dst, "deliver", params, {"ok": False, "error": "stale proposal"})]
            led = self.ledgers[msg.dst]
            kind = classify_trade(led, pt.proposal)
            pt.kind = kind
            pt.stage = "delivered"
            self._set_pending(msg.proposal_id, pt)
            led2, response = respond_auto(led, pt.proposal)
            if response is None and pt.auto_accept:
                # accept on delivery: one record for receipt and acceptance
                out = [self.mint(msg.dst, k, d) for k, d in (pt.plan.mints_q if pt.plan else ())]
                led2, response = accept_trade(self.ledgers[msg.dst], pt.proposal)
                params["auto_accept"] = True
            elif response is None:
                return [self.record(msg.dst, "deliver", params,
                                    {"ok": True, "class": kind.value, "response": "deferred"})]
            else:
                out = []
            self._set(msg.dst, led2)
            if isinstance(response, Accept):
                self.will(msg.dst, pt.tx_class)
            self._send_response(pt, response)
            out.append(self.record(msg.dst, "deliver", params,
                                   {"ok": True, "class": kind.value, **self._response_json(response)}))
            return out
        # a response coming back to the proposer
        if pt is None:
            exc = OneShotViolation(f"proposal {msg.proposal_id} already settled")
            return [self.record_error(msg.dst, "settle", params, exc)]
        try:
            led = settle_response(self.ledgers[msg.dst], pt.proposal, msg.response)
        except (TransactionRejected, OneShotViolation) as exc:
            return [self.record_error(msg.dst, "settle", params, exc)]
        self._set(msg.dst, led)
        self._set_pending(msg.proposal_id, None)
        p = pt.proposal
        if isinstance(msg.response, Accept):
            action = {Kind.SWAP: "swap", Kind.PAY: "pay", Kind.REDEEM: "redeem"}[pt.tx_class.kind]
            cparams = {"proposal": p.proposal_id, "p": p.proposer, "q": p.recipient,
                       "x": lots_json(p.offered), "y": lots_json(msg.response.their_bonds)}
            if pt.instrument:
                cparams["instrument"] = pt.instrument
            return [self.record(p.proposer, action, cparams, {"ok": True, "class": pt.kind.value},
                                taken=pt.tx_class)]
        self.retract(p.proposer, pt.tx_class)
        return [self.record(p.proposer, "returned", {"proposal": p.proposal_id, "lots": lots_json(msg.response.returned)},
                            self._response_json(msg.response))]

    def drain(self) -> list[TraceRecord]:
        """Deliver queued messages until quiescent, keeping per-pair FIFO."""
        out = []
        while self.channels:
            live = sorted(self.channels)
            if self.rng is not None:
                key = self.rng.choice(live)
            else:
                key = live[self._rr % len(live)]
                self._rr += 1
            queue = self.channels[key]
            msg = queue.popleft()
            if not queue:
                del self.channels[key]
            out += self.deliver(msg)
        return out

    # -- instruments --------------------------------------------------------

    def instrument(
        self, p: AgentId, q: AgentId, kind: str, params: dict, coin_maturity: int = 0,
        proposal_id: str | None = None, auto_accept: bool = True,
    ) -> list[TraceRecord]:
        spec = instrument_from_json(kind, params)
        plan = plan_instrument(spec, p, q, oracle=self.oracle, coin_maturity=coin_maturity)
        self.ledger(q)
        out = [self.mint(p, k, d) for k, d in plan.mints_p]
        out.append(self.propose(p, q, plan.swap.give, plan.swap.want, proposal_id,
                                plan=plan, instrument=kind, auto_accept=auto_accept))
        return out

    # -- escrow -------------------------------------------------------------

    def _escrow(self) -> EscrowAgent:
        if self.escrow is None:
            raise EscrowError("this world has no escrow agent")
        return self.escrow

    def open_escrow(self, actor: AgentId, kind: str, case_id: str | None = None, **params) -> TraceRecord:
        case = self._escrow().open(kind, case_id, **params)
        for who in (case.depositor, case.beneficiary):
            self.ledger(who)
        return self.record(actor, "escrow_open", {"case": case.case_id, "kind": case.kind.value, **case.params()})

    def deposit(self, actor: AgentId, case_id: str, lots, role: str | None = None) -> list[TraceRecord]:
        e = self._escrow()
        case = e.case(case_id)
        role = resolve_role(case, actor, role)
        led, transfers = e.deposit(self.ledger(actor), case_id, lots, role)
        self._in_transit = [t.bonds for t in transfers]
        self._set(actor, led)
        rec = self.record(
            actor, "escrow_deposit",
            {"case": case_id, "kind": case.kind.value, "role": role,
             "lots": [Lot.parse(l).as_list() for l in lots], **case.params()},
            {"ok": True, "status": case.status},
        )
        return [rec] + self._apply_transfers(transfers)

    def deposit_escrow(
        self, actor: AgentId, beneficiary: AgentId, lots, release_at: int, case_id: str | None = None
    ) -> list[TraceRecord]:
        """Open a time-release case and fund it in one step."""
        self.ledger(beneficiary)
        e = self._escrow()
        if not lots:
            raise EscrowError("deposit of zero lots")
        self.ledger(actor).holdings.select([Lot.parse(l) for l in lots])  # fail before opening
        case = e.open("TimedRelease", case_id, depositor=actor, beneficiary=beneficiary, release_at=release_at)
        out = [self.record(actor, "escrow_open", {"case": case.case_id, "kind": case.kind.value, **case.params()})]
        out += self.deposit(actor, case.case_id, lots, "bonds")
        out += self._apply_transfers(case.tick(e.local_date, self.oracle))
        return out

    def cancel(self, actor: AgentId, case_id: str) -> list[TraceRecord]:
        transfers = self._escrow().cancel(case_id, actor)
        self._in_transit = [t.bonds for t in transfers]
        rec = self.record(actor, "escrow_cancel", {"case": case_id}, {"ok": True, "status": "cancelled"})
        return [rec] + self._apply_transfers(transfers)

    def exercise(self, actor: AgentId, case_id: str) -> list[TraceRecord]:
        transfers = self._escrow().exercise(case_id, actor)
        self._in_transit = [t.bonds for t in transfers]
        rec = self.record(actor, "escrow_exercise", {"case": case_id}, {"ok": True, "status": "exercised"})
        return [rec] + self._apply_transfers(transfers)

    def adjudicate(self, case_id: str) -> list[TraceRecord]:
        e = self._escrow()
        transfers, owed = e.adjudicate(case_id, self.oracle)
        self._in_transit = [t.bonds for t in transfers]
        status = e.cases[case_id].status
        out = [self.record(e.agent_id, "escrow_adjudicate", {"case": case_id}, {"ok": True, "status": status})]
        out += self._apply_transfers(transfers)
        for ob in owed:
            # reimbursement swap {(q, ¢^k_{q,d}), (b, ∅)}
            out.append(self.mint(ob.debtor, ob.k, ob.maturity))
            debtor = self.ledgers[ob.debtor]
            bonds, rest = debtor.holdings.select([Lot(ob.debtor, ob.maturity, ob.k)])
            self._set(ob.debtor, replace(debtor, holdings=rest))
            creditor = self.ledgers[ob.creditor]
            self._set(ob.creditor, replace(creditor, holdings=creditor.holdings.plus(bonds)))
            out.append(self.record(ob.debtor, "reimburse",
                                   {"case": ob.case_id, "to": ob.creditor, "lots": lots_json(bonds)}))
        return out

    def draw(self, actor: AgentId, case_id: str, k: int) -> list[TraceRecord]:
        e = self._escrow()
        before = self.ledger(actor)
        led, transfers, draw = e.draw(case_id, before, k)
        self._in_transit = [t.bonds for t in transfers]
        self._set(actor, led)
        rec = self.record(
            actor, "credit_draw",
            {"case": case_id, "k": k},
            {"ok": True, "drawn": e.cases[case_id].drawn, "interest_dates": list(draw.interest_dates),
             "interest_each": draw.interest_each, "minted": led.next_serial - before.next_serial},
        )
        return [rec] + self._apply_transfers(transfers)

    def repay(self, actor: AgentId, case_id: str, k: int) -> TraceRecord:
        e = self._escrow()
        case = e.case(case_id)
        lender = case.depositor
        b, l = e.repay(case_id, self.ledger(actor), self.ledger(lender), k)
        self._set(actor, b)
        self._set(lender, l)
        return self.record(actor, "credit_repay", {"case": case_id, "k": k}, {"ok": True, "drawn": case.drawn})

    # -- chains -------------------------------------------------------------

    def chain_redeem(self, path: Sequence[AgentId]) -> list[TraceRecord]:
        _, done = chain_redeem(self.ledgers, path)  # all-or-nothing dry run
        out = []
        for r in done:
            h, i = apply_redeem(self.ledgers[r.holder], self.ledgers[r.issuer], r.coin, r.wanted)
            self._set(r.holder, h)
            self._set(r.issuer, i)
            cls = redeem_class(r.holder, r.issuer, r.coin.maturity, r.wanted.issuer, r.wanted.maturity)
            out.append(self.record(
                r.holder, "redeem",
                {"p": r.holder, "q": r.issuer, "x": [[r.coin.issuer, r.coin.maturity, 1]],
                 "y": [[r.wanted.issuer, r.wanted.maturity, 1]], "chain": list(path)},
                taken=cls,
            ))
        return out

    # -- scenario helpers --------------------------------------------------------

    def mark(self, name: str) -> TraceRecord:
        self.marks[name] = self.seq
        return self.record("world", "mark", {"name": name})
