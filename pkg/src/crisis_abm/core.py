"""Economy state and the double-entry money ledger.

Every unit of money in the model is a reserve balance sitting at some
bank.  Household deposits and firm operating accounts are *claims* on
their house bank; moving money between agents therefore always moves
reserve cash between banks (or within one bank) while keeping the sum
of all bank cash constant.  Bank equity is tracked explicitly and every
profit-and-loss event updates it, so the balance-sheet identity

    equity == cash + firm loans + interbank assets
              - deposits held - interbank liabilities

can be checked for each bank at any point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np

from .params import Parameters

AccountKind = Literal["hh", "firm", "bank"]
AccountRef = tuple[AccountKind, int]


class LedgerError(RuntimeError):
    """An operation would break the books (unknown account, bad amount)."""


class LedgerBroken(AssertionError):
    """A consistency check on the full state failed."""


class NoHealthyBank(RuntimeError):
    """A resolution step needs a solvent acquirer and none exists."""


@dataclass(slots=True, eq=False)
class Loan:
    """An amortising loan from a bank to a firm or to another bank.

    The same object sits in the lender's and the borrower's book, so
    loans compare by identity, not by value.
    """

    lender: int
    borrower: int
    principal: float
    rate: float
    interbank: bool = False


@dataclass(slots=True)
class Firm:
    id: int
    bank: int
    cash: float
    price: float
    expected_demand: float
    inventory: float = 0.0
    workers: list[int] = field(default_factory=list)
    loans: list[Loan] = field(default_factory=list)

    # per-step scratch, refreshed by the scheduler phases
    sold_all: bool = False
    demand_short: bool = False
    supply_at_open: float = 0.0
    sold: float = 0.0
    produced: float = 0.0
    revenue: float = 0.0
    wage_paid: float = 0.0
    interest_due: float = 0.0
    workforce_target: int = 0
    planned_workforce: int = 0

    def debt(self) -> float:
        return sum(l.principal for l in self.loans)


@dataclass(slots=True)
class Bank:
    id: int
    cash: float
    equity: float
    deposits_held: float
    firm_loans: list[Loan] = field(default_factory=list)
    ib_assets: list[Loan] = field(default_factory=list)
    ib_liabilities: list[Loan] = field(default_factory=list)
    ownership: dict[AccountRef, float] = field(default_factory=dict)

    # per-step income statement, reset by the scheduler
    interest_income: float = 0.0
    interest_expense: float = 0.0
    writeoffs: float = 0.0

    def loan_assets(self) -> float:
        return sum(l.principal for l in self.firm_loans) + sum(
            l.principal for l in self.ib_assets
        )

    def identity_gap(self) -> float:
        """Structural minus recorded equity; ~0 when the books are right."""
        structural = (
            self.cash
            + sum(l.principal for l in self.firm_loans)
            + sum(l.principal for l in self.ib_assets)
            - self.deposits_held
            - sum(l.principal for l in self.ib_liabilities)
        )
        return structural - self.equity


@dataclass(slots=True)
class Event:
    t: int
    kind: str
    agent: int
    magnitude: float
    info: dict | None = None


@dataclass(slots=True)
class EconomyState:
    params: Parameters
    rng: np.random.Generator
    t: int
    hh_deposit: np.ndarray   # balance per household, workers then firm owners
    hh_bank: np.ndarray      # house bank id per household
    employer: np.ndarray     # firm id per worker, -1 when unemployed
    firms: list[Firm]
    banks: dict[int, Bank]
    events: list[Event] = field(default_factory=list)
    avg_price_prev: float = 0.0
    inflation_prev: float = 0.0
    cash_total_init: float = 0.0

    @property
    def n_households(self) -> int:
        return self.hh_deposit.shape[0]

    def owner_of(self, firm_id: int) -> int:
        """Household index of a firm's owner (owners follow the workers)."""
        return self.params.n_workers + firm_id

    def live_banks(self) -> list[int]:
        return sorted(self.banks)

    def record(self, kind: str, agent: int, magnitude: float, **info) -> None:
        self.events.append(Event(self.t, kind, agent, magnitude, info or None))


# ---------------------------------------------------------------------------
# account primitives


def account_balance(state: EconomyState, ref: AccountRef) -> float:
    kind, idx = ref
    if kind == "hh":
        return float(state.hh_deposit[idx])
    if kind == "firm":
        return state.firms[idx].cash
    if kind == "bank":
        return state.banks[idx].cash
    raise LedgerError(f"unknown account kind {kind!r}")


def credit_account(state: EconomyState, ref: AccountRef, amount: float) -> None:
    """Add money to an account.  For banks this is P&L income (equity up)."""
    if amount < 0:
        raise LedgerError(f"credit of negative amount {amount}")
    kind, idx = ref
    if kind == "hh":
        state.hh_deposit[idx] += amount
        b = state.banks[int(state.hh_bank[idx])]
        b.cash += amount
        b.deposits_held += amount
    elif kind == "firm":
        firm = state.firms[idx]
        firm.cash += amount
        b = state.banks[firm.bank]
        b.cash += amount
        b.deposits_held += amount
    elif kind == "bank":
        b = state.banks[idx]
        b.cash += amount
        b.equity += amount
    else:
        raise LedgerError(f"unknown account kind {kind!r}")


def debit_account(
    state: EconomyState, ref: AccountRef, amount: float, allow_overdraft: bool = False
) -> None:
    """Remove money from an account.  For banks this is P&L expense."""
    if amount < 0:
        raise LedgerError(f"debit of negative amount {amount}")
    kind, idx = ref
    if kind == "hh":
        if not allow_overdraft and state.hh_deposit[idx] < amount - 1e-9:
            raise LedgerError(
                f"household {idx} has {state.hh_deposit[idx]:.6f}, cannot pay {amount:.6f}"
            )
        state.hh_deposit[idx] -= amount
        b = state.banks[int(state.hh_bank[idx])]
        b.cash -= amount
        b.deposits_held -= amount
    elif kind == "firm":
        firm = state.firms[idx]
        if not allow_overdraft and firm.cash < amount - 1e-9:
            raise LedgerError(
                f"firm {idx} has {firm.cash:.6f}, cannot pay {amount:.6f}"
            )
        firm.cash -= amount
        b = state.banks[firm.bank]
        b.cash -= amount
        b.deposits_held -= amount
    elif kind == "bank":
        b = state.banks[idx]
        b.cash -= amount
        b.equity -= amount
    else:
        raise LedgerError(f"unknown account kind {kind!r}")


def transfer(
    state: EconomyState,
    src: AccountRef,
    dst: AccountRef,
    amount: float,
    allow_overdraft: bool = False,
) -> None:
    """Move money between two accounts, conserving total bank cash."""
    if amount == 0:
        return
    debit_account(state, src, amount, allow_overdraft=allow_overdraft)
    credit_account(state, dst, amount)


def total_cash(state: EconomyState) -> float:
    """All money in the system: the sum of bank reserve balances."""
    return sum(b.cash for b in state.banks.values())


# ---------------------------------------------------------------------------
# consistency checks (used by tests and the optional paranoid mode)


def recomputed_deposits(state: EconomyState) -> dict[int, float]:
    """Deposits held per bank, rebuilt by scanning every account."""
    held = {b: 0.0 for b in state.banks}
    n_banks_max = max(state.banks) + 1
    hh_sum = np.bincount(
        state.hh_bank, weights=state.hh_deposit, minlength=n_banks_max
    )
    for b in held:
        held[b] = float(hh_sum[b])
    for firm in state.firms:
        held[firm.bank] += firm.cash
    return held


def verify_state(
    state: EconomyState, tol: float = 1e-9, allow_firm_overdraft: bool = False
) -> None:
    """Check conservation, per-bank identities and ownership normalisation.

    Raises :class:`LedgerBroken` with a description of the first violated
    condition.  Scale-aware: tolerances are relative to the total money
    stock so long runs do not trip on accumulated float noise.
    """
    scale = max(1.0, abs(state.cash_total_init))
    if abs(total_cash(state) - state.cash_total_init) > tol * scale:
        raise LedgerBroken(
            f"money not conserved: {total_cash(state)!r} vs {state.cash_total_init!r}"
        )
    held = recomputed_deposits(state)
    for bid, bank in state.banks.items():
        if abs(bank.deposits_held - held[bid]) > tol * scale:
            raise LedgerBroken(
                f"bank {bid} deposit ledger drift: recorded {bank.deposits_held!r}, "
                f"rescan {held[bid]!r}"
            )
        gap = bank.identity_gap()
        if abs(gap) > tol * scale:
            raise LedgerBroken(f"bank {bid} identity gap {gap!r}")
        if bank.ownership:
            s = sum(bank.ownership.values())
            if abs(s - 1.0) > 1e-9:
                raise LedgerBroken(f"bank {bid} ownership sums to {s!r}")
    if np.any(state.hh_deposit < -tol * scale):
        idx = int(np.argmin(state.hh_deposit))
        raise LedgerBroken(f"household {idx} deposit negative: {state.hh_deposit[idx]!r}")
    if not allow_firm_overdraft:
        for firm in state.firms:
            if firm.cash < -tol * scale:
                raise LedgerBroken(f"firm {firm.id} cash negative: {firm.cash!r}")


# ---------------------------------------------------------------------------
# initial conditions


def init_state(params: Parameters, seed: int) -> EconomyState:
    """Build the starting economy.

    Initial draws, in order: house bank of each household, house bank of
    each firm, one uniform price markup per firm.  Everything else is
    deterministic: every household starts with one wage of savings, every
    firm with one period's payroll for its share of the workforce, every
    bank with its share of deposits backed one-for-one by cash plus its
    starting equity.
    """
    params.validate()
    rng = np.random.default_rng(seed)
    nw, nf, nb = params.n_workers, params.n_firms, params.n_banks
    n_hh = nw + nf

    hh_bank = rng.integers(0, nb, size=n_hh).astype(np.int64)
    firm_bank = rng.integers(0, nb, size=nf).astype(np.int64)
    # narrow initial spread: price sorting happens gradually through the
    # adaptive rule, not as a day-one shakeout of the expensive half
    markup = rng.uniform(0.0, 0.04, size=nf)

    hh_deposit = np.full(n_hh, params.wage, dtype=np.float64)
    employer = np.full(nw, -1, dtype=np.int64)

    firm_cash = params.wage * nw / nf
    base_price = params.wage / params.productivity
    demand0 = nw * params.productivity / nf

    firms = [
        Firm(
            id=i,
            bank=int(firm_bank[i]),
            cash=firm_cash,
            price=base_price * (1.0 + markup[i]),
            expected_demand=demand0,
        )
        for i in range(nf)
    ]

    deposits = np.bincount(hh_bank, weights=hh_deposit, minlength=nb)
    deposits += np.bincount(firm_bank, minlength=nb) * firm_cash

    owner_share = 1.0 / nf
    banks: dict[int, Bank] = {}
    for b in range(nb):
        banks[b] = Bank(
            id=b,
            cash=float(deposits[b]) + params.bank_equity_init,
            equity=params.bank_equity_init,
            deposits_held=float(deposits[b]),
            ownership={("hh", nw + i): owner_share for i in range(nf)},
        )

    prices = np.array([f.price for f in firms])
    state = EconomyState(
        params=params,
        rng=rng,
        t=0,
        hh_deposit=hh_deposit,
        hh_bank=hh_bank,
        employer=employer,
        firms=firms,
        banks=banks,
        avg_price_prev=float(prices.mean()),
        inflation_prev=0.0,
    )
    state.cash_total_init = total_cash(state)
    return state


def firm_wealth(state: EconomyState) -> np.ndarray:
    """Firm size proxy: cash plus inventory valued at the posted price."""
    return np.array(
        [max(f.cash, 0.0) + f.inventory * f.price for f in state.firms]
    )
