"""Firm behaviour: expectations, production, dividends, failure.

Firms are adaptive: after each trading round they compare how they fared
against the market and revise either their posted price or their demand
expectation, never both in the same step.
"""

from __future__ import annotations

import math

from .banking import prepay_firm_debt
from .core import EconomyState, Firm, credit_account, debit_account, transfer

_EPS = 1e-9


def update_expectations(
    firm: Firm, avg_price: float, shock: float, *, eta: float, wage: float,
    productivity: float,
) -> None:
    """Revise price or expected demand from last round's market signal.

    `shock` is a uniform draw in [0, 1); `eta` scales the revision.  A firm
    that sold out while pricing below average raises its price, one that
    sold out at or above average plans for more demand.  A firm left with
    unsold stock cuts its price when above average (never below unit cost
    `wage/productivity`), otherwise trims its demand expectation (never
    below one worker's output).

    Expected demand can run far ahead of what the firm will ever be able
    to staff; that is deliberate.  The plan only turns into spending
    through the credit market, which finances no more than a one-step
    hiring increment, so an inflated expectation costs nothing until the
    firm actually grows into it.
    """
    up = 1.0 + eta * shock
    down = 1.0 - eta * shock
    if firm.sold_all:
        if firm.price < avg_price:
            firm.price *= up
        else:
            firm.expected_demand *= up
    elif firm.demand_short:
        if firm.price > avg_price:
            firm.price = max(firm.price * down, wage / productivity)
        else:
            firm.expected_demand = max(firm.expected_demand * down, productivity)


def desired_workforce(firm: Firm, productivity: float) -> int:
    """Workers needed to produce the expected demand (rounded up)."""
    if firm.expected_demand <= 0:
        return 0
    return max(0, math.ceil(firm.expected_demand / productivity - _EPS))


def produce(firm: Firm, productivity: float) -> float:
    """Run production: each worker adds `productivity` units of output."""
    out = productivity * len(firm.workers)
    firm.produced = out
    firm.inventory += out
    return out


def pay_firm_dividends(state: EconomyState, firm: Firm) -> float:
    """Distribute a fraction of positive operating profit to the owner.

    Profit is revenue minus the wage bill minus the interest scheduled on
    the current loan book.  The payout is capped by the cash actually on
    hand so the operating account is never overdrawn by a dividend.
    """
    profit = firm.revenue - firm.wage_paid - firm.interest_due
    if profit <= 0 or firm.cash <= 0:
        return 0.0
    payout = min(state.params.dividend_fraction * profit, firm.cash)
    transfer(state, ("firm", firm.id), ("hh", state.owner_of(firm.id)), payout)
    return payout


def sweep_excess_cash(state: EconomyState, firm: Firm) -> float:
    """Apply cash above the firm's working-capital floor.

    A firm needs only a float against its payroll; cash beyond that has
    no operating use, and left in the till it would pile up as a
    corporate hoard that decouples the firm from the credit market and
    starves households of purchasing power.  While loans are on the
    books the excess retires principal early: a leveraged firm paying
    its owner while the debt compounds is how shrinking firms get
    trapped, the legacy debt from their overbuilt phase rolling forward
    at interest until the overdraft check kills them.  Only once the
    books are clean does the surplus go to the owner.

    The float is sized on the payroll the firm planned this morning,
    not on the staff it found: money borrowed for positions the labour
    market failed to fill must stay in the till for next morning's
    attempt.  Paying it out would have the owner strip-mining loan
    proceeds through a firm that never gets to spend them.
    """
    if firm.cash <= 0:
        return 0.0
    p = state.params
    bill = p.wage * max(len(firm.workers), firm.planned_workforce)
    moved = 0.0
    if firm.loans:
        floor = p.indebted_float_bills * max(bill, p.wage)
        excess = firm.cash - floor
        if excess > _EPS:
            moved = prepay_firm_debt(state, firm, excess)
        if firm.loans:
            return moved
    floor = p.working_capital_bills * max(bill, p.wage)
    excess = firm.cash - floor
    if excess <= _EPS:
        return moved
    transfer(state, ("firm", firm.id), ("hh", state.owner_of(firm.id)), excess)
    return moved + excess


def resolve_firm_bankruptcy(state: EconomyState, firm: Firm) -> None:
    """Liquidate an overdrawn firm and hand losses to its creditors.

    The owner's remaining deposit is paid to the lending banks pro rata
    to outstanding principal; whatever is left of each loan is written
    off against the lender's equity.  The house bank absorbs the negative
    operating balance.  The workforce is dissolved and the firm is
    respawned as an empty shell with the same identity and house bank.
    """
    overdraft = -firm.cash
    if overdraft < -_EPS:
        raise ValueError(f"firm {firm.id} is not overdrawn: cash {firm.cash}")
    owner = state.owner_of(firm.id)
    recovered = 0.0

    total_claims = firm.debt()
    if total_claims > _EPS and state.hh_deposit[owner] > _EPS:
        pot = float(state.hh_deposit[owner])
        for loan in firm.loans:
            pay = min(pot * loan.principal / total_claims, loan.principal)
            if pay <= 0:
                continue
            transfer(state, ("hh", owner), ("bank", loan.lender), pay)
            lender = state.banks[loan.lender]
            lender.equity -= pay          # cash in, claim extinguished below
            loan.principal -= pay
            recovered += pay

    written_off = 0.0
    for loan in firm.loans:
        if loan.principal > _EPS:
            lender = state.banks[loan.lender]
            lender.equity -= loan.principal
            lender.writeoffs += loan.principal
            written_off += loan.principal
        state.banks[loan.lender].firm_loans.remove(loan)
    firm.loans.clear()

    if overdraft > _EPS:
        # the account sits at -overdraft; forgiving it raises deposits_held
        # back to what the scan of accounts will show and costs the bank equity
        house = state.banks[firm.bank]
        house.equity -= overdraft
        house.writeoffs += overdraft
        house.deposits_held += overdraft
        firm.cash = 0.0
        written_off += overdraft

    for w in firm.workers:
        state.employer[w] = -1
    firm.workers.clear()

    state.record(
        "firm_bankruptcy", firm.id, written_off,
        recovered=recovered, overdraft=overdraft,
    )
    respawn_firm(state, firm)


def respawn_firm(state: EconomyState, firm: Firm) -> None:
    """Restart a liquidated firm at the population average.

    Price and expected demand are set to the mean over the other firms;
    if the firm is alone in the economy its own last values are kept.
    """
    others = [f for f in state.firms if f.id != firm.id]
    if others:
        firm.price = sum(f.price for f in others) / len(others)
        firm.expected_demand = sum(f.expected_demand for f in others) / len(others)
    firm.cash = 0.0
    firm.inventory = 0.0
    firm.sold_all = False
    firm.demand_short = False
    firm.supply_at_open = 0.0
    firm.sold = 0.0
    firm.produced = 0.0
    firm.revenue = 0.0
    firm.wage_paid = 0.0
    firm.interest_due = 0.0
    firm.workforce_target = 0
    firm.planned_workforce = 0


def cover_overdraft_or_fail(state: EconomyState, firm: Firm) -> bool:
    """Let the owner top up a negative operating balance if they can.

    Returns True when the firm survives.  The owner injects the missing
    amount only when their whole deposit covers it; otherwise the firm is
    liquidated via :func:`resolve_firm_bankruptcy`.
    """
    if firm.cash >= -_EPS:
        if firm.cash < 0:
            firm.cash = 0.0  # scrub float dust
        return True
    shortfall = -firm.cash
    owner = state.owner_of(firm.id)
    if state.hh_deposit[owner] >= shortfall - _EPS:
        transfer(state, ("hh", owner), ("firm", firm.id), min(shortfall, float(state.hh_deposit[owner])))
        if firm.cash < 0:
            firm.cash = 0.0
        return True
    resolve_firm_bankruptcy(state, firm)
    return False
