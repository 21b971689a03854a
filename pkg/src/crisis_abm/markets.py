"""The three decentralised markets: credit, labour, goods.

All matching is search-based: each agent samples a handful of partners
at random and picks the best offer among them.  Random draws follow a
fixed order within each market so runs are reproducible given the seed.
"""

from __future__ import annotations

import math

import numpy as np

from . import _speedups
from .banking import (
    firm_leverage,
    grant_loan,
    lending_capacity,
    offer_rate,
    raise_interbank,
)
from .core import EconomyState
from .firms import desired_workforce

_EPS = 1e-9


def sample_partners(rng: np.random.Generator, n_rows: int, z: int, pool: int) -> np.ndarray:
    """Draw `z` distinct partner indices out of `pool` for each of `n_rows` agents."""
    if pool <= 0 or n_rows <= 0:
        return np.empty((n_rows, 0), dtype=np.int64)
    if z >= pool:
        return np.tile(np.arange(pool, dtype=np.int64), (n_rows, 1))
    if z == 1:
        return rng.integers(0, pool, size=(n_rows, 1)).astype(np.int64)
    if z == 2:
        a = rng.integers(0, pool, size=n_rows)
        b = rng.integers(0, pool - 1, size=n_rows)
        b += b >= a
        return np.stack([a, b], axis=1).astype(np.int64)
    keys = rng.random((n_rows, pool))
    return np.argpartition(keys, z - 1, axis=1)[:, :z].astype(np.int64)


# ---------------------------------------------------------------------------
# credit market


def credit_market(state: EconomyState) -> None:
    """Firms plan their workforce and fund payroll gaps with bank loans.

    Visiting order is random.  A firm short of payroll cash asks
    `n_applications` banks for quotes and takes the lowest rate.  If the
    real cost of that offer exceeds the contraction threshold the firm
    scales its request down to `contraction_factor` of the gap.  A bank
    that is leverage-constrained refuses outright; one that is only cash
    constrained first tries to fund itself on the interbank market.
    Whatever the outcome, the firm then recomputes its hiring plan from
    the funds it actually holds: wages are never promised beyond cash,
    so a cut-back or refused loan translates directly into fewer hires.
    """
    p = state.params
    rng = state.rng
    order = rng.permutation(p.n_firms)
    for fid in order:
        firm = state.firms[int(fid)]
        desired = desired_workforce(firm, p.productivity)
        firm.workforce_target = desired
        firm.planned_workforce = desired
        # payroll finance only: an overdrawn account offers no funds and
        # its arrears are not eligible for refinancing, so a firm that
        # cannot trade its way out of an overdraft is left to fail
        gap = p.wage * desired - max(firm.cash, 0.0)
        if gap <= _EPS:
            continue

        # banks are approached by institutional slot: a firm that knocks
        # on the door of a bank closed in an earlier crisis gets nothing,
        # so credit access degrades as the banking population thins out
        k = min(p.n_applications, p.n_banks)
        picks = rng.choice(p.n_banks, size=k, replace=False)
        noise = rng.random(k)
        leverage = firm_leverage(firm.debt(), firm.cash)
        offers = sorted(
            (offer_rate(p.refinancing_rate, p.rate_leverage_coeff, leverage, noise[i]),
             int(picks[i]))
            for i in range(k)
            if int(picks[i]) in state.banks
        )
        if not offers:
            state.record("loan_refused", firm.id, gap, bank=-1)
            affordable = math.floor(max(firm.cash, 0.0) / p.wage + _EPS)
            firm.workforce_target = min(desired, affordable)
            continue
        rate, bank_id = offers[0]
        lender = state.banks[bank_id]

        request = gap
        if rate - state.inflation_prev > p.contraction_threshold:
            request = p.contraction_factor * gap
            state.record("credit_contraction", firm.id, gap - request, rate=rate)

        if lender.equity <= 0:
            leverage_room = 0.0
        else:
            leverage_room = p.max_bank_leverage * lender.equity - lender.loan_assets()
        allowed = lending_capacity(lender, p.reserve_ratio, p.max_bank_leverage)
        if allowed < request - _EPS and leverage_room >= request - _EPS:
            # only cash is binding: refinance on the interbank market
            shortfall = request + p.reserve_ratio * lender.deposits_held - lender.cash
            raise_interbank(state, lender, shortfall)
            allowed = lending_capacity(lender, p.reserve_ratio, p.max_bank_leverage)

        if allowed >= request - _EPS:
            grant_loan(state, lender, firm.id, request, rate)
        else:
            state.record("loan_refused", firm.id, request, bank=bank_id)

        affordable = math.floor(max(firm.cash, 0.0) / p.wage + _EPS)
        firm.workforce_target = min(desired, affordable)


# ---------------------------------------------------------------------------
# labour market


def job_market(state: EconomyState) -> None:
    """Firms adjust staff to target, the unemployed apply, firms hire.

    Firms first lay off at random down to their target.  The unemployed
    then apply, in random order, to `n_applications` random firms each;
    firms hire from their application queue in arrival order until the
    target is met.
    """
    p = state.params
    rng = state.rng

    for firm in state.firms:
        excess = len(firm.workers) - firm.workforce_target
        if excess > 0:
            drop = rng.choice(len(firm.workers), size=excess, replace=False)
            for i in sorted((int(d) for d in drop), reverse=True):
                state.employer[firm.workers[i]] = -1
                del firm.workers[i]

    unemployed = np.flatnonzero(state.employer < 0)
    if unemployed.size == 0:
        return
    order = rng.permutation(unemployed.size)
    samples = sample_partners(rng, unemployed.size, p.n_applications, p.n_firms)

    queues: list[list[int]] = [[] for _ in range(p.n_firms)]
    for k in range(unemployed.size):
        worker = int(unemployed[order[k]])
        for f in samples[k]:
            queues[int(f)].append(worker)

    for firm in state.firms:
        vacancies = firm.workforce_target - len(firm.workers)
        if vacancies <= 0:
            continue
        for worker in queues[firm.id]:
            if vacancies == 0:
                break
            if state.employer[worker] >= 0:
                continue
            state.employer[worker] = firm.id
            firm.workers.append(worker)
            vacancies -= 1


def pay_wages(state: EconomyState) -> None:
    """Every employed worker receives the wage from their firm.

    Hiring was capped at what cash covers, so the bill normally clears.
    The debit still tolerates an overdraft: an account can open this
    phase already negative from unpaid debt service.
    """
    p = state.params
    w = p.wage
    for firm in state.firms:
        n = len(firm.workers)
        bill = w * n
        firm.wage_paid = bill
        if n == 0:
            continue
        firm.cash -= bill
        house = state.banks[firm.bank]
        house.cash -= bill
        house.deposits_held -= bill

    employed = np.flatnonzero(state.employer >= 0)
    if employed.size == 0:
        return
    state.hh_deposit[employed] += w
    counts = np.bincount(state.hh_bank[employed], minlength=p.n_banks)
    for b, c in enumerate(counts):
        if c > 0:
            bank = state.banks[b]
            bank.cash += w * int(c)
            bank.deposits_held += w * int(c)


# ---------------------------------------------------------------------------
# goods market


def goods_market(state: EconomyState) -> None:
    """Households shop with a fixed budget share of their deposits.

    Budgets are frozen when the market opens.  Buyers move in random
    order, each sampling `n_applications` firms and buying from the
    cheapest that still has stock.  Spending is settled through the
    banking system afterwards; leftover budget stays in the deposit
    (that is all the saving there is).
    """
    p = state.params
    rng = state.rng
    n_hh = state.n_households

    price = np.array([f.price for f in state.firms])
    inventory = np.array([f.inventory for f in state.firms])
    for firm in state.firms:
        firm.supply_at_open = firm.inventory

    budget = p.consumption_propensity * state.hh_deposit
    order = rng.permutation(n_hh).astype(np.int64)
    samples = sample_partners(rng, n_hh, p.n_applications, p.n_firms)
    spent = np.zeros(n_hh)
    revenue = np.zeros(p.n_firms)

    _speedups.goods_round(order, samples, budget, price, inventory, spent, revenue)

    state.hh_deposit -= spent
    outflow = np.bincount(state.hh_bank, weights=spent, minlength=p.n_banks)
    for b, out in enumerate(outflow):
        if out > 0:
            bank = state.banks[b]
            bank.cash -= float(out)
            bank.deposits_held -= float(out)

    for firm in state.firms:
        rev = float(revenue[firm.id])
        firm.revenue = rev
        firm.inventory = float(inventory[firm.id])
        firm.sold = firm.supply_at_open - firm.inventory
        if rev > 0:
            firm.cash += rev
            house = state.banks[firm.bank]
            house.cash += rev
            house.deposits_held += rev
        # the two market signals are exclusive by construction, with the
        # shortfall signal taking priority: a firm that planned for more
        # than it could produce and sold out the remnant has still seen
        # demand fall short of its plan.  Treating an empty shelf alone
        # as expansion evidence lets a credit-starved firm ratchet its
        # plan forever on the strength of selling two workers' output.
        had_supply = firm.supply_at_open > 1e-12
        firm.demand_short = firm.sold < firm.expected_demand - 1e-9
        firm.sold_all = (
            had_supply and firm.inventory <= 1e-9 and not firm.demand_short
        )
