"""The step loop that sequences markets, settlement and resolution.

One simulation step runs, in order: expectation updates, the credit
market, the labour market, production, wage payment, the goods market,
firm dividends, firm failures, loan service, bank dividends, liquidity
management, and bank resolution.  Random draws happen in this fixed
order, so a run is fully determined by its parameters and seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import firms as firm_ops
from .banking import pay_bank_dividends, repay_firm_loans, repay_interbank, restore_liquidity
from .core import EconomyState, Event, NoHealthyBank, firm_wealth, init_state
from .markets import credit_market, goods_market, job_market, pay_wages
from .metrics import MetricsRow, snapshot
from .params import MECHANISMS, Parameters
from .resolution import resolve_insolvencies


@dataclass(frozen=True, slots=True)
class RunConfig:
    params: Parameters
    mechanism: str = "pa"
    t_max: int = 1000
    seed: int = 0

    def describe(self) -> dict:
        return {
            "mechanism": self.mechanism,
            "t_max": self.t_max,
            "seed": self.seed,
            "params": self.params.as_dict(),
        }


@dataclass(slots=True)
class RunResult:
    config: RunConfig
    rows: list[MetricsRow]
    events: list[Event]
    t_end: int                      # last completed step
    t_exhausted: int | None         # step at which the banking system gave out
    termination: str | None         # why the run stopped early, if it did
    first_insolvency_t: int | None
    precrisis_firm_sizes: np.ndarray
    state: EconomyState | None = field(default=None, repr=False)

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def step(state: EconomyState, mechanism: str) -> MetricsRow:
    """Advance the economy by one step and return its metrics row.

    Raises :class:`NoHealthyBank` when resolution needs a solvent buyer
    and none is left; the caller decides how to wind the run down.
    """
    p = state.params
    state.t += 1
    events_start = len(state.events)
    for bank in state.banks.values():
        bank.interest_income = 0.0
        bank.interest_expense = 0.0
        bank.writeoffs = 0.0

    # 1. expectations adjust to last step's market outcome
    if state.t > 1:
        shocks = state.rng.random(p.n_firms)
        for firm in state.firms:
            firm_ops.update_expectations(
                firm, state.avg_price_prev, float(shocks[firm.id]),
                eta=p.adjust_scale, wage=p.wage, productivity=p.productivity,
            )

    # 2. credit market (banks may refinance on the interbank market)
    credit_market(state)

    # 3. labour market, then production
    job_market(state)
    for firm in state.firms:
        firm_ops.produce(firm, p.productivity)

    # 4. wages out, goods market, what is not spent stays saved
    pay_wages(state)
    goods_market(state)

    # 5. owners take dividends, then overdrawn firms are topped up or die
    for firm in state.firms:
        firm.interest_due = sum(l.rate * l.principal for l in firm.loans)
        firm_ops.pay_firm_dividends(state, firm)
        firm_ops.sweep_excess_cash(state, firm)
    for firm in state.firms:
        firm_ops.cover_overdraft_or_fail(state, firm)

    # 6. loan service: firms first, then interbank, then bank payouts
    for firm in state.firms:
        repay_firm_loans(state, firm.id)
    for b in state.live_banks():
        repay_interbank(state, b)
    for b in state.live_banks():
        pay_bank_dividends(state, state.banks[b])

    # 7. liquidity management and resolution of insolvent banks
    for b in state.live_banks():
        restore_liquidity(state, state.banks[b])
    resolve_insolvencies(state, mechanism)

    row = snapshot(state, events_start)
    state.avg_price_prev = row.avg_price
    state.inflation_prev = row.inflation
    return row


def run(config: RunConfig, keep_state: bool = True) -> RunResult:
    """Simulate until `t_max` or until the banking system is exhausted.

    The run stops early when at most one bank is left (no interbank
    market and no resolution is possible then) or when a resolution
    finds no solvent buyer.  The firm size snapshot taken each step
    until the first insolvency feeds the pre-crisis size distribution.
    """
    state = init_state(config.params, config.seed)
    rows: list[MetricsRow] = []
    termination = None
    t_exhausted = None
    first_insolvency = None
    sizes = firm_wealth(state)

    for _ in range(config.t_max):
        if first_insolvency is None:
            sizes = firm_wealth(state)
        try:
            row = step(state, config.mechanism)
        except NoHealthyBank:
            termination = "no_solvent_buyer"
            t_exhausted = state.t
            break
        rows.append(row)
        if first_insolvency is None and row.n_bank_failures > 0:
            first_insolvency = row.t
        if len(state.banks) <= 1:
            termination = "banking_system_exhausted"
            t_exhausted = state.t
            break

    return RunResult(
        config=config,
        rows=rows,
        events=state.events,
        t_end=rows[-1].t if rows else 0,
        t_exhausted=t_exhausted,
        termination=termination,
        first_insolvency_t=first_insolvency,
        precrisis_firm_sizes=sizes,
        state=state if keep_state else None,
    )


def run_single(
    params: Parameters, mechanism: str = "pa", seed: int = 0, t_max: int = 1000,
) -> RunResult:
    if mechanism not in MECHANISMS:
        raise ValueError(f"unknown mechanism {mechanism!r}")
    return run(RunConfig(params=params, mechanism=mechanism, t_max=t_max, seed=seed))
