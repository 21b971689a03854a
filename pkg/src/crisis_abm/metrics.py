"""Per-step observables and the statistics used to validate runs."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
from scipy import stats

from .banking import firm_loan_volume, nominal_loan_rate
from .core import EconomyState


@dataclass(slots=True)
class MetricsRow:
    """One line of the simulation output, recorded at the end of a step."""

    t: int
    output: float            # value of this step's production at posted prices
    unemployment: float      # jobless share of the worker population
    avg_price: float         # demand-weighted average posted price
    inflation: float         # relative change of avg_price since last step
    nominal_rate: float      # volume-weighted rate on outstanding firm loans
    credit_volume: float     # outstanding firm-loan principal
    n_banks: int
    n_firm_failures: int
    n_bank_failures: int
    bank_hole_total: float   # combined equity shortfall of banks resolved this step

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))


FIELD_NAMES = tuple(f.name for f in fields(MetricsRow))


def average_price(state: EconomyState) -> float:
    """Posted prices weighted by each firm's expected demand."""
    num = 0.0
    den = 0.0
    for f in state.firms:
        num += f.price * f.expected_demand
        den += f.expected_demand
    return num / den if den > 0 else 0.0


def snapshot(state: EconomyState, events_start: int) -> MetricsRow:
    """Collect the row for the step that just finished.

    `events_start` marks where this step's events begin in the state's
    event log, so failure counts cover exactly one step.
    """
    p = state.params
    avg_p = average_price(state)
    inflation = (
        avg_p / state.avg_price_prev - 1.0 if state.avg_price_prev > 0 else 0.0
    )
    employed = int(np.count_nonzero(state.employer >= 0))
    output = sum(f.produced * f.price for f in state.firms)

    firm_failures = 0
    bank_failures = 0
    hole_total = 0.0
    for ev in state.events[events_start:]:
        if ev.kind == "firm_bankruptcy":
            firm_failures += 1
        elif ev.kind == "bank_resolved":
            bank_failures += 1
            hole_total += ev.magnitude

    return MetricsRow(
        t=state.t,
        output=output,
        unemployment=1.0 - employed / p.n_workers,
        avg_price=avg_p,
        inflation=inflation,
        nominal_rate=nominal_loan_rate(state),
        credit_volume=firm_loan_volume(state),
        n_banks=len(state.banks),
        n_firm_failures=firm_failures,
        n_bank_failures=bank_failures,
        bank_hole_total=hole_total,
    )


def classify_regime(
    nominal_rate: float, inflation: float, threshold: float, tol: float = 0.002
) -> str:
    """Place the credit market relative to the contraction threshold.

    "low": real rates comfortably below the threshold, credit flows
    freely.  "high": comfortably above, credit is contracted.  Within
    `tol` of the threshold the economy sits at the edge ("critical").
    """
    real = nominal_rate - inflation
    if real < threshold - tol:
        return "low"
    if real > threshold + tol:
        return "high"
    return "critical"


@dataclass(slots=True)
class FitResult:
    slope: float
    p_value: float
    n: int


def zipf_exponent(sizes: np.ndarray, top_fraction: float = 0.1) -> FitResult:
    """Rank-size fit over the upper tail of a size distribution.

    Sizes are ranked descending and log(size) is regressed on log(rank)
    over the top `top_fraction` share; the returned slope is negated so
    a unit value corresponds to the classic rank-size law.
    """
    sizes = np.asarray(sizes, dtype=float)
    sizes = sizes[sizes > 0]
    if sizes.size < 3:
        return FitResult(float("nan"), 1.0, int(sizes.size))
    k = max(3, int(np.ceil(top_fraction * sizes.size)))
    top = np.sort(sizes)[::-1][:k]
    ranks = np.arange(1, k + 1, dtype=float)
    fit = stats.linregress(np.log(ranks), np.log(top))
    return FitResult(-float(fit.slope), float(fit.pvalue), k)


def okun_fit(output: np.ndarray, unemployment: np.ndarray) -> FitResult:
    """Output growth against the change in unemployment."""
    output = np.asarray(output, dtype=float)
    unemployment = np.asarray(unemployment, dtype=float)
    ok = output[:-1] > 0
    growth = (output[1:][ok] - output[:-1][ok]) / output[:-1][ok]
    du = np.diff(unemployment)[ok]
    if growth.size < 3 or np.allclose(du, du[0]):
        return FitResult(float("nan"), 1.0, int(growth.size))
    fit = stats.linregress(du, growth)
    return FitResult(float(fit.slope), float(fit.pvalue), int(growth.size))


def phillips_fit(inflation: np.ndarray, unemployment: np.ndarray) -> FitResult:
    """Inflation against the unemployment rate."""
    inflation = np.asarray(inflation, dtype=float)
    unemployment = np.asarray(unemployment, dtype=float)
    if inflation.size < 3 or np.allclose(unemployment, unemployment[0]):
        return FitResult(float("nan"), 1.0, int(inflation.size))
    fit = stats.linregress(unemployment, inflation)
    return FitResult(float(fit.slope), float(fit.pvalue), int(inflation.size))
