"""Model parameters and the two policy settings used throughout.

All quantities are kept in nominal units of the single currency.  The
`Parameters` object is immutable so a simulation run cannot silently
drift away from the configuration it was launched with.
"""

from __future__ import annotations

from dataclasses import dataclass, replace, fields


class InvalidParameter(ValueError):
    """A parameter value is outside its admissible range."""


@dataclass(frozen=True, slots=True)
class Parameters:
    """Structural and policy parameters of the economy.

    The structural block is common to every experiment.  The policy block
    (dividend behaviour, credit contraction, consumption, resolution
    costs) comes in two named presets, selectable via :func:`for_setting`.
    """

    # -- structural ----------------------------------------------------
    n_banks: int = 20
    n_firms: int = 100
    n_workers: int = 700
    bank_equity_init: float = 10.0
    productivity: float = 0.1        # output per worker per step
    wage: float = 1.0
    n_applications: int = 2          # partners sampled per market visit
    reserve_ratio: float = 0.005     # minimum cash / deposits for banks
    max_bank_leverage: float = 100.0 # loan assets / equity ceiling
    repayment_rate: float = 0.05     # principal fraction amortised per step
    rate_leverage_coeff: float = 0.2 # slope of the borrower-risk markup
    contraction_threshold: float = 0.05  # real rate above which firms cut back
    interbank_rate: float = 0.0
    refinancing_rate: float = 0.021  # baseline cost of funds r0

    # -- policy setting ------------------------------------------------
    dividend_fraction: float = 0.25
    contraction_factor: float = 0.75   # share of the funding gap still borrowed
    consumption_propensity: float = 0.85
    recap_overhead: float = 1.0        # fresh equity target after a rescue
    insurance_exemption: float = 0.0   # balances below this share of the max are spared

    # -- behavioural fill-ins (not pinned by the published tables) ------
    adjust_scale: float = 0.08         # eta, size of price/quantity revisions
    regime_tolerance: float = 0.002    # dead band when classifying rate regimes
    working_capital_bills: float = 1.0 # payrolls a debt-free firm keeps
                                       # before retiring debt early or
                                       # paying cash to its owner
    indebted_float_bills: float = 2.0  # same cap while loans are on the
                                       # books; extra room covers service

    def validate(self) -> None:
        positive = [
            "n_banks", "n_firms", "n_workers", "productivity", "wage",
            "n_applications", "max_bank_leverage", "repayment_rate",
        ]
        for name in positive:
            if getattr(self, name) <= 0:
                raise InvalidParameter(f"{name} must be positive")
        nonneg = [
            "bank_equity_init", "reserve_ratio", "rate_leverage_coeff",
            "contraction_threshold", "interbank_rate", "refinancing_rate",
            "recap_overhead", "adjust_scale", "regime_tolerance",
            "working_capital_bills", "indebted_float_bills",
        ]
        for name in nonneg:
            if getattr(self, name) < 0:
                raise InvalidParameter(f"{name} must be >= 0")
        if self.n_banks < 2:
            raise InvalidParameter("n_banks must be >= 2 for interbank and resolution to work")
        if not 0.0 < self.consumption_propensity <= 1.0:
            raise InvalidParameter("consumption_propensity must be in (0, 1]")
        if not 0.0 <= self.dividend_fraction <= 1.0:
            raise InvalidParameter("dividend_fraction must be in [0, 1]")
        if not 0.0 <= self.contraction_factor <= 1.0:
            raise InvalidParameter("contraction_factor must be in [0, 1]")
        if not 0.0 <= self.insurance_exemption < 1.0:
            raise InvalidParameter("insurance_exemption must be in [0, 1)")

    def with_overrides(self, **kwargs) -> "Parameters":
        p = replace(self, **kwargs)
        p.validate()
        return p

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


# Policy presets.  Setting 1 is the benign configuration, setting 2 the
# stressed one (higher payouts, tighter credit contraction, lower
# consumption, cheaper rescues, deposit-insurance style exemption).
SETTINGS: dict[int, dict[str, float]] = {
    1: dict(
        dividend_fraction=0.25,
        contraction_factor=0.75,
        consumption_propensity=0.85,
        recap_overhead=1.0,
        insurance_exemption=0.0,
    ),
    2: dict(
        dividend_fraction=0.5,
        contraction_factor=0.8,
        consumption_propensity=0.8,
        recap_overhead=0.5,
        insurance_exemption=0.05,
    ),
}


def for_setting(setting: int, **overrides) -> Parameters:
    """Build a parameter set for one of the named policy settings."""
    if setting not in SETTINGS:
        raise InvalidParameter(f"unknown setting {setting!r}, expected one of {sorted(SETTINGS)}")
    merged = dict(SETTINGS[setting])
    merged.update(overrides)
    p = Parameters(**merged)
    p.validate()
    return p


MECHANISMS = ("pa", "bailout", "bailin")
