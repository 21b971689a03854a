"""Agent-based model of a closed economy with failing banks.

Households work, shop and save; firms hire, produce and borrow; banks
lend, fund each other overnight and occasionally go under.  Three
resolution mechanisms for insolvent banks (liquidation into the
survivors, a tax-funded bail-out, a creditor bail-in) can be simulated
on identical shock streams and compared.
"""

from .core import EconomyState, init_state, total_cash, verify_state
from .experiments import SweepSpec, stylized_facts, sweep
from .params import MECHANISMS, Parameters, for_setting
from .scheduler import RunConfig, RunResult, run, run_single, step

__all__ = [
    "EconomyState",
    "MECHANISMS",
    "Parameters",
    "RunConfig",
    "RunResult",
    "SweepSpec",
    "for_setting",
    "init_state",
    "run",
    "run_single",
    "step",
    "stylized_facts",
    "sweep",
    "total_cash",
    "verify_state",
]
