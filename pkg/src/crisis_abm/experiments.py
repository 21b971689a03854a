"""Multi-seed experiments: ensembles, sweeps and mechanism comparisons.

Comparisons across resolution mechanisms are paired by seed: every
mechanism replays the same initial economy and the same shock stream.
Observables are averaged over the crisis window of each run, which
opens at the run's first bank insolvency and closes at the step where
the matching liquidation-only run exhausted its banking system (or at
a fixed cap).  This keeps the comparison on the span where all
mechanisms still had a functioning system to manage.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _speedups
from .metrics import FitResult, classify_regime, okun_fit, phillips_fit, zipf_exponent
from .params import MECHANISMS, Parameters
from .scheduler import RunConfig, RunResult, run

OBSERVABLES = (
    "unemployment", "output", "credit_volume", "nominal_rate", "inflation",
    "hole_mean",
)


@dataclass(slots=True)
class CompactRun:
    """The transportable essence of one run: per-step series plus markers."""

    seed: int
    mechanism: str
    r0: float
    t: np.ndarray
    output: np.ndarray
    unemployment: np.ndarray
    inflation: np.ndarray
    nominal_rate: np.ndarray
    credit_volume: np.ndarray
    n_banks: np.ndarray
    n_bank_failures: np.ndarray
    bank_hole_total: np.ndarray
    n_firm_failures: np.ndarray
    first_insolvency_t: int | None
    t_exhausted: int | None
    termination: str | None
    precrisis_firm_sizes: np.ndarray

    @classmethod
    def from_result(cls, result: RunResult, r0: float) -> "CompactRun":
        return cls(
            seed=result.config.seed,
            mechanism=result.config.mechanism,
            r0=r0,
            t=result.series("t").astype(np.int64),
            output=result.series("output"),
            unemployment=result.series("unemployment"),
            inflation=result.series("inflation"),
            nominal_rate=result.series("nominal_rate"),
            credit_volume=result.series("credit_volume"),
            n_banks=result.series("n_banks").astype(np.int64),
            n_bank_failures=result.series("n_bank_failures").astype(np.int64),
            bank_hole_total=result.series("bank_hole_total"),
            n_firm_failures=result.series("n_firm_failures").astype(np.int64),
            first_insolvency_t=result.first_insolvency_t,
            t_exhausted=result.t_exhausted,
            termination=result.termination,
            precrisis_firm_sizes=result.precrisis_firm_sizes,
        )


def window_means(run_: CompactRun, end_cap: int) -> dict[str, float] | None:
    """Average the observables over [first insolvency, end_cap].

    Returns None when the run never saw an insolvency inside the cap, in
    which case the seed contributes nothing to crisis statistics.
    """
    if run_.first_insolvency_t is None:
        return None
    lo = run_.first_insolvency_t
    if lo > end_cap:
        return None
    mask = (run_.t >= lo) & (run_.t <= end_cap)
    if not mask.any():
        return None
    failures = int(run_.n_bank_failures[mask].sum())
    holes = float(run_.bank_hole_total[mask].sum())
    return {
        "unemployment": float(run_.unemployment[mask].mean()),
        "output": float(run_.output[mask].mean()),
        "credit_volume": float(run_.credit_volume[mask].mean()),
        "nominal_rate": float(run_.nominal_rate[mask].mean()),
        "inflation": float(run_.inflation[mask].mean()),
        "hole_mean": holes / failures if failures else float("nan"),
    }


def run_cell(
    params: Parameters, r0: float, mechanism: str, seed: int, t_max: int,
) -> CompactRun:
    """One (rate, mechanism, seed) cell, compacted for transport."""
    p = params.with_overrides(refinancing_rate=r0)
    result = run(RunConfig(params=p, mechanism=mechanism, t_max=t_max, seed=seed),
                 keep_state=False)
    return CompactRun.from_result(result, r0)


def _run_cell_star(args) -> CompactRun:
    return run_cell(*args)


def worker_count(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, threads)
    env = os.environ.get("CRISIS_ABM_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return os.cpu_count() or 1


def run_many(
    tasks: list[tuple[Parameters, float, str, int, int]], threads: int | None = None,
) -> list[CompactRun]:
    """Run a batch of cells, in parallel when more than one worker is allowed."""
    n = worker_count(threads)
    if n <= 1 or len(tasks) <= 1:
        _speedups.warmup()
        return [run_cell(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(n, len(tasks))) as pool:
        return list(pool.map(_run_cell_star, tasks, chunksize=max(1, len(tasks) // (4 * n))))


@dataclass(slots=True)
class CellStats:
    """Seed-aggregated crisis statistics for one (rate, mechanism) cell."""

    r0: float
    mechanism: str
    n_seeds: int                      # seeds that produced a crisis window
    per_seed: dict[str, np.ndarray]   # aligned by seed index, NaN when no window
    mean: dict[str, float] = field(default_factory=dict)
    stderr: dict[str, float] = field(default_factory=dict)

    def finalise(self) -> None:
        for name, vals in self.per_seed.items():
            good = vals[~np.isnan(vals)]
            self.mean[name] = float(good.mean()) if good.size else float("nan")
            self.stderr[name] = (
                float(good.std(ddof=1) / np.sqrt(good.size)) if good.size > 1 else float("nan")
            )


@dataclass(frozen=True, slots=True)
class SweepSpec:
    params: Parameters
    r0_values: tuple[float, ...]
    mechanisms: tuple[str, ...] = MECHANISMS
    n_seeds: int = 50
    base_seed: int = 0
    t_max: int = 1000
    window_cap: int = 1000

    def seeds(self) -> list[int]:
        return [self.base_seed + k for k in range(self.n_seeds)]


@dataclass(slots=True)
class SweepResult:
    spec: SweepSpec
    cells: dict[tuple[float, str], CellStats]
    regimes: dict[float, str]

    def table_rows(self) -> list[dict]:
        """Flat rows for serialisation, with cross-mechanism differences."""
        rows = []
        for r0 in self.spec.r0_values:
            present = [m for m in self.spec.mechanisms if (r0, m) in self.cells]
            for mech in present:
                cell = self.cells[(r0, mech)]
                row = {
                    "r0": r0,
                    "mechanism": mech,
                    "regime": self.regimes.get(r0, ""),
                    "n_seeds": cell.n_seeds,
                }
                for name in OBSERVABLES:
                    row[name] = cell.mean.get(name, float("nan"))
                    row[f"{name}_se"] = cell.stderr.get(name, float("nan"))
                    across = [
                        self.cells[(r0, m)].mean.get(name, float("nan"))
                        for m in present
                    ]
                    across = [v for v in across if not np.isnan(v)]
                    base = float(np.mean(across)) if across else float("nan")
                    row[f"{name}_delta"] = row[name] - base
                rows.append(row)
        return rows


def sweep(spec: SweepSpec, threads: int | None = None) -> SweepResult:
    """Run the full grid and aggregate crisis-window statistics.

    The liquidation-only mechanism anchors the comparison window for
    each (rate, seed) pair; regimes are classified from its window
    averages.  When it is not part of the grid, the first mechanism
    listed plays that role instead.
    """
    seeds = spec.seeds()
    tasks = [
        (spec.params, r0, mech, seed, spec.t_max)
        for r0 in spec.r0_values
        for mech in spec.mechanisms
        for seed in seeds
    ]
    runs = run_many(tasks, threads)
    by_key = {(r.r0, r.mechanism, r.seed): r for r in runs}
    anchor = "pa" if "pa" in spec.mechanisms else spec.mechanisms[0]

    cells: dict[tuple[float, str], CellStats] = {}
    regimes: dict[float, str] = {}
    for r0 in spec.r0_values:
        # the anchor's exhaustion step bounds every mechanism's window
        caps = {}
        for k, seed in enumerate(seeds):
            a = by_key[(r0, anchor, seed)]
            caps[seed] = min(
                spec.window_cap,
                a.t_exhausted if a.t_exhausted is not None else spec.window_cap,
            )
        for mech in spec.mechanisms:
            per_seed = {name: np.full(len(seeds), np.nan) for name in OBSERVABLES}
            n_used = 0
            for k, seed in enumerate(seeds):
                means = window_means(by_key[(r0, mech, seed)], caps[seed])
                if means is None:
                    continue
                n_used += 1
                for name in OBSERVABLES:
                    per_seed[name][k] = means[name]
            cell = CellStats(r0=r0, mechanism=mech, n_seeds=n_used, per_seed=per_seed)
            cell.finalise()
            cells[(r0, mech)] = cell
        base = cells[(r0, anchor)]
        regimes[r0] = classify_regime(
            base.mean["nominal_rate"], base.mean["inflation"],
            spec.params.contraction_threshold, spec.params.regime_tolerance,
        )
    return SweepResult(spec=spec, cells=cells, regimes=regimes)


def paired_pvalue(a: np.ndarray, b: np.ndarray, alternative: str = "less") -> float:
    """Paired t-test on seed-matched samples, NaN pairs dropped."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ok = ~(np.isnan(a) | np.isnan(b))
    if ok.sum() < 3:
        return 1.0
    res = stats.ttest_rel(a[ok], b[ok], alternative=alternative)
    return float(res.pvalue)


# ---------------------------------------------------------------------------
# stylized-fact battery

ZIPF_RANGE = (0.5, 1.5)
P_LEVEL = 0.05
PASS_FRACTION = 0.6
_MIN_WINDOW = 30


@dataclass(slots=True)
class FactCheck:
    """One seed's pre-crisis regularities and their pass/fail verdicts."""

    seed: int
    window_len: int
    zipf: FitResult
    okun: FitResult
    phillips: FitResult

    @property
    def zipf_ok(self) -> bool:
        return ZIPF_RANGE[0] <= self.zipf.slope <= ZIPF_RANGE[1]

    @property
    def okun_ok(self) -> bool:
        return self.okun.slope < 0 and self.okun.p_value < P_LEVEL

    @property
    def phillips_ok(self) -> bool:
        return self.phillips.slope < 0 and self.phillips.p_value < P_LEVEL


@dataclass(slots=True)
class StylizedFactsReport:
    checks: list[FactCheck]

    @property
    def n_seeds(self) -> int:
        return len(self.checks)

    def counts(self) -> dict[str, int]:
        return {
            "zipf": sum(c.zipf_ok for c in self.checks),
            "okun": sum(c.okun_ok for c in self.checks),
            "phillips": sum(c.phillips_ok for c in self.checks),
        }

    @property
    def passed(self) -> bool:
        need = PASS_FRACTION * self.n_seeds
        return self.n_seeds > 0 and all(v >= need for v in self.counts().values())

    def lines(self) -> list[str]:
        need = int(np.ceil(PASS_FRACTION * self.n_seeds))
        out = []
        for name, count in self.counts().items():
            verdict = "ok" if count >= need else "FAIL"
            out.append(f"{name:9s} {count}/{self.n_seeds} seeds (need {need}): {verdict}")
        out.append("battery " + ("PASSED" if self.passed else "FAILED"))
        return out

    def describe(self) -> dict:
        return {
            "n_seeds": self.n_seeds,
            "pass_fraction_required": PASS_FRACTION,
            "counts": self.counts(),
            "passed": self.passed,
            "per_seed": [
                {
                    "seed": c.seed,
                    "window_len": c.window_len,
                    "zipf_exponent": c.zipf.slope,
                    "zipf_ok": c.zipf_ok,
                    "okun_slope": c.okun.slope,
                    "okun_p": c.okun.p_value,
                    "okun_ok": c.okun_ok,
                    "phillips_slope": c.phillips.slope,
                    "phillips_p": c.phillips.p_value,
                    "phillips_ok": c.phillips_ok,
                }
                for c in self.checks
            ],
        }


def check_facts(run_: CompactRun, burn_in: int = 20) -> FactCheck:
    """Fit the three regularities on one run's pre-crisis span."""
    end = run_.first_insolvency_t if run_.first_insolvency_t is not None else np.inf
    mask = (run_.t >= burn_in) & (run_.t < end)
    n = int(mask.sum())
    if n < _MIN_WINDOW:
        dead = FitResult(float("nan"), 1.0, n)
        return FactCheck(run_.seed, n, zipf_exponent(run_.precrisis_firm_sizes), dead, dead)
    return FactCheck(
        seed=run_.seed,
        window_len=n,
        zipf=zipf_exponent(run_.precrisis_firm_sizes),
        okun=okun_fit(run_.output[mask], run_.unemployment[mask]),
        phillips=phillips_fit(run_.inflation[mask], run_.unemployment[mask]),
    )


def stylized_facts(
    params: Parameters,
    seeds: list[int],
    t_max: int = 1000,
    threads: int | None = None,
    burn_in: int = 20,
) -> StylizedFactsReport:
    """Check the pre-crisis regularities across an ensemble of seeds."""
    tasks = [(params, params.refinancing_rate, "pa", seed, t_max) for seed in seeds]
    runs = run_many(tasks, threads)
    return StylizedFactsReport(checks=[check_facts(r, burn_in) for r in runs])
