"""Command line interface.

Verbs:

* ``run``      one trajectory, emitted as a per-step table
* ``sweep``    a grid of rates x mechanisms x seeds, aggregated
* ``compare``  the three mechanisms on one seed, side by side
* ``validate`` the stylized-fact battery; non-zero exit on failure

Worker processes for sweeps are capped by ``CRISIS_ABM_THREADS`` (or
``--threads``); ``CRISIS_ABM_NO_JIT=1`` disables the compiled kernel.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import output
from .config import ConfigError, build_job, load_config
from .experiments import stylized_facts, sweep as run_sweep
from .params import MECHANISMS
from .scheduler import run


def _parse_rates(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad r0 list {text!r}") from exc


def _add_common(p: argparse.ArgumentParser, *, rates: bool = True) -> None:
    p.add_argument("--config", help="YAML configuration file")
    p.add_argument("--setting", type=int, choices=(1, 2), help="policy preset")
    if rates:
        p.add_argument("--r0", type=_parse_rates, metavar="R[,R...]",
                       help="refinancing rate(s)")
    p.add_argument("--seed", type=int, help="first seed")
    p.add_argument("--seeds", type=int, help="number of seeds")
    p.add_argument("--t-max", type=int, dest="t_max", help="steps per run")
    p.add_argument("--threads", type=int, help="worker processes")
    p.add_argument("--out", help="output path ('-' or omitted: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crisis-abm",
        description="Closed macro-financial economy with failing banks "
                    "and three resolution mechanisms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one trajectory")
    _add_common(p)
    p.add_argument("--mechanism", choices=MECHANISMS, help="resolution mechanism")
    p.add_argument("--events", help="also write the event stream (JSON lines)")
    p.add_argument("--plot-data", dest="plot_data", help="directory for per-figure data")

    p = sub.add_parser("sweep", help="grid of rates x mechanisms x seeds")
    _add_common(p)
    p.add_argument("--mechanism", action="append", choices=MECHANISMS,
                   help="mechanism to include (repeatable; default: all)")
    p.add_argument("--plot-data", dest="plot_data", help="directory for per-figure data")

    p = sub.add_parser("compare", help="all mechanisms on one seed")
    _add_common(p)

    p = sub.add_parser("validate", help="run the stylized-fact battery")
    _add_common(p)
    p.add_argument("--bank-equity", type=float, dest="bank_equity",
                   help="starting bank equity (a high value lengthens the "
                        "pre-crisis span the battery is fitted on)")
    return parser


def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        output.write_text(out, text)


def _load(args) -> dict:
    return load_config(args.config) if args.config else {}


def _cmd_run(args) -> int:
    kind, job = build_job(
        _load(args),
        setting=args.setting,
        mechanism=[args.mechanism] if args.mechanism else None,
        r0=args.r0,
        n_seeds=args.seeds,
        base_seed=args.seed,
        t_max=args.t_max,
    )
    if kind != "run":
        print("run expects a single rate, mechanism and seed; "
              "use the sweep command for grids", file=sys.stderr)
        return 2
    result = run(job)
    text = output.render_run_csv(result) if args.format == "csv" else output.render_run_json(result)
    _emit(text, args.out)
    if args.events:
        output.write_text(args.events, output.render_events_jsonl(result))
    if args.plot_data:
        output.write_run_plot_data(args.plot_data, result)
    return 0


def _cmd_sweep(args) -> int:
    kind, job = build_job(
        _load(args),
        setting=args.setting,
        mechanism=args.mechanism,
        r0=args.r0,
        n_seeds=args.seeds,
        base_seed=args.seed,
        t_max=args.t_max,
        force_sweep=True,
    )
    n_cells = len(job.r0_values) * len(job.mechanisms) * job.n_seeds
    print(f"sweep: {n_cells} runs "
          f"({len(job.r0_values)} rates x {len(job.mechanisms)} mechanisms "
          f"x {job.n_seeds} seeds)", file=sys.stderr)
    result = run_sweep(job, threads=args.threads)
    text = output.render_sweep_csv(result) if args.format == "csv" else output.render_sweep_json(result)
    _emit(text, args.out)
    if args.plot_data:
        output.write_sweep_plot_data(args.plot_data, result)
    return 0


def _cmd_compare(args) -> int:
    kind, job = build_job(
        _load(args),
        setting=args.setting,
        mechanism=list(MECHANISMS),
        r0=args.r0,
        n_seeds=args.seeds,
        base_seed=args.seed,
        t_max=args.t_max,
        force_sweep=True,
    )
    if len(job.r0_values) != 1 or job.n_seeds != 1:
        print("compare expects a single rate and seed", file=sys.stderr)
        return 2
    from .scheduler import RunConfig

    results = []
    for mech in MECHANISMS:
        params = job.params.with_overrides(refinancing_rate=job.r0_values[0])
        results.append(run(RunConfig(params=params, mechanism=mech,
                                     t_max=job.t_max, seed=job.base_seed)))
    text = (output.render_compare_csv(results) if args.format == "csv"
            else output.render_compare_json(results))
    _emit(text, args.out)
    return 0


def _cmd_validate(args) -> int:
    kind, job = build_job(
        _load(args),
        setting=args.setting,
        r0=args.r0,
        n_seeds=args.seeds,
        base_seed=args.seed,
        t_max=args.t_max,
        force_sweep=True,
    )
    params = job.params.with_overrides(refinancing_rate=job.r0_values[0])
    if args.bank_equity is not None:
        params = params.with_overrides(bank_equity_init=args.bank_equity)
    report = stylized_facts(
        params, seeds=list(job.seeds()), t_max=job.t_max, threads=args.threads,
    )
    text = json.dumps(report.describe(), indent=1, sort_keys=True) + "\n"
    _emit(text, args.out)
    for line in report.lines():
        print(line, file=sys.stderr)
    return 0 if report.passed else 1


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "compare": _cmd_compare,
        "validate": _cmd_validate,
    }[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
