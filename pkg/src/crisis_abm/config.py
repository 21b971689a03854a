"""YAML configuration files and their translation into runnable jobs.

A config file has up to three blocks::

    setting: 1              # named policy preset (1 or 2)
    parameters:             # optional field-level overrides
      refinancing_rate: 0.021
    run:
      mechanism: pa         # one name or a list
      r0: 0.021             # one rate or a list (sweep grid)
      t_max: 1000
      seeds: 1              # number of seeds
      seed: 0               # first seed
      window_cap: 1000      # crisis-window cap for sweep statistics

A job with one rate, one mechanism and one seed becomes a single run;
anything larger becomes a sweep.
"""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path

import yaml

from .params import MECHANISMS, InvalidParameter, Parameters, for_setting
from .scheduler import RunConfig
from .experiments import SweepSpec


class ConfigError(ValueError):
    pass


class MissingFile(ConfigError):
    pass


class InvalidValue(ConfigError):
    pass


_PARAM_FIELDS = {f.name for f in fields(Parameters)}
_RUN_KEYS = {"mechanism", "r0", "t_max", "seeds", "seed", "window_cap"}
_TOP_KEYS = {"setting", "parameters", "run"}


def load_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise InvalidValue(f"config file {path} is not valid YAML: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InvalidValue(f"config file {path} must contain a mapping at top level")
    return data


def _check_keys(block: dict, allowed: set[str], where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise InvalidValue(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def build_parameters(cfg: dict, setting: int | None = None) -> Parameters:
    """Combine the named preset with any field-level overrides."""
    _check_keys(cfg, _TOP_KEYS, "config")
    chosen = setting if setting is not None else cfg.get("setting", 1)
    if chosen not in (1, 2):
        raise InvalidValue(f"setting must be 1 or 2, got {chosen!r}")
    overrides = cfg.get("parameters") or {}
    if not isinstance(overrides, dict):
        raise InvalidValue("'parameters' must be a mapping")
    _check_keys(overrides, _PARAM_FIELDS, "'parameters'")
    try:
        return for_setting(chosen, **overrides)
    except (InvalidParameter, TypeError) as exc:
        raise InvalidValue(str(exc)) from exc


def build_job(
    cfg: dict,
    *,
    setting: int | None = None,
    mechanism: str | None = None,
    r0: list[float] | None = None,
    n_seeds: int | None = None,
    base_seed: int | None = None,
    t_max: int | None = None,
    force_sweep: bool = False,
) -> tuple[str, RunConfig | SweepSpec]:
    """Merge config-file values with command-line overrides into a job.

    Returns ("run", RunConfig) for a single trajectory and
    ("sweep", SweepSpec) for anything that spans several cells.
    """
    params = build_parameters(cfg, setting)
    run_block = cfg.get("run") or {}
    if not isinstance(run_block, dict):
        raise InvalidValue("'run' must be a mapping")
    _check_keys(run_block, _RUN_KEYS, "'run'")

    mechs = mechanism if mechanism is not None else run_block.get("mechanism", "pa")
    if isinstance(mechs, str):
        mechs = [mechs]
    for m in mechs:
        if m not in MECHANISMS:
            raise InvalidValue(f"unknown mechanism {m!r}, expected one of {MECHANISMS}")

    rates = r0 if r0 is not None else run_block.get("r0", params.refinancing_rate)
    if isinstance(rates, (int, float)):
        rates = [float(rates)]
    rates = [float(x) for x in rates]
    if not rates:
        raise InvalidValue("r0 grid is empty")
    if any(x < 0 for x in rates):
        raise InvalidValue("r0 must be >= 0")
    if sorted(rates) != rates:
        raise InvalidValue("r0 grid must be sorted ascending")

    seeds = n_seeds if n_seeds is not None else int(run_block.get("seeds", 1))
    if seeds < 1:
        raise InvalidValue("seeds must be >= 1")
    seed0 = base_seed if base_seed is not None else int(run_block.get("seed", 0))
    steps = t_max if t_max is not None else int(run_block.get("t_max", 1000))
    if steps < 1:
        raise InvalidValue("t_max must be >= 1")
    cap = int(run_block.get("window_cap", 1000))

    if not force_sweep and len(rates) == 1 and len(mechs) == 1 and seeds == 1:
        params = params.with_overrides(refinancing_rate=rates[0])
        return "run", RunConfig(params=params, mechanism=mechs[0], t_max=steps, seed=seed0)
    return "sweep", SweepSpec(
        params=params,
        r0_values=tuple(rates),
        mechanisms=tuple(mechs),
        n_seeds=seeds,
        base_seed=seed0,
        t_max=steps,
        window_cap=cap,
    )
