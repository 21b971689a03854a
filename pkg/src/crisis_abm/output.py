"""Serialisation of runs and sweeps: CSV, JSON, events, plot data.

Output is byte-deterministic: floats are printed with nine fixed
decimals, keys are sorted, and every file embeds the effective
configuration in a header so a result can always be traced back to the
inputs that produced it.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .experiments import OBSERVABLES, SweepResult
from .metrics import FIELD_NAMES
from .scheduler import RunResult


def fmt(value) -> str:
    """Fixed-point text for numbers; empty string for missing values."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return ""
    return f"{v:.9f}"


def _json_safe(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if math.isnan(v):
            return None
        return float(f"{v:.9f}")
    if isinstance(value, np.ndarray):
        return [_json_safe(x) for x in value.tolist()]
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _meta_line(meta: dict) -> str:
    return "# config: " + json.dumps(_json_safe(meta), sort_keys=True)


def render_run_csv(result: RunResult) -> str:
    buf = io.StringIO()
    buf.write(_meta_line(result.config.describe()) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIELD_NAMES)
    for row in result.rows:
        writer.writerow([fmt(v) for v in row.as_tuple()])
    return buf.getvalue()


def render_run_json(result: RunResult) -> str:
    payload = {
        "meta": _json_safe(result.config.describe()),
        "termination": result.termination,
        "t_exhausted": result.t_exhausted,
        "first_insolvency_t": result.first_insolvency_t,
        "columns": list(FIELD_NAMES),
        "rows": [[_json_safe(v) for v in row.as_tuple()] for row in result.rows],
    }
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def render_events_jsonl(result: RunResult) -> str:
    lines = []
    for ev in result.events:
        rec = {"t": ev.t, "kind": ev.kind, "agent": ev.agent,
               "magnitude": _json_safe(ev.magnitude)}
        if ev.info:
            rec.update({k: _json_safe(v) for k, v in sorted(ev.info.items())})
        lines.append(json.dumps(rec, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


_SWEEP_COLUMNS = ["r0", "mechanism", "regime", "n_seeds"]
for _name in OBSERVABLES:
    _SWEEP_COLUMNS += [_name, f"{_name}_se", f"{_name}_delta"]


def render_sweep_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    meta = {
        "r0_values": list(result.spec.r0_values),
        "mechanisms": list(result.spec.mechanisms),
        "n_seeds": result.spec.n_seeds,
        "base_seed": result.spec.base_seed,
        "t_max": result.spec.t_max,
        "window_cap": result.spec.window_cap,
        "params": result.spec.params.as_dict(),
    }
    buf.write(_meta_line(meta) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_SWEEP_COLUMNS)
    for row in result.table_rows():
        writer.writerow([fmt(row[c]) for c in _SWEEP_COLUMNS])
    return buf.getvalue()


def render_sweep_json(result: SweepResult) -> str:
    meta = {
        "r0_values": list(result.spec.r0_values),
        "mechanisms": list(result.spec.mechanisms),
        "n_seeds": result.spec.n_seeds,
        "base_seed": result.spec.base_seed,
        "t_max": result.spec.t_max,
        "window_cap": result.spec.window_cap,
        "params": result.spec.params.as_dict(),
    }
    payload = {
        "meta": _json_safe(meta),
        "columns": _SWEEP_COLUMNS,
        "rows": [
            [_json_safe(row[c]) for c in _SWEEP_COLUMNS]
            for row in result.table_rows()
        ],
    }
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def render_compare_csv(results: list[RunResult]) -> str:
    """Long-format table for several runs of the same economy."""
    buf = io.StringIO()
    meta = {r.config.mechanism: r.config.describe() for r in results}
    buf.write(_meta_line(meta) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("mechanism",) + FIELD_NAMES)
    for result in results:
        for row in result.rows:
            writer.writerow([result.config.mechanism] + [fmt(v) for v in row.as_tuple()])
    return buf.getvalue()


def render_compare_json(results: list[RunResult]) -> str:
    payload = {
        "meta": {r.config.mechanism: _json_safe(r.config.describe()) for r in results},
        "columns": ["mechanism"] + list(FIELD_NAMES),
        "rows": [
            [r.config.mechanism] + [_json_safe(v) for v in row.as_tuple()]
            for r in results
            for row in r.rows
        ],
    }
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


# ---------------------------------------------------------------------------
# per-figure plot data


def write_run_plot_data(outdir: str | Path, result: RunResult) -> list[Path]:
    """Emit scatter/series files ready for plotting from a single run.

    rank_size.csv: the pre-crisis firm size distribution on log axes.
    okun.csv: output growth vs unemployment change, one point per step.
    phillips.csv: inflation vs unemployment, one point per step.
    series.csv: the raw per-step table.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    meta = _meta_line(result.config.describe())
    written = []

    sizes = np.sort(np.asarray(result.precrisis_firm_sizes))[::-1]
    sizes = sizes[sizes > 0]
    buf = io.StringIO()
    buf.write(meta + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "size"])
    for rank, size in enumerate(sizes, start=1):
        w.writerow([rank, fmt(size)])
    written.append(write_text(outdir / "rank_size.csv", buf.getvalue()))

    out = result.series("output")
    unem = result.series("unemployment")
    infl = result.series("inflation")
    buf = io.StringIO()
    buf.write(meta + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d_unemployment", "output_growth"])
    for k in range(1, out.size):
        if out[k - 1] > 0:
            w.writerow([fmt(unem[k] - unem[k - 1]), fmt(out[k] / out[k - 1] - 1.0)])
    written.append(write_text(outdir / "okun.csv", buf.getvalue()))

    buf = io.StringIO()
    buf.write(meta + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["unemployment", "inflation"])
    for k in range(out.size):
        w.writerow([fmt(unem[k]), fmt(infl[k])])
    written.append(write_text(outdir / "phillips.csv", buf.getvalue()))

    written.append(write_text(outdir / "series.csv", render_run_csv(result)))
    return written


def write_sweep_plot_data(outdir: str | Path, result: SweepResult) -> list[Path]:
    """One file per observable: value against r0, one series per mechanism."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = result.table_rows()
    written = []
    for name in OBSERVABLES:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r0", "mechanism", "regime", name, f"{name}_se", f"{name}_delta"])
        for row in rows:
            w.writerow([
                fmt(row["r0"]), row["mechanism"], row["regime"],
                fmt(row[name]), fmt(row[f"{name}_se"]), fmt(row[f"{name}_delta"]),
            ])
        written.append(write_text(outdir / f"{name}_vs_r0.csv", buf.getvalue()))
    return written
