"""Render benchmark figures from the harness CSV.

Reads the experiment records CSV (exact column schema below), aggregates
each (estimator, sweep value) across trials, and writes one figure per
experiment family: filter, naive, and oracle curves with min/max whiskers
plus the eps/sqrt(k) reference line.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

EXPECTED_COLUMNS = [
    "experiment_id",
    "experiment_type",
    "trial",
    "param_name",
    "param_value",
    "estimator",
    "error_ak",
    "error_tv",
    "rounds",
    "stop_reason",
    "runtime_ms",
    "seed",
]

ESTIMATORS = ("filter", "naive", "oracle", "reference")

CURVE_STYLES = {
    "filter": {"color": "tab:blue", "marker": "o"},
    "naive": {"color": "tab:orange", "marker": "s"},
    "oracle": {"color": "tab:green", "marker": "^"},
}

REFERENCE_LABEL = "eps/sqrt(k)"


class SchemaError(ValueError):
    """CSV does not match the harness record schema."""


@dataclass(frozen=True)
class Record:
    experiment_id: str
    experiment_type: str
    param_name: str
    param_value: float
    estimator: str
    error: float


def _metric_column(experiment_type: str) -> str:
    # arbitrary-truth sweeps are scored in interval distance, structured in TV
    return "error_ak" if experiment_type == "arbitrary" else "error_tv"


def load_records(csv_path) -> list[Record]:
    """Parse and validate the harness CSV; raises SchemaError with row numbers."""
    path = Path(csv_path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("row 1: file is empty, expected a header row") from None
        missing = [c for c in EXPECTED_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"row 1: missing columns {missing}")
        index = {c: header.index(c) for c in EXPECTED_COLUMNS}
        records = []
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < len(header):
                raise SchemaError(f"row {row_number}: expected {len(header)} fields, got {len(row)}")
            try:
                experiment_type = row[index["experiment_type"]]
                estimator = row[index["estimator"]]
                param_value = float(row[index["param_value"]])
                error = float(row[index[_metric_column(experiment_type)]])
            except ValueError as exc:
                raise SchemaError(f"row {row_number}: {exc}") from None
            if estimator not in ESTIMATORS:
                raise SchemaError(f"row {row_number}: unknown estimator {estimator!r}")
            records.append(
                Record(
                    experiment_id=row[index["experiment_id"]],
                    experiment_type=experiment_type,
                    param_name=row[index["param_name"]],
                    param_value=param_value,
                    estimator=estimator,
                    error=error,
                )
            )
    return records


def aggregate(records: list[Record]) -> dict:
    """mean/min/max error per (experiment_id, estimator, param_value).

    Failed-trial rows (NaN errors) are excluded.  The output is a nested
    dict experiment_id -> estimator -> sorted list of (x, mean, lo, hi).
    """
    buckets = defaultdict(list)
    for rec in records:
        if math.isnan(rec.error):
            continue
        buckets[(rec.experiment_id, rec.estimator, rec.param_value)].append(rec.error)
    out: dict = defaultdict(lambda: defaultdict(list))
    for (experiment_id, estimator, x), errors in buckets.items():
        mean = sum(errors) / len(errors)
        out[experiment_id][estimator].append((x, mean, min(errors), max(errors)))
    for experiment_id in out:
        for estimator in out[experiment_id]:
            out[experiment_id][estimator].sort()
    return {k: dict(v) for k, v in out.items()}


def render(csv_path, out_dir, experiment: str | None = None, fmt: str = "png") -> list[Path]:
    """Write one figure per experiment family; returns the created paths."""
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.fonttype"] = "none"  # keep SVG text searchable
    import matplotlib.pyplot as plt

    records = load_records(csv_path)
    if experiment is not None:
        records = [r for r in records if r.experiment_id == experiment]
        if not records:
            print(f"warning: no rows for experiment {experiment!r}, nothing to render",
                  file=sys.stderr)
            return []
    curves = aggregate(records)
    labels = {r.experiment_id: (r.experiment_type, r.param_name) for r in records}

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for experiment_id, by_estimator in sorted(curves.items()):
        experiment_type, param_name = labels[experiment_id]
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for estimator in ("filter", "naive", "oracle"):
            points = by_estimator.get(estimator, [])
            if not points:
                continue
            xs = [p[0] for p in points]
            means = [p[1] for p in points]
            lower = [m - lo for (_, m, lo, _) in points]
            upper = [hi - m for (_, m, _, hi) in points]
            ax.errorbar(xs, means, yerr=[lower, upper], label=estimator,
                        capsize=3, **CURVE_STYLES[estimator])
        reference = by_estimator.get("reference", [])
        if reference:
            ax.plot([p[0] for p in reference], [p[1] for p in reference],
                    linestyle="--", color="tab:red", label=REFERENCE_LABEL)
        metric = "interval distance" if experiment_type == "arbitrary" else "TV distance"
        ax.set_xlabel(param_name)
        ax.set_ylabel(f"mean {metric}")
        ax.set_title(f"{experiment_id} ({experiment_type})")
        ax.legend()
        fig.tight_layout()
        path = out_dir / f"{experiment_id}_{experiment_type}.{fmt}"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="batchplots",
        description="Render benchmark figures from a harness records CSV",
    )
    parser.add_argument("--csv", required=True, help="records CSV path")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--experiment", default=None,
                        help="render only this experiment id")
    parser.add_argument("--format", default="png", choices=("png", "svg"))
    args = parser.parse_args(argv)
    try:
        written = render(args.csv, args.out, experiment=args.experiment, fmt=args.format)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
