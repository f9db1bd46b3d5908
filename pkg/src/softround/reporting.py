"""CSV and JSON emission with stable, round-trippable formatting.

All numeric CSV fields are written with ``repr``, the shortest decimal string
that parses back to the same float, so reruns of a seeded experiment are
byte-identical and downstream tools lose no precision.  Booleans are written
as ``true``/``false``; missing values (the temperature of a hard scheme) as
the empty string.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .misalign import TrialReport
from .training import EpochRecord, TrainingCurve

MISALIGN_HEADER = ("trial", "scheme", "temperature", "bad_count", "total_pairs", "fraction")
CURVE_HEADER = (
    "epoch",
    "train_loss",
    "test_iterative",
    "test_greedy",
    "feasible_iterative",
    "feasible_greedy",
)
GRADCHECK_HEADER = ("problem", "pipeline", "temperature", "points", "max_relative_error")


def format_field(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_field(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    return rows[0], rows[1:]


def write_json(path, doc) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


# ------------------------------------------------------------- misalignment


def misalign_rows(reports: list[TrialReport], *, aggregate: bool = False) -> list[tuple]:
    """CSV rows for trial reports; optionally adds a mean row per scheme whose
    trial column reads "average"."""
    rows = [
        (r.trial, r.scheme, r.temperature, r.bad_count, r.total_pairs, float(r.fraction))
        for r in reports
    ]
    if aggregate:
        schemes = []
        for r in reports:
            if r.scheme not in schemes:
                schemes.append(r.scheme)
        for scheme in schemes:
            group = [r for r in reports if r.scheme == scheme]
            rows.append(
                (
                    "average",
                    scheme,
                    group[0].temperature,
                    sum(r.bad_count for r in group) / len(group),
                    group[0].total_pairs,
                    sum(r.fraction for r in group) / len(group),
                )
            )
    return rows


def parse_misalign_csv(path) -> list[TrialReport]:
    """Typed reports from a misalignment CSV (aggregate rows skipped)."""
    header, rows = read_csv(path)
    if list(header) != list(MISALIGN_HEADER):
        raise ValueError(f"unexpected header {header}")
    reports = []
    for row in rows:
        if row[0] == "average":
            continue
        reports.append(
            TrialReport(
                trial=int(row[0]),
                scheme=row[1],
                temperature=float(row[2]) if row[2] else None,
                bad_count=int(row[3]),
                total_pairs=int(row[4]),
            )
        )
    return reports


# ------------------------------------------------------------------ curves


def curve_rows(curve: TrainingCurve) -> list[tuple]:
    return [
        (
            r.epoch,
            r.train_loss,
            r.test_iterative,
            r.test_greedy,
            r.feasible_iterative,
            r.feasible_greedy,
        )
        for r in curve.records
    ]


def parse_curve_csv(path) -> TrainingCurve:
    header, rows = read_csv(path)
    if list(header) != list(CURVE_HEADER):
        raise ValueError(f"unexpected header {header}")
    curve = TrainingCurve()
    for row in rows:
        curve.records.append(
            EpochRecord(
                epoch=int(row[0]),
                train_loss=float(row[1]),
                test_iterative=float(row[2]),
                test_greedy=float(row[3]),
                feasible_iterative=row[4] == "true",
                feasible_greedy=row[5] == "true",
            )
        )
    return curve
