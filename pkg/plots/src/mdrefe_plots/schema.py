"""CSV schemas of the runner's outputs, validated with file line numbers.

Two inputs exist: the TMR report written by ``mdrefe run`` and the planning
table written by ``mdrefe plan --budgets ... --out``.  Both are plain CSVs
with fixed headers; anything else (extra columns, missing columns, malformed
cells) is rejected with the offending line number so a broken pipeline is
easy to trace.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

REPORT_COLUMNS = ("variant", "gamma", "C", "w", "p_mode", "N_used", "TMR", "D", "seed")
SIZES_COLUMNS = ("gamma", "p", "C", "w", "s_str", "lambda0")


class SchemaError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


@dataclass(frozen=True)
class ReportRow:
    variant: str
    gamma: float
    c_budget: int
    w: float
    p_mode: str
    n_used: int
    tmr: float
    d_replicates: int
    seed: int


@dataclass(frozen=True)
class SizesRow:
    gamma: float
    p: float
    c_budget: int
    w: float
    s_str: int
    lambda0: float


def _check_header(path, fieldnames, expected) -> None:
    got = tuple(fieldnames or ())
    if got != expected:
        unknown = [c for c in got if c not in expected]
        missing = [c for c in expected if c not in got]
        parts = []
        if unknown:
            parts.append(f"unknown columns {unknown}")
        if missing:
            parts.append(f"missing columns {missing}")
        if not parts:
            parts.append(f"columns out of order: {list(got)}")
        raise SchemaError(path, 1, "; ".join(parts))


def read_report(path) -> list[ReportRow]:
    rows = []
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        _check_header(path, reader.fieldnames, REPORT_COLUMNS)
        for line, record in enumerate(reader, start=2):
            try:
                row = ReportRow(
                    variant=record["variant"],
                    gamma=float(record["gamma"]),
                    c_budget=int(record["C"]),
                    w=float(record["w"]),
                    p_mode=record["p_mode"],
                    n_used=int(record["N_used"]),
                    tmr=float(record["TMR"]),
                    d_replicates=int(record["D"]),
                    seed=int(record["seed"]),
                )
            except (TypeError, ValueError) as exc:
                raise SchemaError(path, line, f"malformed row: {exc}") from None
            if not 0.0 <= row.tmr <= 1.0:
                raise SchemaError(path, line, f"TMR must lie in [0, 1], got {row.tmr}")
            rows.append(row)
    return rows


def read_sizes(path) -> list[SizesRow]:
    rows = []
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        _check_header(path, reader.fieldnames, SIZES_COLUMNS)
        for line, record in enumerate(reader, start=2):
            try:
                row = SizesRow(
                    gamma=float(record["gamma"]),
                    p=float(record["p"]),
                    c_budget=int(record["C"]),
                    w=float(record["w"]),
                    s_str=int(record["s_str"]),
                    lambda0=float(record["lambda0"]),
                )
            except (TypeError, ValueError) as exc:
                raise SchemaError(path, line, f"malformed row: {exc}") from None
            rows.append(row)
    return rows
