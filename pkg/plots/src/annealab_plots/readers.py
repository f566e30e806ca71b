"""Header-checked CSV loading.

Files are classified by their header columns, not their names, so globs can
mix artifact types (a run directory glob catches theory.csv next to trace
CSVs).  A file missing the columns a figure needs raises SchemaError naming
the file and the columns.
"""

from __future__ import annotations

import numpy as np


class SchemaError(ValueError):
    """An input file does not provide the columns the figure requires."""


class Table:
    """A parsed CSV: column-name -> float array, NaN for non-numeric cells."""

    def __init__(self, path: str, columns: dict[str, np.ndarray]):
        self.path = path
        self.columns = columns

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def names(self) -> list[str]:
        return list(self.columns)


def _to_float(cell: str) -> float:
    try:
        return float(cell)
    except ValueError:
        return float("nan")


def read_table(path: str) -> Table:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise SchemaError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    rows = [ln.split(",") for ln in lines[1:]]
    if any(len(r) != len(header) for r in rows):
        raise SchemaError(f"{path}: ragged rows (header has "
                          f"{len(header)} columns)")
    cols = {
        name: np.array([_to_float(r[i]) for r in rows])
        for i, name in enumerate(header)
    }
    return Table(path, cols)


def require(table: Table, *names: str) -> None:
    missing = [n for n in names if n not in table]
    if missing:
        raise SchemaError(
            f"{table.path}: missing column(s) {', '.join(missing)} "
            f"(found: {', '.join(table.names())})")


def classify(table: Table) -> str:
    """Best-effort artifact family from the header alone."""
    if "energy_density" in table and "gamma" in table:
        return "trace"
    if "E" in table and "gamma" in table:
        return "theory"
    if "E_mean" in table and "gamma" in table:
        return "exact"
    if "H0" in table and "H1" in table:
        return "gaps"
    if "lambda" in table and "distance" in table:
        return "profile"
    if "phi_w" in table and "phi_sol" in table:
        return "entropy"
    return "unknown"
