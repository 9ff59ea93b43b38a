"""CSV loading with schema validation for the simulator's artifacts."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """Input file does not match the expected schema; names the column."""


def read_csv(path: str | Path, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    """Read a comma-separated file into named float columns.

    Raises :class:`SchemaError` naming the first missing required column.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        for col in required:
            if col not in header:
                raise SchemaError(f"{path}: missing required column {col!r}")
        rows = list(reader)
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(header)))
    return {name: data[:, i] for i, name in enumerate(header)}


def user_columns(columns: dict[str, np.ndarray], prefix: str) -> list[str]:
    """Names like ``uc_1, uc_2, ...`` present in the file, in index order."""
    names = []
    i = 1
    while f"{prefix}_{i}" in columns:
        names.append(f"{prefix}_{i}")
        i += 1
    return names


def read_config(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
