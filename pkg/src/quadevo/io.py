"""CSV emission with fixed per-figure schemas."""
from __future__ import annotations

import csv
import math
import os
from pathlib import Path

__all__ = ["SCHEMAS", "SchemaError", "emit_csv", "read_csv", "format_float"]

SCHEMAS: dict[str, tuple[str, ...]] = {
    "fig_s1a": ("j", "x"),
    "fig_s1b": ("i", "delta_x"),
    "fig_s2": ("i", "x_prime"),
    "fig_s3a": ("i", "gqi_re", "gqi_im"),
    "fig_s3b": ("j", "kappa_re", "kappa_im"),
    "fig_s4a": ("j", "x_est"),
    "fig_s4b": ("j", "e"),
    "fig_s5": ("j", "err_var"),
    "fig_s6": ("m", "mean_err", "err_var", "trace_ee", "keyrate"),
    "keyrate": ("m", "d_ab", "d_be", "rate_raw", "rate", "rate_se", "entropy_bob",
                "entropy_se", "violation"),
}

# Leading index columns are written as integers, everything else as floats.
_INT_COLUMNS = {"j", "i", "m", "violation"}


class SchemaError(ValueError):
    """Row data does not match the declared column schema."""


def format_float(v) -> str:
    """17 significant digits, enough to round-trip any double."""
    v = float(v)
    if not math.isfinite(v):
        raise SchemaError(f"non-finite value {v!r}")
    return format(v, ".17g")


def _cell(name, v) -> str:
    if name in _INT_COLUMNS:
        if isinstance(v, float) and not v.is_integer():
            raise SchemaError(f"column {name!r} needs integers, got {v!r}")
        return str(int(v))
    return format_float(v)


def emit_csv(kind: str, rows, out_dir) -> Path:
    """Write ``rows`` (sequences in schema order) to ``<out_dir>/<kind>.csv``.

    The file is written to a temporary name and renamed into place, so a
    reader never sees a partial file.

    :param kind: figure id, a key of :data:`SCHEMAS`
    :param rows: iterable of row sequences
    :param out_dir: existing or creatable output directory
    :return: path of the written file
    """
    if kind not in SCHEMAS:
        raise SchemaError(f"unknown figure id {kind!r}")
    header = SCHEMAS[kind]
    lines = []
    for n, row in enumerate(rows):
        row = tuple(row)
        if len(row) != len(header):
            raise SchemaError(
                f"{kind} row {n} has {len(row)} fields, expected {len(header)}")
        lines.append([_cell(h, v) for h, v in zip(header, row)])
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{kind}.csv"
    tmp = path.with_suffix(".csv.tmp")
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(lines)
    os.replace(tmp, path)
    return path


def read_csv(path) -> tuple[tuple[str, ...], list[tuple[float, ...]]]:
    """Read a file written by :func:`emit_csv` back as floats."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        rows = [tuple(float(v) for v in row) for row in reader]
    return header, rows
