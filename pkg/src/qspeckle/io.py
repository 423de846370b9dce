"""records.csv reading/writing and atomic output directories."""

from __future__ import annotations

import contextlib
import csv
import math
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

from qspeckle.errors import SchemaError, ValidationError
from qspeckle.measurement import Provenance, RecordSet

RECORD_COLUMNS = ("setting_index", "I1", "I2", "C", "R", "g2", "g2_valid")
SIG_DIGITS = 12


def fmt_num(value: float) -> str:
    """Decimal text with 12 significant digits."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    return format(value, f".{SIG_DIGITS}g")


def provenance_path(records_path) -> Path:
    p = Path(records_path)
    return p.with_name(p.stem + ".provenance.ini")


def write_records(rs: RecordSet, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for i in range(len(rs)):
            w.writerow([
                int(rs.setting_index[i]),
                fmt_num(rs.I1[i]), fmt_num(rs.I2[i]), fmt_num(rs.C[i]),
                fmt_num(rs.R[i]), fmt_num(rs.g2[i]),
                1 if rs.g2_valid[i] else 0,
            ])


def _parse_float(text, line, column):
    try:
        return float(text)
    except ValueError:
        raise SchemaError(f"line {line}: column {column}: not a number: {text!r}") from None


def read_records(path, provenance: Provenance | None = None) -> RecordSet:
    """Parse a records.csv; any deviation from the schema raises SchemaError."""
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"{path}: no such file")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file, header row missing")
    header = [h.strip() for h in rows[0]]
    if tuple(header) != RECORD_COLUMNS:
        raise SchemaError(f"{path}: line 1: header must be {','.join(RECORD_COLUMNS)}, got {','.join(header)}")
    body = [(i + 2, r) for i, r in enumerate(rows[1:]) if r and any(c.strip() for c in r)]
    if not body:
        raise SchemaError(f"{path}: no records")
    cols = {k: [] for k in RECORD_COLUMNS}
    for line, row in body:
        if len(row) != len(RECORD_COLUMNS):
            raise SchemaError(f"{path}: line {line}: expected {len(RECORD_COLUMNS)} fields, got {len(row)}")
        idx = _parse_float(row[0], line, "setting_index")
        if idx != int(idx):
            raise SchemaError(f"{path}: line {line}: setting_index must be an integer")
        cols["setting_index"].append(int(idx))
        for name, text in zip(RECORD_COLUMNS[1:6], row[1:6]):
            cols[name].append(_parse_float(text, line, name))
        flag = row[6].strip()
        if flag not in ("0", "1"):
            raise SchemaError(f"{path}: line {line}: g2_valid must be 0 or 1, got {flag!r}")
        cols["g2_valid"].append(flag == "1")
    arrays = {k: np.asarray(v) for k, v in cols.items()}
    order = np.argsort(arrays["setting_index"], kind="stable")
    arrays = {k: v[order] for k, v in arrays.items()}
    try:
        return RecordSet(**arrays, provenance=provenance or Provenance())
    except ValidationError as exc:
        raise SchemaError(f"{path}: {exc}") from None


@contextlib.contextmanager
def atomic_directory(target):
    """Yield a staging directory that replaces ``target`` only on success."""
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))
    try:
        yield staging
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    backup = None
    if target.exists():
        backup = target.with_name(f".{target.name}.old-{os.getpid()}")
        os.replace(target, backup)
    os.replace(staging, target)
    if backup is not None:
        shutil.rmtree(backup, ignore_errors=True)
