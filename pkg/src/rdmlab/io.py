"""Deterministic CSV/JSON writers and the run manifest."""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile

import numpy as np

FLOAT_FMT = ".17g"


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), FLOAT_FMT)
    return str(x)


def csv_text(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def json_text(obj):
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader if row]


IDS_HEADER = ("E", "N", "half_width", "L", "samples")


def read_ids_csv(path):
    from .errors import ValidationError
    from .ids import IdsEstimate

    try:
        header, rows = read_csv(path)
    except (OSError, StopIteration) as exc:
        raise ValidationError(f"cannot read IDS table {path}: {exc}") from None
    if tuple(header) != IDS_HEADER:
        raise ValidationError(f"{path}: expected header {','.join(IDS_HEADER)}")
    try:
        parsed = [(float(E), float(N), float(hw), int(L), int(S)) for E, N, hw, L, S in rows]
    except ValueError as exc:
        raise ValidationError(f"{path}: malformed row: {exc}") from None
    return IdsEstimate.from_rows(parsed)
