"""CSV and JSON-lines reading/writing used by the CLI and experiment runners.

Numeric output uses 17 significant digits so float64 values round-trip exactly.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError

FLOAT_FMT = "{:.17g}"


def _is_header(fields):
    for f in fields:
        try:
            float(f)
            return False
        except ValueError:
            pass
    return True


def read_matrix_csv(path, ncols=None):
    """Read a numeric CSV into a 2-D float array.

    An optional header line is accepted when none of its fields parse as
    numbers. Blank lines are skipped. Every value must be finite.

    Raises
    ------
    ParseError
        On a non-numeric or non-finite field, or a ragged row; the message
        carries the 1-based line number.
    """
    path = Path(path)
    rows = []
    width = ncols
    with path.open(newline="") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            fields = [f.strip() for f in fields]
            if not fields or all(f == "" for f in fields):
                continue
            if lineno == 1 and _is_header(fields):
                continue
            try:
                row = [float(f) for f in fields]
            except ValueError:
                raise ParseError(f"non-numeric field in {fields!r}", path, lineno) from None
            if not all(math.isfinite(v) for v in row):
                raise ParseError("non-finite value (NaN or inf)", path, lineno)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"expected {width} fields, found {len(row)}", path, lineno)
            rows.append(row)
    if not rows:
        return np.zeros((0, width or 0))
    return np.array(rows, dtype=np.float64)


def read_vector_csv(path):
    """Read a single-column CSV as a 1-D array."""
    arr = read_matrix_csv(path, ncols=1)
    return arr[:, 0] if arr.size else np.zeros(0)


def format_value(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return FLOAT_FMT.format(float(v))


def write_table_csv(path, columns):
    """Write ``{name: column}`` as a CSV with a header row."""
    path = Path(path)
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    nrows = len(cols[0]) if cols else 0
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for i in range(nrows):
            writer.writerow([format_value(c[i]) for c in cols])
    return path


def write_result(result, out_dir):
    """Write every table of an ExperimentResult as ``<name>_<table>.csv``.

    Returns the list of paths written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [
        write_table_csv(out_dir / f"{result.name}_{tname}.csv", cols)
        for tname, cols in result.tables.items()
    ]


def _jsonable(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, Path):
        return str(v)
    return v


def write_summary(path, summaries):
    """Write ``{result_name: scalars}`` as pretty JSON."""
    Path(path).write_text(json.dumps(_jsonable(summaries), indent=2, sort_keys=True) + "\n")


def append_jsonl(path, record):
    with Path(path).open("a") as fh:
        fh.write(json.dumps(_jsonable(record), sort_keys=True) + "\n")


def read_jsonl(path):
    with Path(path).open() as fh:
        return [json.loads(line) for line in fh if line.strip()]
