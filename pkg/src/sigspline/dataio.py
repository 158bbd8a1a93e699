"""CSV interchange for series and sample batches.

Series files carry a header row ``t,ch1,...,chd`` and one row per step;
sample batches prepend a ``seq`` column. Values are written with 17
significant digits so doubles round-trip exactly. Lines starting with '#'
are comments (used for the resolved-config echo) and are skipped on read.
"""

from __future__ import annotations

import numpy as np

from .signature import as_sequence


def _format_row(fields) -> str:
    return ",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in fields)


def write_series_csv(path, values, comment: str | None = None) -> None:
    arr = as_sequence(values)
    with open(path, "w", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write("t," + ",".join(f"ch{c + 1}" for c in range(arr.shape[1])) + "\n")
        for t, row in enumerate(arr):
            fh.write(_format_row([t, *map(float, row)]) + "\n")


def write_batch_csv(path, sequences, comment: str | None = None) -> None:
    seqs = [as_sequence(s) for s in sequences]
    d = seqs[0].shape[1]
    with open(path, "w", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write("seq,t," + ",".join(f"ch{c + 1}" for c in range(d)) + "\n")
        for j, seq in enumerate(seqs):
            for t, row in enumerate(seq):
                fh.write(_format_row([j, t, *map(float, row)]) + "\n")


def read_series_csv(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                if header[0] != "t":
                    raise ValueError(f"{path}: expected header starting with 't', got {header[0]!r}")
                continue
            rows.append([float(v) for v in line.split(",")[1:]])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.asarray(rows)
