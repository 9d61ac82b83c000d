"""CSV output for result rows.

Columns, in order::

    mode, system, n, degree, seed, rmse, mce, kld, valid_time, diverged

Reals use 10 significant digits (``%.10g``); absent metrics are empty
fields; ``diverged`` is ``0`` or ``1``. Lines end with ``\\n``.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Union

from .experiments import SIG_DIGITS, ResultRow

COLUMNS = ResultRow.columns()
_INT = {"n", "degree", "seed"}
_REAL = {"rmse", "mce", "kld", "valid_time"}


def _fmt(name, value) -> str:
    if value is None:
        return ""
    if name == "diverged":
        return "1" if value else "0"
    if name in _REAL:
        return f"{value:.{SIG_DIGITS}g}"
    return str(value)


def format_csv(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(c, getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def emit_csv(rows: list[ResultRow], path: Union[str, Path]) -> Path:
    """Write ``rows`` to ``path``, overwriting it."""
    if not rows:
        raise ValueError("no rows to write")
    path = Path(path)
    text = format_csv(rows)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def parse_csv(text: str) -> list[ResultRow]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    rows = []
    for rec in reader:
        kw = {}
        for c in COLUMNS:
            v = rec[c]
            if c in _INT:
                kw[c] = int(v)
            elif c in _REAL:
                kw[c] = float(v) if v != "" else None
            elif c == "diverged":
                kw[c] = v == "1"
            else:
                kw[c] = v
        rows.append(ResultRow(**kw))
    return rows


def read_csv(path: Union[str, Path]) -> list[ResultRow]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    return parse_csv(text)


def emit_json(rows: list[ResultRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(json.dumps([{c: getattr(r, c) for c in COLUMNS} for r in rows], indent=1) + "\n")
    return path
