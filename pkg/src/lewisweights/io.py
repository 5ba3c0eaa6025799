"""Matrix ingestion and run-report serialization.

Input formats: Matrix Market (array and coordinate layouts, real/integer
field, general symmetry) and headerless comma-separated rows. Reports are
rendered to a canonical JSON form: fixed key order, floats at 17 significant
digits, two-space indentation, so that serialize -> parse -> serialize is
byte identical and reports are diffable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Certificate
from .validation import MatrixValidationError, ParseError, validate_matrix

# Coordinate files that would densify beyond this many entries are refused.
DENSIFY_LIMIT = 10**8


def _data_lines(lines: list[str], start: int):
    """Yield (1-based line number, stripped text) skipping comments/blanks."""
    for idx in range(start, len(lines)):
        text = lines[idx].strip()
        if not text or text.startswith("%"):
            continue
        yield idx + 1, text


def _parse_matrix_market(lines: list[str]) -> np.ndarray:
    header = lines[0].strip().split()
    if len(header) != 5:
        raise ParseError("malformed MatrixMarket header", line=1)
    _, obj, layout, fld, symmetry = (tok.lower() for tok in header)
    if obj != "matrix":
        raise ParseError(f"unsupported MatrixMarket object {obj!r}", line=1)
    if layout not in ("array", "coordinate"):
        raise ParseError(f"unsupported MatrixMarket format {layout!r}", line=1)
    if fld not in ("real", "integer", "double"):
        raise ParseError(f"unsupported MatrixMarket field {fld!r}", line=1)
    if symmetry != "general":
        raise ParseError(
            f"only general symmetry is supported, got {symmetry!r}", line=1
        )

    stream = _data_lines(lines, 1)
    try:
        size_lineno, size_text = next(stream)
    except StopIteration:
        raise ParseError("missing size line", line=len(lines)) from None
    size_tokens = size_text.split()

    if layout == "array":
        if len(size_tokens) != 2:
            raise ParseError("array size line must be 'n d'", line=size_lineno)
        try:
            n, d = int(size_tokens[0]), int(size_tokens[1])
        except ValueError:
            raise ParseError("non-integer dimensions", line=size_lineno) from None
        values: list[float] = []
        last_lineno = size_lineno
        for lineno, text in stream:
            last_lineno = lineno
            for token in text.split():
                try:
                    values.append(float(token))
                except ValueError:
                    raise ParseError(
                        f"invalid numeric value {token!r}", line=lineno
                    ) from None
            if len(values) > n * d:
                raise ParseError(
                    f"more than n*d = {n * d} values in array data", line=lineno
                )
        if len(values) != n * d:
            raise ParseError(
                f"expected {n * d} values, found {len(values)}", line=last_lineno
            )
        # MatrixMarket array data is listed column by column.
        return np.asarray(values, dtype=np.float64).reshape((n, d), order="F")

    if len(size_tokens) != 3:
        raise ParseError("coordinate size line must be 'n d nnz'", line=size_lineno)
    try:
        n, d, nnz = (int(tok) for tok in size_tokens)
    except ValueError:
        raise ParseError("non-integer dimensions", line=size_lineno) from None
    if n * d > DENSIFY_LIMIT:
        raise ParseError(
            f"refusing to densify coordinate input with {n * d} entries "
            f"(limit {DENSIFY_LIMIT})",
            line=size_lineno,
        )
    M = np.zeros((n, d), dtype=np.float64)
    count = 0
    last_lineno = size_lineno
    for lineno, text in stream:
        last_lineno = lineno
        tokens = text.split()
        if len(tokens) != 3:
            raise ParseError("coordinate entry must be 'i j value'", line=lineno)
        try:
            i, j, value = int(tokens[0]), int(tokens[1]), float(tokens[2])
        except ValueError:
            raise ParseError(f"invalid coordinate entry {text!r}", line=lineno) from None
        if not (1 <= i <= n and 1 <= j <= d):
            raise ParseError(
                f"index ({i}, {j}) outside {n} x {d} matrix", line=lineno
            )
        M[i - 1, j - 1] += value  # duplicates accumulate
        count += 1
    if count != nnz:
        raise ParseError(
            f"expected {nnz} coordinate entries, found {count}", line=last_lineno
        )
    return M


def _parse_csv(lines: list[str]) -> np.ndarray:
    rows: list[list[float]] = []
    width = None
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        tokens = [tok.strip() for tok in text.split(",")]
        try:
            row = [float(tok) for tok in tokens]
        except ValueError:
            bad = next(tok for tok in tokens if not _is_float(tok))
            raise ParseError(f"invalid numeric value {bad!r}", line=lineno) from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(
                f"row has {len(row)} columns, expected {width}", line=lineno
            )
        rows.append(row)
    if not rows:
        raise ParseError("no data rows found", line=len(lines) or 1)
    return np.asarray(rows, dtype=np.float64)


def _is_float(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def load_matrix(path, fmt: str = "auto") -> np.ndarray:
    """Load and validate a matrix from Matrix Market or headerless CSV.

    Parameters
    ----------
    path : str or Path
        Input file.
    fmt : {"auto", "matrix_market", "csv"}
        "auto" sniffs the MatrixMarket banner on the first line.

    Returns
    -------
    ndarray of shape (n, d)
        Validated dense matrix (finite, no zero rows, full column rank).

    Raises
    ------
    ParseError
        Malformed file contents; the message carries the line number.
    MatrixValidationError
        Structurally valid file whose matrix violates an invariant
        (zero rows, n < d, rank deficiency, non-finite entries).
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise ParseError("empty file", line=1)
    if fmt == "auto":
        fmt = (
            "matrix_market"
            if lines[0].lstrip().lower().startswith("%%matrixmarket")
            else "csv"
        )
    if fmt == "matrix_market":
        M = _parse_matrix_market(lines)
    elif fmt == "csv":
        M = _parse_csv(lines)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return validate_matrix(M, name=str(path))


@dataclass(frozen=True)
class RunReport:
    """Serializable record of one solver run."""

    input_path: str
    n: int
    d: int
    p: float
    alpha: float
    mode: str
    backend: dict
    schedule: dict
    weights: list
    certificates: dict
    timings_ms: dict
    version: str

    def to_dict(self) -> dict:
        return {
            "input_path": self.input_path,
            "n": self.n,
            "d": self.d,
            "p": self.p,
            "alpha": self.alpha,
            "mode": self.mode,
            "backend": dict(self.backend),
            "schedule": dict(self.schedule),
            "weights": list(self.weights),
            "certificates": {
                key: cert.to_dict() if isinstance(cert, Certificate) else dict(cert)
                for key, cert in self.certificates.items()
            },
            "timings_ms": dict(self.timings_ms),
            "version": self.version,
        }

    @staticmethod
    def from_dict(data: dict) -> "RunReport":
        return RunReport(
            input_path=data["input_path"],
            n=data["n"],
            d=data["d"],
            p=data["p"],
            alpha=data["alpha"],
            mode=data["mode"],
            backend=data["backend"],
            schedule=data["schedule"],
            weights=data["weights"],
            certificates={
                key: Certificate.from_dict(cert)
                for key, cert in data["certificates"].items()
            },
            timings_ms=data["timings_ms"],
            version=data["version"],
        )


def _render_value(value, indent: int, pieces: list[str]) -> None:
    pad = "  " * indent
    if isinstance(value, dict):
        if not value:
            pieces.append("{}")
            return
        pieces.append("{\n")
        for i, (key, item) in enumerate(value.items()):
            pieces.append(f'{pad}  {json.dumps(key)}: ')
            _render_value(item, indent + 1, pieces)
            pieces.append(",\n" if i < len(value) - 1 else "\n")
        pieces.append(pad + "}")
    elif isinstance(value, (list, tuple)):
        if not len(value):
            pieces.append("[]")
            return
        pieces.append("[\n")
        for i, item in enumerate(value):
            pieces.append(pad + "  ")
            _render_value(item, indent + 1, pieces)
            pieces.append(",\n" if i < len(value) - 1 else "\n")
        pieces.append(pad + "]")
    elif isinstance(value, bool):
        pieces.append("true" if value else "false")
    elif value is None:
        pieces.append("null")
    elif isinstance(value, (int, np.integer)):
        pieces.append(str(int(value)))
    elif isinstance(value, (float, np.floating)):
        value = float(value)
        if not np.isfinite(value):
            raise ValueError("reports must not contain non-finite numbers")
        pieces.append(f"{value:.17g}")
    elif isinstance(value, str):
        pieces.append(json.dumps(value))
    else:
        raise TypeError(f"unsupported report value of type {type(value)!r}")


def render_report(report: RunReport | dict) -> str:
    """Render a report to canonical JSON text (ends with a newline)."""
    data = report.to_dict() if isinstance(report, RunReport) else report
    pieces: list[str] = []
    _render_value(data, 0, pieces)
    pieces.append("\n")
    return "".join(pieces)


def parse_report(text: str) -> RunReport:
    """Parse canonical JSON text back into a RunReport."""
    return RunReport.from_dict(json.loads(text))
