"""Matrix Market ingestion, report persistence and test-matrix constructors.

Only real/integer coordinate files with ``general`` or ``symmetric``
symmetry are accepted.  Matrices are stored densely.
"""
import dataclasses
import gzip
import io as _stdio
import json
import math
import os
import re
import tempfile
from dataclasses import dataclass

import numpy as np

from .angles import AngleReport
from .bounds import BoundReport
from .core import as_sym
from .errors import (
    BadBannerError,
    DuplicateEntryError,
    IndexOutOfRangeError,
    IoFailureError,
    NonFiniteError,
    NotSquareError,
    NotSymmetricError,
    ParseError,
    UnsupportedFormatError,
)
from .penalty import SweepResult

MAX_DENSE_N = 20000
SYM_RTOL = 1e-12

_INT = re.compile(r"[+-]?\d+")
_REAL = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eEdD][+-]?\d+)?")


@dataclass(frozen=True)
class MtxHeader:
    object: str
    format: str
    field: str
    symmetry: str


def _lines(source):
    """Yield ``(lineno, text)`` from a str, bytes, or text/binary stream."""
    if isinstance(source, (bytes, bytearray)):
        source = _stdio.BytesIO(bytes(source))
    elif isinstance(source, str):
        source = _stdio.StringIO(source)
    for lineno, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("ascii")
            except UnicodeDecodeError:
                raise ParseError("non-ASCII bytes", line=lineno) from None
        yield lineno, raw.rstrip("\r\n")


def parse_header(line, lineno=1):
    tokens = line.split()
    if not tokens or tokens[0].lower() != "%%matrixmarket":
        raise BadBannerError("missing %%MatrixMarket banner", line=lineno)
    if len(tokens) != 5:
        raise BadBannerError("banner needs object, format, field and symmetry", line=lineno)
    obj, fmt, fld, sym = (t.lower() for t in tokens[1:])
    if obj != "matrix":
        raise BadBannerError(f"unknown object {obj!r}", line=lineno)
    if fmt not in ("coordinate", "array"):
        raise BadBannerError(f"unknown format {fmt!r}", line=lineno)
    if fld not in ("real", "integer", "pattern", "complex", "double"):
        raise BadBannerError(f"unknown field {fld!r}", line=lineno)
    if sym not in ("general", "symmetric", "skew-symmetric", "hermitian"):
        raise BadBannerError(f"unknown symmetry {sym!r}", line=lineno)
    if fld == "double":
        fld = "real"
    header = MtxHeader(obj, fmt, fld, sym)
    if fmt != "coordinate":
        raise UnsupportedFormatError("only coordinate format is supported", line=lineno)
    if fld not in ("real", "integer"):
        raise UnsupportedFormatError(f"{fld} field is not supported", line=lineno)
    if sym not in ("general", "symmetric"):
        raise UnsupportedFormatError(f"{sym} symmetry is not supported", line=lineno)
    return header


def _parse_int(tok, what, lineno):
    if not _INT.fullmatch(tok):
        raise ParseError(f"bad {what} {tok!r}", line=lineno)
    return int(tok)


def _parse_value(tok, field, lineno):
    if field == "integer":
        return float(_parse_int(tok, "integer value", lineno))
    if not _REAL.fullmatch(tok):
        raise ParseError(f"bad real value {tok!r}", line=lineno)
    value = float(tok.replace("d", "e").replace("D", "e"))
    if not math.isfinite(value):
        raise ParseError(f"value {tok!r} is not finite", line=lineno)
    return value


def parse_mtx(source, *, max_n=MAX_DENSE_N):
    """Parse a Matrix Market coordinate file into a dense symmetric matrix.

    Every malformed input raises a subclass of :class:`~relsin.errors.MtxError`
    carrying the offending line number.
    """
    lines = _lines(source)
    header = None
    size = None
    entries = {}
    count = 0
    last = 0
    for lineno, text in lines:
        last = lineno
        if header is None:
            header = parse_header(text, lineno)
            continue
        stripped = text.strip()
        if not stripped or stripped.startswith("%"):
            continue
        tokens = stripped.split()
        if size is None:
            if len(tokens) != 3:
                raise ParseError("size line must be 'nrows ncols nnz'", line=lineno)
            n, ncols, nnz = (_parse_int(t, "size", lineno) for t in tokens)
            if n != ncols:
                raise NotSquareError(f"matrix is {n}x{ncols}", line=lineno)
            if n < 1 or nnz < 0:
                raise ParseError("dimensions must be positive", line=lineno)
            if n > max_n:
                raise ParseError(f"n={n} exceeds dense limit {max_n}", line=lineno)
            if nnz > n * n:
                raise ParseError("more entries than matrix positions", line=lineno)
            size = (n, nnz)
            A = np.zeros((n, n))
            continue
        n, nnz = size
        if count == nnz:
            raise ParseError(f"more than {nnz} data lines", line=lineno)
        if len(tokens) != 3:
            raise ParseError("data line must be 'i j value'", line=lineno)
        i = _parse_int(tokens[0], "row index", lineno)
        j = _parse_int(tokens[1], "column index", lineno)
        value = _parse_value(tokens[2], header.field, lineno)
        if not (1 <= i <= n and 1 <= j <= n):
            raise IndexOutOfRangeError(f"index ({i}, {j}) outside 1..{n}", line=lineno)
        if header.symmetry == "symmetric" and i < j:
            raise ParseError(f"upper-triangle entry ({i}, {j}) in symmetric file",
                             line=lineno)
        if (i, j) in entries:
            raise DuplicateEntryError(
                f"entry ({i}, {j}) repeated (first on line {entries[(i, j)]})", line=lineno)
        entries[(i, j)] = lineno
        A[i - 1, j - 1] = value
        count += 1
    if header is None:
        raise BadBannerError("empty input", line=1)
    if size is None:
        raise ParseError("missing size line", line=last + 1)
    if count < size[1]:
        raise ParseError(f"expected {size[1]} data lines, found {count}", line=last + 1)

    if header.symmetry == "symmetric":
        A = np.tril(A) + np.tril(A, -1).T
    else:
        diff = np.abs(A - A.T)
        tol = SYM_RTOL * np.maximum(np.abs(A), np.abs(A.T))
        bad = np.argwhere(diff > tol)
        if bad.size:
            i, j = bad[0]
            line = max(entries.get((i + 1, j + 1), 0), entries.get((j + 1, i + 1), 0))
            raise NotSymmetricError(f"entries ({i + 1}, {j + 1}) and ({j + 1}, {i + 1}) differ",
                                    line=line)
    return as_sym(A)


def read_mtx(path, **kw):
    """Parse a ``.mtx`` (or gzip-compressed ``.mtx.gz``) file."""
    opener = gzip.open if str(path).endswith(".gz") else open
    try:
        with opener(path, "rb") as fh:
            return parse_mtx(fh, **kw)
    except OSError as exc:
        raise IoFailureError(str(exc)) from exc


def format_real(x):
    """Decimal with 17 significant digits (round-trips a double exactly)."""
    return format(float(x), ".17g")


def mtx_text(A):
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise NonFiniteError("cannot write non-finite entries")
    n = A.shape[0]
    rows, cols = np.nonzero(np.tril(A))
    order = np.lexsort((cols, rows))
    out = ["%%MatrixMarket matrix coordinate real symmetric", f"{n} {n} {order.size}"]
    out.extend(f"{rows[t] + 1} {cols[t] + 1} {format_real(A[rows[t], cols[t]])}"
               for t in order)
    return "\n".join(out) + "\n"


def write_mtx(A, target):
    """Write ``A`` as a coordinate/real/symmetric file (lower triangle, row-major).

    ``target`` is a text stream or a path; paths are written atomically.
    """
    text = mtx_text(A)
    if isinstance(target, (str, os.PathLike)):
        atomic_write(os.fspath(target), text)
        return
    try:
        target.write(text)
    except OSError as exc:
        raise IoFailureError(str(exc)) from exc


def diag_matrix(n):
    """``diag(1, 2, ..., n)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return np.diag(np.arange(1.0, n + 1.0))


# Reports -------------------------------------------------------------------

SWEEP_COLUMNS = ("kappa", "left", "right", "quotient", "eta", "step1", "step2",
                 "relgap", "relgap_p", "flag")


def _csv_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_real(v)
    text = str(v)
    if any(c in text for c in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def _p_value(p):
    return "inf" if p == math.inf else p


def report_rows(report):
    """Header and rows of the CSV form of ``report``."""
    if isinstance(report, SweepResult):
        rows = [[getattr(pt, c) for c in SWEEP_COLUMNS] for pt in report.points]
        return list(SWEEP_COLUMNS), rows
    if isinstance(report, BoundReport):
        rows = [["step1", report.step1], ["step2", report.step2],
                ["correction_factor", report.correction_factor], ["total", report.total],
                ["norm_kind", report.norm_kind], ["applicable", report.applicable],
                ["reason", report.reason]]
        rows += [[name, _p_value(v) if name == "p" else v] for name, v in report.terms.items()]
        return ["term", "value"], rows
    if isinstance(report, AngleReport):
        rows = [["k", report.k], ["norm2", report.norm2], ["normF", report.normF]]
        rows += [[f"sine_{i + 1}", s] for i, s in enumerate(report.sines)]
        return ["term", "value"], rows
    if isinstance(report, dict):
        return ["term", "value"], [[k, _p_value(v) if k == "p" else v]
                                   for k, v in report.items()]
    raise TypeError(f"cannot serialize {type(report).__name__}")


def report_csv(report):
    header, rows = report_rows(report)
    lines = [",".join(header)] + [",".join(_csv_cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _json_scalar(v):
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_real(v) if math.isfinite(v) else "null"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_scalar(x) for x in v) + "]"
    return json.dumps(str(v), ensure_ascii=False)


def report_fields(report):
    """Flat ``{name: value}`` view of ``report`` in a fixed order."""
    if isinstance(report, SweepResult):
        return {
            "type": "sweep",
            "variant": report.variant,
            "k": report.k,
            "bound_kind": report.bound_kind,
            "reference": report.reference,
            "p": _p_value(report.p),
            "kappa": list(report.kappa_grid),
            "left": list(report.left),
            "right": list(report.right),
            "quotient": list(report.quotient),
            "eta": [pt.eta for pt in report.points],
            "flag": [pt.flag for pt in report.points],
            "slope_left": report.slopes.get("left", math.nan),
            "slope_right": report.slopes.get("right", math.nan),
        }
    if isinstance(report, BoundReport):
        out = {"type": "bound"}
        for f in dataclasses.fields(report):
            if f.name != "terms":
                out[f.name] = getattr(report, f.name)
        for name, v in report.terms.items():
            out[f"term_{name}"] = _p_value(v) if name == "p" else v
        return out
    if isinstance(report, AngleReport):
        return {"type": "angles", "k": report.k, "norm2": report.norm2,
                "normF": report.normF, "sines": list(report.sines)}
    if isinstance(report, dict):
        return report
    raise TypeError(f"cannot serialize {type(report).__name__}")


def report_json(report):
    fields = report_fields(report)
    body = ",\n".join(f"  {json.dumps(k)}: {_json_scalar(v)}" for k, v in fields.items())
    return "{\n" + body + "\n}\n"


def save_report(report, fmt, stream):
    """Write ``report`` to ``stream`` as ``"csv"`` or ``"json"``."""
    if fmt == "csv":
        text = report_csv(report)
    elif fmt == "json":
        text = report_json(report)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    try:
        stream.write(text)
    except OSError as exc:
        raise IoFailureError(str(exc)) from exc


def _restore_nan(v):
    if v is None:
        return math.nan
    if isinstance(v, list):
        return [_restore_nan(x) for x in v]
    return v


def load_report(stream):
    """Read a JSON report back; ``null`` numbers come back as NaN."""
    data = json.load(stream)
    return {k: (v if k == "flag" else _restore_nan(v)) for k, v in data.items()}


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".relsin-", suffix=".tmp")
    except OSError as exc:
        raise IoFailureError(str(exc)) from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise IoFailureError(str(exc)) from exc
