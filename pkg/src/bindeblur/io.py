"""File formats: plain PBM bit images, PGM renderings, coefficient files and reports.

Coefficient file
----------------
::

    dims N1 N2
    count E
    k l re im        (E lines)

Decimals are written with 17 significant digits, which round-trips every
float64 exactly.  Lines starting with ``#`` and blank lines are ignored.

Report file
-----------
``key = value`` lines, starting with ``schema_version``; one
``direction`` line per direction or margin subproblem.
"""
from __future__ import annotations

import os
import re
from pathlib import Path

import numpy as np

from .errors import ParseError
from .reconstruction import RecoveryReport
from .spectral import Band, BandedSpectrum, BinaryMatrix

REPORT_SCHEMA_VERSION = 1
_TOKEN = re.compile(r"\S+")


def _text(source) -> tuple[str, str | None]:
    """Contents and path of ``source``: a path, or text (any string with a newline, or empty)."""
    is_text = isinstance(source, str) and ("\n" in source or not source)
    if isinstance(source, (str, os.PathLike)) and not is_text:
        path = Path(source)
        return path.read_text(), str(path)
    return str(source), None


def _tokens(text: str):
    """``(token, line, column)`` triples, skipping ``#`` comments (1-based positions)."""
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        for m in _TOKEN.finditer(line):
            yield m.group(), ln, m.start() + 1


# ---------------------------------------------------------------------------
# images
# ---------------------------------------------------------------------------

def read_pbm(source) -> BinaryMatrix:
    """Parse a plain (``P1``) portable bitmap; ``1`` is a one (black) cell.

    ``source`` is a path or the file contents.  Bits may be separated by
    whitespace or run together.
    """
    text, path = _text(source)
    toks = _tokens(text)
    try:
        magic, ln, col = next(toks)
    except StopIteration:
        raise ParseError("empty image file", path=path) from None
    if magic != "P1":
        raise ParseError(f"expected magic 'P1', got {magic!r}", ln, col, path)
    dims = []
    for _ in range(2):
        try:
            tok, ln, col = next(toks)
        except StopIteration:
            raise ParseError("missing image width/height", ln, None, path) from None
        if not tok.isdigit() or int(tok) == 0:
            raise ParseError(f"invalid dimension {tok!r}", ln, col, path)
        dims.append(int(tok))
    width, height = dims
    bits = []
    for tok, ln, col in toks:
        for off, ch in enumerate(tok):
            if ch not in "01":
                raise ParseError(f"invalid pixel {ch!r}", ln, col + off, path)
            bits.append(ch == "1")
    if len(bits) != width * height:
        raise ParseError(f"expected {width * height} pixels, found {len(bits)}", path=path)
    return BinaryMatrix(np.array(bits, dtype=np.uint8).reshape(height, width))


def format_pbm(x: BinaryMatrix) -> str:
    rows = [" ".join(str(int(v)) for v in row) for row in x.bits]
    return "P1\n" + f"{x.n2} {x.n1}\n" + "\n".join(rows) + "\n"


def write_pbm(x: BinaryMatrix, path) -> None:
    Path(path).write_text(format_pbm(x))


def write_pgm(values: np.ndarray, path, maxval: int = 255) -> None:
    """Plain (``P2``) graymap of real values in ``[0, 1]``; 1 renders black like a PBM one."""
    v = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    g = np.rint((1.0 - v) * maxval).astype(int)
    rows = [" ".join(str(int(a)) for a in row) for row in g]
    Path(path).write_text(f"P2\n{g.shape[1]} {g.shape[0]}\n{maxval}\n" + "\n".join(rows) + "\n")


# ---------------------------------------------------------------------------
# coefficient files
# ---------------------------------------------------------------------------

def format_coefficients(spec: BandedSpectrum) -> str:
    out = [f"dims {spec.n1} {spec.n2}", f"count {len(spec.values)}"]
    for (k, l), v in sorted(spec.values.items()):
        out.append(f"{k} {l} {v.real:.17g} {v.imag:.17g}")
    return "\n".join(out) + "\n"


def write_coefficients(spec: BandedSpectrum, path) -> None:
    Path(path).write_text(format_coefficients(spec))


def _header(lines, key, count, path):
    try:
        ln, fields = next(lines)
    except StopIteration:
        raise ParseError(f"missing '{key}' header", path=path) from None
    if not fields or fields[0] != key or len(fields) != count + 1:
        raise ParseError(f"expected '{key}' followed by {count} integer(s)", ln, 1, path)
    try:
        return [int(f) for f in fields[1:]]
    except ValueError:
        raise ParseError(f"non-integer value in '{key}' header", ln, None, path) from None


def read_coefficients(source) -> BandedSpectrum:
    """Parse a coefficient file into a :class:`BandedSpectrum`.

    Raises
    ------
    ParseError
        on malformed headers or records, a record count mismatch,
        duplicate ``(k, l)`` indexes or a band that is not closed under
        negation or not Hermitian.
    """
    text, path = _text(source)
    lines = ((ln, line.split("#", 1)[0].split()) for ln, line in enumerate(text.splitlines(), 1))
    lines = ((ln, f) for ln, f in lines if f)
    n1, n2 = _header(lines, "dims", 2, path)
    if n1 < 1 or n2 < 1:
        raise ParseError("dims must be positive", path=path)
    (count,) = _header(lines, "count", 1, path)
    vals: dict = {}
    last = None
    for ln, fields in lines:
        last = ln
        if len(fields) != 4:
            raise ParseError(f"expected 'k l re im', got {len(fields)} fields", ln, 1, path)
        try:
            k, l = int(fields[0]), int(fields[1])
        except ValueError:
            raise ParseError("k and l must be integers", ln, 1, path) from None
        try:
            re_, im_ = float(fields[2]), float(fields[3])
        except ValueError:
            raise ParseError("re and im must be decimals", ln, None, path) from None
        if (k, l) in vals:
            raise ParseError(f"duplicate index ({k}, {l})", ln, 1, path)
        vals[(k, l)] = complex(re_, im_)
    if len(vals) != count:
        raise ParseError(f"header announces {count} records, found {len(vals)}", last, None, path)
    try:
        band = Band.from_indexes(vals.keys())
        if not band.in_range(n1, n2):
            raise ValueError("index outside the frequency range of the dims")
        return BandedSpectrum(n1, n2, band, vals)
    except ValueError as exc:
        raise ParseError(f"invalid coefficient set: {exc}", path=path) from None


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def format_report(report: RecoveryReport, extra: dict | None = None) -> str:
    out = [f"schema_version = {REPORT_SCHEMA_VERSION}",
           f"status = {report.status.value}",
           f"algorithm = {report.algorithm}",
           f"stacked_method = {report.stacked_method or '-'}",
           f"stacked_nodes = {report.stacked_nodes}",
           f"total_elapsed = {report.total_elapsed:.6f}",
           f"band_residual = {report.band_residual:.6g}",
           f"directions_recovered = {report.directions_recovered}",
           f"retries = {report.retries}",
           "retry_candidates = " + " ".join(f"{k},{l}" for k, l in report.retry_candidates)]
    for key, value in (extra or {}).items():
        out.append(f"{key} = {value}")
    for d in report.per_direction:
        k, l = d.direction
        reason = d.reason.replace(" ", "_") or "-"
        out.append(f"direction = {k},{l} m={d.m_count} outcome={d.outcome} "
                   f"residual={d.residual:.6g} elapsed={d.elapsed:.6f} reason={reason}")
    return "\n".join(out) + "\n"


def write_report(report: RecoveryReport, path, extra: dict | None = None) -> None:
    Path(path).write_text(format_report(report, extra))


def read_report(source) -> dict:
    """Parse a report into a dict; ``direction`` lines are collected in a list."""
    text, path = _text(source)
    out: dict = {"direction": []}
    for ln, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        key, sep, value = line.partition(" = ")
        if not sep:
            raise ParseError("expected 'key = value'", ln, 1, path)
        if key == "direction":
            out["direction"].append(value)
        else:
            out[key] = value
    if out.get("schema_version") != str(REPORT_SCHEMA_VERSION):
        raise ParseError(f"unsupported report schema {out.get('schema_version')!r}", path=path)
    return out
