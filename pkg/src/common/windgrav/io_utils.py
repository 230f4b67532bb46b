"""
File formats

CSV tables (observed and background coefficients, zero tables, series contributions) and JSON
records (gravity coefficients, fit results). JSON output is key-sorted so identical results
give byte-identical files.
"""

import csv
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, TextIO, Union

import msgspec
from core_types.gravity import FitResult, GravityCoeffs, ObservedCoeffs
from core_types.planet import BackgroundJ

from windgrav.errors import DataFileError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

ZERO_TABLE_FIELDS = ["n", "m", "lambda", "gamma", "B_R"]
CONTRIBUTION_FIELDS = ["n", "m", "source_coeff", "potential_coeff", "term"]


def _format(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _read_rows(path: PathLike, required: Sequence[str], optional: Sequence[str] = ()):
    """Yield (line, row) pairs of a headed CSV, skipping blank and # lines"""
    path = Path(path)
    if not path.is_file():
        raise DataFileError(path, "file not found")
    with open(path, newline="") as f:
        lines = ((i, text) for i, text in enumerate(f, start=1))
        content = [
            (i, text) for i, text in lines if text.strip() and not text.lstrip().startswith("#")
        ]
    if not content:
        raise DataFileError(path, "empty file")
    header_line, header_text = content[0]
    header = [cell.strip() for cell in next(csv.reader([header_text]))]
    missing = [name for name in required if name not in header]
    unknown = [name for name in header if name not in required and name not in optional]
    if missing or unknown:
        raise DataFileError(
            path, f"expected columns {list(required) + list(optional)}, got {header}", header_line
        )
    for line, text in content[1:]:
        cells = [cell.strip() for cell in next(csv.reader([text]))]
        if len(cells) != len(header):
            raise DataFileError(path, f"expected {len(header)} columns, got {len(cells)}", line)
        yield line, dict(zip(header, cells))


def _number(path: PathLike, row: Dict[str, str], key: str, line: int, kind=float):
    text = row[key]
    try:
        value = kind(text)
    except ValueError:
        raise DataFileError(path, f"{key} '{text}' is not a valid {kind.__name__}", line)
    if kind is float and not math.isfinite(value):
        raise DataFileError(path, f"{key} '{text}' is not finite", line)
    return value


def _check_degrees(path: PathLike, degrees: List[int], lines: List[int]):
    for i, (n, line) in enumerate(zip(degrees, lines)):
        expected = 2 + i
        if n != expected:
            raise DataFileError(path, f"degree n={n} out of sequence, expected {expected}", line)


def read_observed_csv(path: PathLike) -> ObservedCoeffs:
    """Observed coefficients from n,J[,sigma], n ascending from 2"""
    degrees, values, sigma, lines = [], [], [], []
    with_sigma = None
    for line, row in _read_rows(path, ["n", "J"], ["sigma"]):
        degrees.append(_number(path, row, "n", line, int))
        values.append(_number(path, row, "J", line))
        with_sigma = "sigma" in row
        if with_sigma:
            s = _number(path, row, "sigma", line)
            if not s > 0.0:
                raise DataFileError(path, f"sigma must be positive, got {s}", line)
            sigma.append(s)
        lines.append(line)
    _check_degrees(path, degrees, lines)
    if not degrees:
        raise DataFileError(path, "no observed coefficients")
    logger.info("Loaded %d observed coefficients from %s", len(degrees), path)
    return ObservedCoeffs(n=degrees, J=values, sigma=sigma if with_sigma else None)


def write_observed_csv(path: PathLike, observed: ObservedCoeffs):
    fields = ["n", "J"] + (["sigma"] if observed.sigma is not None else [])
    rows = []
    for i, n in enumerate(observed.n):
        row = {"n": n, "J": observed.J[i]}
        if observed.sigma is not None:
            row["sigma"] = observed.sigma[i]
        rows.append(row)
    write_csv(path, fields, rows)


def read_background_csv(path: PathLike) -> BackgroundJ:
    """Background coefficients from n,J0, n ascending from 2"""
    degrees, values, lines = [], [], []
    for line, row in _read_rows(path, ["n", "J0"]):
        degrees.append(_number(path, row, "n", line, int))
        values.append(_number(path, row, "J0", line))
        lines.append(line)
    _check_degrees(path, degrees, lines)
    return BackgroundJ(n=degrees, J0=values)


def _write_rows(stream: TextIO, fields: List[str], rows: Iterable[Dict[str, Any]]):
    writer = csv.DictWriter(stream, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _format(row[key]) for key in fields})


def write_csv(target: Union[PathLike, TextIO], fields: List[str], rows: Iterable[Dict[str, Any]]):
    """Write rows to a file path or to an open text stream such as stdout"""
    if hasattr(target, "write"):
        _write_rows(target, fields, rows)  # type: ignore[arg-type]
        return
    path = Path(target)  # type: ignore[arg-type]
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        _write_rows(f, fields, rows)


def write_zero_table_csv(target: Union[PathLike, TextIO], rows: Iterable[Dict[str, Any]]):
    write_csv(target, ZERO_TABLE_FIELDS, rows)


def write_contributions_csv(path: PathLike, rows: Iterable[Dict[str, Any]]):
    write_csv(path, CONTRIBUTION_FIELDS, rows)


def encode_json(record: Any) -> bytes:
    """Key-sorted JSON with a trailing newline"""
    return msgspec.json.encode(record, order="sorted") + b"\n"


def write_json(path: PathLike, record: Any):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_json(record))


def read_json(path: PathLike, kind: type) -> Any:
    path = Path(path)
    if not path.is_file():
        raise DataFileError(path, "file not found")
    try:
        return msgspec.json.decode(path.read_bytes(), type=kind)
    except msgspec.DecodeError as e:
        raise DataFileError(path, f"invalid {kind.__name__} record: {e}")


def write_gravity_json(path: PathLike, coeffs: GravityCoeffs):
    write_json(path, coeffs)


def read_gravity_json(path: PathLike) -> GravityCoeffs:
    return read_json(path, GravityCoeffs)


def write_fit_json(path: PathLike, result: FitResult):
    write_json(path, result)


def read_fit_json(path: PathLike) -> FitResult:
    return read_json(path, FitResult)
