"""Draws files (CSV / NDJSON) and report rendering.

Draws files carry one row per posterior draw.  Parameter columns use their own
names; reserved columns start with a dot:

``.log_prior``
    joint log density of the priors to be power-scaled (required)
``.log_lik`` or ``.log_lik.1`` ... ``.log_lik.N``
    joint or per-observation log likelihood (exactly one form is required)
``.chain``
    optional positive chain index
"""

from __future__ import annotations

import csv
import fnmatch
import io
import json
import math
import re
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .draws import DrawsMatrix
from .errors import EmptySelection, MissingReservedColumn, MixedLikColumns, ParseError

SCHEMA_VERSION = 1
LOG_PRIOR = ".log_prior"
LOG_LIK = ".log_lik"
CHAIN = ".chain"
_LIK_COL = re.compile(r"^\.log_lik\.(\d+)$")


def _float(text, path, line, column):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ParseError(f"cannot parse {text!r} as a number", path, line, column) from None


def _assemble(header, rows, path, line_numbers) -> DrawsMatrix:
    """Split parsed columns into parameters and reserved annotations."""
    if LOG_PRIOR not in header:
        raise MissingReservedColumn(LOG_PRIOR, path)
    indexed = {}
    for j, name in enumerate(header):
        m = _LIK_COL.match(name)
        if m:
            indexed[int(m.group(1))] = j
    has_joint = LOG_LIK in header
    if has_joint and indexed:
        raise MixedLikColumns(f"{path}: both '{LOG_LIK}' and '{LOG_LIK}.N' columns present")
    if not has_joint and not indexed:
        raise MissingReservedColumn(LOG_LIK, path)
    if indexed and sorted(indexed) != list(range(1, len(indexed) + 1)):
        raise ParseError(f"per-observation columns must be numbered 1..{len(indexed)}", path, 1)
    reserved = {LOG_PRIOR, LOG_LIK, CHAIN} | {header[j] for j in indexed.values()}
    for name in header:
        if name.startswith(".") and name not in reserved:
            raise ParseError(f"unknown reserved column '{name}'", path, 1)
    seen = set()
    for name in header:
        if name in seen:
            raise ParseError(f"duplicate column '{name}'", path, 1)
        seen.add(name)
    params = [name for name in header if name not in reserved]
    if not params:
        raise ParseError("no parameter columns", path, 1)
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    col = {name: j for j, name in enumerate(header)}
    lik_idx = [col[LOG_LIK]] if has_joint else [indexed[i] for i in sorted(indexed)]
    chain = None
    if CHAIN in col:
        chain = data[:, col[CHAIN]]
        bad = np.flatnonzero((chain != np.round(chain)) | (chain < 1))
        if bad.size:
            raise ParseError(".chain values must be positive integers", path, line_numbers[bad[0]], CHAIN)
    return DrawsMatrix(
        tuple(params),
        data[:, [col[p] for p in params]].reshape(len(rows), len(params)),
        data[:, col[LOG_PRIOR]],
        data[:, lik_idx],
        chain,
    )


def _read_csv(path) -> DrawsMatrix:
    header = None
    rows, line_numbers = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for record in reader:
            line = reader.line_num
            if not record or (record[0].startswith("#") and header is None) or not any(s.strip() for s in record):
                continue
            if header is None:
                header = [s.strip() for s in record]
                continue
            if len(record) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(record)}", path, line)
            rows.append([_float(v.strip(), path, line, header[j]) for j, v in enumerate(record)])
            line_numbers.append(line)
    if header is None:
        raise ParseError("empty file", path)
    return _assemble(header, rows, path, line_numbers)


def _read_ndjson(path) -> DrawsMatrix:
    header = None
    rows, line_numbers = [], []
    with open(path) as fh:
        for line, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as err:
                raise ParseError(f"invalid JSON: {err.msg}", path, line, err.colno) from None
            if not isinstance(obj, dict):
                raise ParseError("each line must be a JSON object", path, line)
            if isinstance(obj.get(LOG_LIK), list):
                lik = obj.pop(LOG_LIK)
                obj.update({f"{LOG_LIK}.{i + 1}": v for i, v in enumerate(lik)})
            keys = list(obj)
            if header is None:
                header = keys
            elif set(keys) != set(header) or len(keys) != len(header):
                raise ParseError("keys differ from the first draw", path, line)
            rows.append([_float(obj[k], path, line, k) for k in header])
            line_numbers.append(line)
    if header is None:
        raise ParseError("empty file", path)
    return _assemble(header, rows, path, line_numbers)


def infer_format(path) -> str:
    suffix = Path(path).suffix.lower()
    return "ndjson" if suffix in (".ndjson", ".jsonl") else "csv"


def read_draws(path, format: Optional[str] = None) -> DrawsMatrix:
    fmt = format or infer_format(path)
    if fmt == "csv":
        return _read_csv(path)
    if fmt == "ndjson":
        return _read_ndjson(path)
    raise ValueError(f"unknown draws format '{fmt}'")


def _reserved_columns(draws: DrawsMatrix, joint: bool):
    cols = {LOG_PRIOR: draws.log_prior}
    if joint:
        cols[LOG_LIK] = draws.joint_log_lik
    else:
        for n in range(draws.n_obs):
            cols[f"{LOG_LIK}.{n + 1}"] = draws.log_lik[:, n]
    return cols


def write_draws(draws: DrawsMatrix, path, format: Optional[str] = None, joint_lik: bool = False) -> None:
    """Write draws in a form :func:`read_draws` reads back bit-exactly."""
    fmt = format or infer_format(path)
    cols = {name: draws.values[:, j] for j, name in enumerate(draws.parameter_names)}
    cols.update(_reserved_columns(draws, joint_lik))
    if draws.chain_ids is not None:
        cols[CHAIN] = draws.chain_ids
    names = list(cols)
    with open(path, "w", newline="") as fh:
        if fmt == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(names)
            for i in range(draws.n_draws):
                writer.writerow([_repr(cols[n][i]) for n in names])
        elif fmt == "ndjson":
            for i in range(draws.n_draws):
                obj = {n: (int(cols[n][i]) if n == CHAIN else float(cols[n][i])) for n in names}
                fh.write(json.dumps(obj) + "\n")
        else:
            raise ValueError(f"unknown draws format '{fmt}'")


def _repr(x) -> str:
    if isinstance(x, (np.integer, int)):
        return str(int(x))
    return repr(float(x))


def select_variables(names: Sequence[str], patterns: Optional[Iterable[str]]) -> list[str]:
    """Parameters matching any glob pattern, in draws order."""
    if not patterns:
        return list(names)
    patterns = [p.strip() for p in patterns if p.strip()]
    chosen = [n for n in names if any(fnmatch.fnmatchcase(n, p) for p in patterns)]
    if not chosen:
        raise EmptySelection(f"no parameters match {', '.join(patterns)}")
    return chosen


# -- report rendering --------------------------------------------------------


def fmt_sig(x, digits: int = 2) -> str:
    """Fixed significant-digit decimal, no exponent (0.0123 -> '0.012')."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NA"
    return np.format_float_positional(float(x), precision=digits, unique=False, fractional=False, trim="-")


def fmt_data(x) -> str:
    """Deterministic rendering for tabular datasets."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "NA"
        return format(x, ".12g")
    return str(x)


def _json_float(x):
    x = float(x)
    return None if math.isnan(x) or math.isinf(x) else x


def sensitivity_report(records, settings: dict, n_draws: int) -> dict:
    rows = []
    for r in records:
        rows.append(
            {
                "variable": r.parameter,
                "prior": _json_float(r.prior_sensitivity),
                "likelihood": _json_float(r.likelihood_sensitivity),
                "diagnosis": r.diagnosis.value,
                "comment": r.diagnosis.comment,
                "khat_prior": _json_float(r.khat_prior),
                "khat_likelihood": _json_float(r.khat_lik),
                "reliable_prior": bool(r.reliable_prior),
                "reliable_likelihood": bool(r.reliable_lik),
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "sensitivity",
        "settings": settings,
        "n_draws": int(n_draws),
        "records": rows,
        "flagged": any(not (r["reliable_prior"] and r["reliable_likelihood"]) for r in rows),
    }


def _flags(row) -> str:
    bad = [c for c, key in (("prior", "reliable_prior"), ("likelihood", "reliable_likelihood")) if not row[key]]
    return "unreliable " + "+".join(bad) + " weights" if bad else ""


def _align(table: list[list[str]]) -> str:
    widths = [max(len(r[j]) for r in table) for j in range(len(table[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in table]
    return "\n".join(lines) + "\n"


def render_sensitivity_table(report: dict) -> str:
    s = report["settings"]
    head = (
        f"Sensitivity based on cjs_dist (threshold {fmt_data(s['threshold'])}, delta {fmt_data(s['delta'])})\n"
    )
    table = [["variable", "prior", "likelihood", "diagnosis", "flags"]]
    for r in report["records"]:
        table.append([r["variable"], fmt_sig(r["prior"]), fmt_sig(r["likelihood"]), r["comment"] or "-", _flags(r)])
    return head + _align(table)


def render_sensitivity_csv(report: dict) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    keys = ["variable", "prior", "likelihood", "diagnosis", "khat_prior", "khat_likelihood",
            "reliable_prior", "reliable_likelihood"]
    w.writerow(keys)
    for r in report["records"]:
        w.writerow([fmt_data(float("nan") if r[k] is None else r[k]) for k in keys])
    return out.getvalue()


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def render_rows_table(rows: list[dict], columns: Sequence[str], sig: Sequence[str] = ()) -> str:
    table = [list(columns)]
    for r in rows:
        table.append([fmt_sig(r[c], 3) if c in sig else fmt_data(r[c]) for c in columns])
    return _align(table)


def render_rows_csv(rows: list[dict], columns: Sequence[str]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt_data(float("nan") if r[c] is None else r[c]) for c in columns])
    return out.getvalue()


def render_report(report: dict, output: str) -> str:
    """Render any report document as table, json or csv."""
    if output == "json":
        return render_json(report)
    if report["command"] == "sensitivity":
        return render_sensitivity_table(report) if output == "table" else render_sensitivity_csv(report)
    cols, sig = report["columns"], report.get("significant", ())
    rows = report["rows"]
    if output == "table":
        return render_rows_table(rows, cols, sig)
    return render_rows_csv(rows, cols)


ECDF_COLUMNS = ("parameter", "component", "alpha", "point", "cum_weight")
QUANTITY_COLUMNS = ("parameter", "component", "alpha", "quantity", "estimate", "mcse")


def write_dataset(path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt_data(v) for v in row])
