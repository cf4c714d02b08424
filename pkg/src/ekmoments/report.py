"""Tabular moment reports, serialized as CSV or JSON with decimal strings.

Numbers are stored in files as decimal strings at the working precision --
never as binary floats -- because the artifact's claims are about digits.
A loaded report is self-describing: each row's ratio is recomputed from its
exact and asymptotic columns and must match the stored string to 1e-10.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, fields

from mpmath import mp, mpf
import mpmath

from .numerics import to_mpf

COLUMNS = (
    "formula_id",
    "distribution",
    "x_or_lambda",
    "k",
    "centering_mode",
    "exact",
    "asymptotic",
    "ratio",
    "predicted_error",
    "quality_flags",
)


def fmt(value) -> str:
    """Decimal string of a high-precision value at full working precision."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    v = to_mpf(value)
    if mpmath.isinf(v):
        return "inf" if v > 0 else "-inf"
    return mpmath.nstr(v, mp.dps, strip_zeros=True)


@dataclass(frozen=True)
class ReportRow:
    """One comparison record; numeric fields are decimal strings ('' = absent)."""

    formula_id: str
    distribution: str
    x_or_lambda: str
    k: int
    centering_mode: str
    exact: str
    asymptotic: str
    ratio: str
    predicted_error: str
    quality_flags: str = ""


def make_row(
    formula_id: str,
    distribution: str,
    x_or_lambda,
    k: int,
    centering_mode: str,
    exact=None,
    asymptotic=None,
    predicted_error=None,
    flags=(),
) -> ReportRow:
    """Build a row, deriving ratio = exact/asymptotic when both sides exist."""
    ratio = ""
    if exact is not None and asymptotic is not None and mpf(asymptotic) != 0:
        ratio = fmt(mpf(exact) / mpf(asymptotic))
    return ReportRow(
        formula_id=formula_id,
        distribution=distribution,
        x_or_lambda=fmt(x_or_lambda),
        k=int(k),
        centering_mode=centering_mode,
        exact=fmt(exact),
        asymptotic=fmt(asymptotic),
        ratio=ratio,
        predicted_error=fmt(predicted_error),
        quality_flags=",".join(flags) if not isinstance(flags, str) else flags,
    )


@dataclass
class MomentReport:
    rows: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in self.rows:
            writer.writerow([getattr(row, c) for c in COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        payload = []
        for row in self.rows:
            rec = {c: getattr(row, c) for c in COLUMNS}
            rec["k"] = int(rec["k"])
            rec["ratio_float"] = float(rec["ratio"]) if rec["ratio"] else None
            payload.append(rec)
        return json.dumps({"columns": list(COLUMNS), "rows": payload}, indent=2) + "\n"

    def write(self, path: str, fmt_name: str) -> None:
        text = self.to_csv() if fmt_name == "csv" else self.to_json()
        try:
            with open(path, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc


_RATIO_CHECK_TOL = mpf("1e-10")


def _validate_row(row: ReportRow) -> None:
    if not row.ratio:
        return
    exact, asym = mpf(row.exact), mpf(row.asymptotic)
    if asym == 0:
        raise ValueError(f"row has ratio {row.ratio} but zero asymptotic")
    recomputed = exact / asym
    if abs(recomputed - mpf(row.ratio)) > _RATIO_CHECK_TOL * max(1, abs(recomputed)):
        raise ValueError(
            f"ratio column {row.ratio} does not match exact/asymptotic = {recomputed}"
        )


def from_csv(text: str) -> MomentReport:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        kwargs = dict(zip(COLUMNS, rec))
        kwargs["k"] = int(kwargs["k"])
        row = ReportRow(**kwargs)
        _validate_row(row)
        rows.append(row)
    return MomentReport(rows=rows)


def from_json(text: str) -> MomentReport:
    payload = json.loads(text)
    rows = []
    for rec in payload["rows"]:
        kwargs = {c: rec[c] for c in COLUMNS}
        kwargs["k"] = int(kwargs["k"])
        row = ReportRow(**kwargs)
        _validate_row(row)
        rows.append(row)
    return MomentReport(rows=rows)


def load(path: str) -> MomentReport:
    with open(path) as fh:
        text = fh.read()
    if path.endswith(".json") or text.lstrip().startswith("{"):
        return from_json(text)
    return from_csv(text)
