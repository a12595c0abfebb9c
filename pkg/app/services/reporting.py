"""Output records and their table/json/csv renderings, plus reference diffs.

Every number leaves the process as decimal text. JSON keeps all computed
digits; only the table rendering truncates, at the stable-digit estimate.
"""
import csv
import hashlib
import io
import json
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict

from app import __version__
from app.services.oracle import wkb_ratio
from app.services.problem import ProblemSpec, format_potential
from app.services.reference import CONVERGENCE_TABLE, COUPLING_TABLES, CouplingRow, significant_digits
from app.services.solver import SequenceReport, SweepRow
from app.utils.apnum import MIN_DIGITS, agreement_digits, as_fraction, fraction_text, truncate_decimal, with_digits
from app.utils.errors import DomainError

UNDEFINED = "—"
DIFF_DIGITS = 60
# convergence-table imaginary parts drift in their last printed digits from D = 13 on
CONVERGENCE_IM_DIGITS = 12


class EntryRecord(BaseModel):
    """One D of a Hankel sequence"""

    model_config = ConfigDict(extra="forbid")

    D: int
    re: str
    im: str
    iterations: int
    converged: bool
    status: str


class ProblemRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    preset: Optional[str] = None
    g: Optional[str] = None
    alpha: str
    d: int
    potential: str
    flags: List[str] = []


class OutputRecord(BaseModel):
    """Schema-stable JSON document written by every command"""

    model_config = ConfigDict(extra="forbid")

    tool_version: str
    config: Dict[str, Any]
    config_hash: str
    problem: Optional[ProblemRecord] = None
    rows: List[Union[EntryRecord, SweepRow]]
    digits_used: Optional[int] = None
    stable_digits_re: Optional[int] = None
    stable_digits_im: Optional[int] = None
    agreement_re: Optional[int] = None
    agreement_im: Optional[int] = None
    verdict: Optional[str] = None


def config_hash(config: Dict[str, Any]) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode()).hexdigest()


def problem_record(spec: ProblemSpec, d: int) -> ProblemRecord:
    return ProblemRecord(
        preset=spec.label(),
        g=fraction_text(spec.g) if spec.g is not None else None,
        alpha=fraction_text(spec.alpha),
        d=d,
        potential=format_potential(spec.potential_coeffs),
        flags=list(spec.flags),
    )


def record_from_report(report: SequenceReport, config: Dict[str, Any]) -> OutputRecord:
    ctx = report.ctx
    rows = [
        EntryRecord(
            D=entry.D,
            re=ctx.render(entry.root.energy.real, report.target_digits),
            im=ctx.render(entry.root.energy.imag, report.target_digits),
            iterations=entry.root.iterations,
            converged=entry.root.converged,
            status=entry.root.status,
        )
        for entry in report.entries
    ]
    return OutputRecord(
        tool_version=__version__,
        config=config,
        config_hash=config_hash(config),
        problem=problem_record(report.problem, report.d),
        rows=rows,
        digits_used=report.digits_used,
        stable_digits_re=report.stable_digits_re,
        stable_digits_im=report.stable_digits_im,
        agreement_re=report.agreement_re,
        agreement_im=report.agreement_im,
        verdict=report.verdict.value,
    )


def record_from_rows(rows: Sequence[SweepRow], config: Dict[str, Any]) -> OutputRecord:
    return OutputRecord(
        tool_version=__version__,
        config=config,
        config_hash=config_hash(config),
        rows=list(rows),
    )


def render_json(record: OutputRecord) -> str:
    return record.model_dump_json(indent=2)


def parse_json(text: str) -> OutputRecord:
    return OutputRecord.model_validate_json(text)


def _cell(value: Optional[str]) -> str:
    return UNDEFINED if value is None else value


def _columns(record: OutputRecord) -> List[str]:
    if record.rows and isinstance(record.rows[0], EntryRecord):
        return list(EntryRecord.model_fields)
    return list(SweepRow.model_fields)


def render_csv(record: OutputRecord) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    columns = _columns(record)
    writer.writerow(columns)
    for row in record.rows:
        data = row.model_dump(mode="json")
        writer.writerow([_cell(None if data[c] is None else str(data[c])) for c in columns])
    return buffer.getvalue()


def _truncate(text: Optional[str], digits: Optional[int]) -> str:
    if text is None:
        return UNDEFINED
    if digits is None or text == "0":
        return text
    ctx = with_digits(max(MIN_DIGITS, significant_digits(text) + 5))
    return truncate_decimal(ctx.parse(text).real, max(1, digits), ctx)


def _layout(header: Sequence[str], body: Sequence[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in body)) if body else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in body)
    return "\n".join(lines)


def render_table(record: OutputRecord, truncate: bool = True) -> str:
    """Human-readable table; values cut to their stable digits when ``truncate``"""
    if record.rows and isinstance(record.rows[0], EntryRecord):
        re_digits = record.stable_digits_re if truncate else None
        im_digits = record.stable_digits_im if truncate else None
        body = [
            [str(r.D), _truncate(r.re, re_digits), _truncate(r.im, im_digits), r.status]
            for r in record.rows
        ]
        table = _layout(["D", "Re E", "Im E", "status"], body)
        footer = (
            f"verdict: {record.verdict}  digits: {record.digits_used}  "
            f"stable digits: {record.stable_digits_re}/{record.stable_digits_im}"
        )
        return f"{table}\n{footer}"
    body = []
    for r in record.rows:
        if r.error is not None:
            body.append([r.g, UNDEFINED, UNDEFINED, UNDEFINED, UNDEFINED, f"error: {r.error}"])
            continue
        body.append([
            r.g,
            _truncate(r.re, r.stable_digits_re if truncate else None),
            _truncate(r.im, r.stable_digits_im if truncate else None),
            _cell(r.wkb_ratio),
            _cell(r.wkb_estimate),
            r.verdict.value if r.verdict else UNDEFINED,
        ])
    return _layout(["g", "Re E", "Im E", "ratio", "Im E wkb", "verdict"], body)


RENDERERS = {
    "json": render_json,
    "csv": render_csv,
    "table": render_table,
}


class CellDiff(NamedTuple):
    row: str
    column: str
    expected: str
    actual: Optional[str]
    digits: int
    passed: bool


def _within_last_place(actual: str, expected: str) -> bool:
    """|actual - expected| <= one unit in the last printed place of ``expected``"""
    ctx = with_digits(DIFF_DIGITS)
    a, e = ctx.parse(actual).real, ctx.parse(expected).real
    if e == 0:
        return a == 0
    exponent = int(ctx.mp.floor(ctx.mp.log10(abs(e))))
    ulp = ctx.pow10(exponent - significant_digits(expected) + 1)
    return abs(a - e) <= ulp * (1 + ctx.pow10(-6))


def _digits(actual: str, expected: str) -> int:
    ctx = with_digits(DIFF_DIGITS)
    return agreement_digits(ctx.parse(actual).real, ctx.parse(expected).real, ctx)


def _cell_diff(row: str, column: str, expected: str, actual: Optional[str], min_digits: Optional[int] = None) -> CellDiff:
    if actual is None:
        return CellDiff(row, column, expected, None, 0, False)
    digits = _digits(actual, expected)
    if expected == "0":
        passed = with_digits(MIN_DIGITS).parse(actual) == 0
    elif min_digits is not None:
        passed = digits >= min_digits
    else:
        passed = _within_last_place(actual, expected)
    return CellDiff(row, column, expected, actual, digits, passed)


def diff_convergence(record: OutputRecord) -> List[CellDiff]:
    """Cells of a g = 0.14 Hankel sequence against the published convergence table"""
    by_D = {r.D: r for r in record.rows if isinstance(r, EntryRecord)}
    cells = []
    for ref in CONVERGENCE_TABLE:
        got = by_D.get(ref.D)
        cells.append(_cell_diff(str(ref.D), "re", ref.re, got.re if got else None))
        im_rule = None if ref.im == "0" else CONVERGENCE_IM_DIGITS
        cells.append(_cell_diff(str(ref.D), "im", ref.im, got.im if got else None, im_rule))
    return cells


def diff_coupling(table_id: int, record: OutputRecord) -> List[CellDiff]:
    """Cells of a g sweep against a published coupling table"""
    if table_id not in COUPLING_TABLES:
        raise DomainError(f"coupling tables are 2 and 3, got {table_id}")
    _, reference = COUPLING_TABLES[table_id]
    by_g = {as_fraction(r.g): r for r in record.rows if isinstance(r, SweepRow)}
    cells = []
    for ref in reference:
        got = by_g.get(as_fraction(ref.g))
        cells.extend(_coupling_cells(ref, got))
    return cells


def _coupling_cells(ref: CouplingRow, got: Optional[SweepRow]) -> List[CellDiff]:
    re = _cell_diff(ref.g, "re", ref.re, got.re if got else None)
    im = _cell_diff(ref.g, "im", ref.im, got.im if got else None)
    # The ratio inherits the accuracy of Im E
    ratio_rule = min(significant_digits(ref.ratio), significant_digits(ref.im)) - 1
    ratio = _cell_diff(ref.g, "ratio", ref.ratio, got.wkb_ratio if got else None, ratio_rule)
    return [re, im, ratio]


def diff_table(table_id: int, record: OutputRecord) -> List[CellDiff]:
    if table_id == 1:
        return diff_convergence(record)
    return diff_coupling(table_id, record)


def render_diff(cells: Sequence[CellDiff]) -> str:
    body = [
        [c.row, c.column, c.expected, _cell(c.actual), str(c.digits), "pass" if c.passed else "FAIL"]
        for c in cells
    ]
    passed = sum(c.passed for c in cells)
    return f"{_layout(['row', 'column', 'expected', 'actual', 'digits', 'result'], body)}\n{passed}/{len(cells)} cells pass"


def wkb_reference_cells() -> List[CellDiff]:
    """Ratio columns recomputed from the published Im E values"""
    cells = []
    for table_id, (_, reference) in sorted(COUPLING_TABLES.items()):
        for ref in reference:
            value = with_digits(40).render(wkb_ratio(table_id, ref.g, ref.im), 10)
            rule = min(significant_digits(ref.ratio), significant_digits(ref.im)) - 1
            cells.append(_cell_diff(f"{table_id}:{ref.g}", "ratio", ref.ratio, value, rule))
    return cells
