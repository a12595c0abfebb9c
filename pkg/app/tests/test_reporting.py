import json
import pytest
from pydantic import ValidationError
from app.services.reference import (
    CONVERGENCE_TABLE,
    COUPLING_TABLES,
    DOUBLE_WELL_TABLE,
    TRIPLE_WELL_TABLE,
    significant_digits,
)
from app.services.reporting import (
    UNDEFINED,
    EntryRecord,
    OutputRecord,
    _truncate,
    _within_last_place,
    config_hash,
    diff_convergence,
    diff_coupling,
    diff_table,
    parse_json,
    record_from_report,
    record_from_rows,
    render_csv,
    render_diff,
    render_json,
    render_table,
)
from app.services.solver import SolveConfig, SweepRow, Verdict, solve
from app.utils.errors import DomainError


def _convergence_record(rows):
    return OutputRecord(
        tool_version="test",
        config={},
        config_hash=config_hash({}),
        rows=[EntryRecord(D=r.D, re=r.re, im=r.im, iterations=1, converged=True, status="converged") for r in rows],
        stable_digits_re=20,
        stable_digits_im=12,
        verdict="converged",
    )


def _coupling_record(reference):
    rows = [
        SweepRow(g=r.g, re=r.re, im=r.im, wkb_ratio=r.ratio, verdict=Verdict.CONVERGED)
        for r in reference
    ]
    return record_from_rows(rows, {})


@pytest.fixture
def harmonic_record(harmonic):
    report = solve(harmonic, SolveConfig(D_max=3, digits=40))
    return record_from_report(report, {"command": "solve"})


def test_reference_tables_shape():
    assert [r.D for r in CONVERGENCE_TABLE] == list(range(2, 16))
    assert len(TRIPLE_WELL_TABLE) == 13
    assert len(DOUBLE_WELL_TABLE) == 13
    assert set(COUPLING_TABLES) == {2, 3}


@pytest.mark.parametrize("text,digits", [
    ("1.16994e-32", 6),
    ("0.7530467190", 10),
    ("0.0392", 3),
    ("0", 1),
    ("0.96912932002717525629", 20),
])
def test_significant_digits(text, digits):
    assert significant_digits(text) == digits


def test_json_round_trip_is_byte_identical(harmonic_record):
    text = render_json(harmonic_record)
    assert render_json(parse_json(text)) == text
    data = json.loads(text)
    assert data["problem"]["preset"] == "custom"
    assert data["problem"]["potential"] == "k2=1"
    assert [row["D"] for row in data["rows"]] == [2, 3]
    assert data["config_hash"] == config_hash({"command": "solve"})


def test_json_rejects_unknown_fields(harmonic_record):
    data = json.loads(render_json(harmonic_record))
    data["surprise"] = 1
    with pytest.raises(ValidationError):
        parse_json(json.dumps(data))


def test_csv_marks_undefined_cells():
    rows = [SweepRow(g="0", re="1.0", im="0", verdict=Verdict.CONVERGED)]
    text = render_csv(record_from_rows(rows, {}))
    header, line = text.strip().split("\n")
    assert header.split(",")[:4] == ["g", "re", "im", "wkb_ratio"]
    assert line.split(",")[3] == UNDEFINED


def test_table_truncates_to_stable_digits():
    record = _convergence_record(CONVERGENCE_TABLE[-2:])
    record = record.model_copy(update={"stable_digits_re": 5, "stable_digits_im": 4})
    table = render_table(record)
    assert "0.96912 " in table
    assert "3.379e-10" in table
    assert "0.96912932002717525629" not in table
    full = render_table(record, truncate=False)
    assert "0.96912932002717525629" in full


def test_truncate_helper():
    assert _truncate("0.96912932002717525629", 5) == "0.96912"
    assert _truncate(None, 5) == UNDEFINED
    assert _truncate("0", 5) == "0"
    assert _truncate("0.5", None) == "0.5"


def test_sweep_table_shows_errors():
    rows = [SweepRow(g="-0.1", error="g must be >= 0")]
    table = render_table(record_from_rows(rows, {}))
    assert "error: g must be >= 0" in table


@pytest.mark.parametrize("actual,passed", [
    ("0.96912932002717525629", True),
    ("0.96912932002717525630", True),
    ("0.96912932002717525628", True),
    ("0.96912932002717525631", False),
])
def test_within_last_place(actual, passed):
    assert _within_last_place(actual, "0.96912932002717525629") is passed


def test_convergence_diff_passes_on_reference():
    cells = diff_convergence(_convergence_record(CONVERGENCE_TABLE))
    assert len(cells) == 28
    assert all(c.passed for c in cells)


def test_convergence_diff_flags_changes():
    rows = list(CONVERGENCE_TABLE)
    rows[0] = rows[0]._replace(im="1e-12")
    rows[-1] = rows[-1]._replace(im="3.3798095481e-10")
    cells = diff_convergence(_convergence_record(rows))
    failed = {(c.row, c.column) for c in cells if not c.passed}
    assert failed == {("2", "im"), ("15", "im")}


def test_convergence_diff_reports_missing_rows():
    cells = diff_convergence(_convergence_record(CONVERGENCE_TABLE[:3]))
    missing = [c for c in cells if c.actual is None]
    assert len(missing) == 2 * (len(CONVERGENCE_TABLE) - 3)
    assert not any(c.passed for c in missing)


@pytest.mark.parametrize("table_id", [2, 3])
def test_coupling_diff_passes_on_reference(table_id):
    _, reference = COUPLING_TABLES[table_id]
    cells = diff_table(table_id, _coupling_record(reference))
    assert len(cells) == 3 * len(reference)
    assert all(c.passed for c in cells)


def test_coupling_diff_matches_g_exactly():
    """'0.1' and '0.10' name the same coupling"""
    rows = [r._replace(g=r.g.rstrip("0") or "0") for r in TRIPLE_WELL_TABLE]
    cells = diff_coupling(2, _coupling_record(rows))
    assert all(c.passed for c in cells)


def test_coupling_diff_unknown_table():
    with pytest.raises(DomainError):
        diff_coupling(1, _coupling_record(TRIPLE_WELL_TABLE))


def test_render_diff_summary():
    cells = diff_convergence(_convergence_record(CONVERGENCE_TABLE))
    text = render_diff(cells)
    assert text.endswith("28/28 cells pass")
