import xml.etree.ElementTree as ET

import numpy as np
import pytest

from softround.misalign import TrialReport
from softround.plotting import Series, line_chart, write_svg
from softround.reporting import (
    CURVE_HEADER,
    MISALIGN_HEADER,
    curve_rows,
    format_field,
    misalign_rows,
    parse_curve_csv,
    parse_misalign_csv,
    read_csv,
    write_csv,
    write_json,
)
from softround.training import EpochRecord, TrainingCurve


def test_format_field_round_trips_floats():
    for value in (0.1, 1 / 3, 1e-17, -2.5e300, 0.30000000000000004):
        assert float(format_field(value)) == value


def test_format_field_specials():
    assert format_field(None) == ""
    assert format_field(True) == "true"
    assert format_field(False) == "false"
    assert format_field(7) == "7"
    assert format_field("greedy") == "greedy"


def test_misalign_csv_round_trip(tmp_path):
    reports = [
        TrialReport(0, "iterative", None, 11, 45),
        TrialReport(1, "iterative", None, 13, 45),
        TrialReport(0, "greedy", 0.1, 7, 45),
    ]
    path = write_csv(
        tmp_path / "m.csv", MISALIGN_HEADER, misalign_rows(reports, aggregate=True)
    )
    parsed = parse_misalign_csv(path)
    assert parsed == reports  # aggregate rows are presentation, not data
    header, rows = read_csv(path)
    assert list(header) == list(MISALIGN_HEADER)
    assert len(rows) == 5  # 3 trials + 2 scheme aggregates
    assert rows[3][0] == rows[4][0] == "average"


def test_curve_csv_round_trip(tmp_path):
    curve = TrainingCurve(
        records=[
            EpochRecord(0, 2.5, 1.25, 1.125, True, False),
            EpochRecord(1, 1.0 / 3.0, 0.1, 0.2, False, True),
        ]
    )
    path = write_csv(tmp_path / "c.csv", CURVE_HEADER, curve_rows(curve))
    assert parse_curve_csv(path).records == curve.records


def test_parse_rejects_foreign_header(tmp_path):
    path = write_csv(tmp_path / "x.csv", ("a", "b"), [(1, 2)])
    with pytest.raises(ValueError, match="header"):
        parse_misalign_csv(path)


def test_write_json_stable(tmp_path):
    a = write_json(tmp_path / "a.json", {"b": 1, "a": [1, 2]}).read_bytes()
    b = write_json(tmp_path / "b.json", {"a": [1, 2], "b": 1}).read_bytes()
    assert a == b


def test_line_chart_structure(tmp_path):
    series = [
        Series("one", (10.0, 1.0, 0.1), (0.3, 0.2, 0.1)),
        Series("two", (10.0, 1.0, 0.1), (0.4, 0.35, 0.2)),
    ]
    svg = line_chart(series, title="demo", x_label="tau", y_label="f", log_x=True)
    root = ET.fromstring(svg)  # well-formed XML
    polylines = [e for e in root.iter() if e.tag.endswith("polyline")]
    assert len(polylines) == 2
    for poly in polylines:
        assert len(poly.attrib["points"].split()) == 3
    labels = {e.text for e in root.iter() if e.tag.endswith("text")}
    assert {"one", "two", "demo", "tau"} <= labels
    path = write_svg(tmp_path / "plot.svg", svg)
    assert path.read_text() == svg


def test_line_chart_rejects_bad_series():
    with pytest.raises(ValueError, match="non-empty"):
        Series("empty", (), ())
    with pytest.raises(ValueError, match="finite"):
        Series("nan", (1.0,), (np.nan,))
    with pytest.raises(ValueError, match="positive"):
        line_chart([Series("neg", (-1.0, 1.0), (0.0, 1.0))], log_x=True)
    with pytest.raises(ValueError, match="series"):
        line_chart([])


def test_line_chart_constant_series():
    svg = line_chart([Series("flat", (0.0, 1.0), (2.0, 2.0))])
    ET.fromstring(svg)
