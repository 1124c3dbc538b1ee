import json

import pandas as pd
import pytest
from rich.table import Table

from src.head_stabilizer import MetricsReport, ModeMetrics, SignalMetrics, compare
from src.utils.reporting import (
    format_report_table,
    format_report_text,
    generate_summary_report,
    load_report,
    write_plot_data,
    write_trace_csv,
)


def mode_metrics(scale):
    return ModeMetrics(
        reference_height=0.25,
        position=SignalMetrics(mae=0.01 * scale, rmse=0.012 * scale, p2p=0.04 * scale),
        velocity=SignalMetrics(mae=0.02 * scale, rmse=0.025 * scale, p2p=0.1 * scale),
    )


@pytest.fixture
def report():
    return compare("exp1", seed=0, transient_s=0.5, baseline=mode_metrics(1.0), proposed=mode_metrics(0.5))


@pytest.fixture
def frame():
    return pd.DataFrame({"t": [0.0, 0.001, 0.002], "z_head": [0.25, 0.2500001, 0.123456789123], "contact": [1, 1, 0]})


def test_trace_csv_format(tmp_path, frame):
    path = write_trace_csv(frame, tmp_path / "trace.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "t,z_head,contact"
    assert lines[3] == "0.002,0.123456789,0"


def test_plot_data_is_downsampled(tmp_path):
    frame = pd.DataFrame({"t": [i * 0.001 for i in range(25)]})
    plot = pd.read_csv(write_plot_data(frame, tmp_path / "plot.csv", every=10))
    assert list(plot["t"]) == pytest.approx([0.0, 0.01, 0.02])


def test_plot_data_rejects_bad_stride(tmp_path, frame):
    with pytest.raises(ValueError):
        write_plot_data(frame, tmp_path / "plot.csv", every=0)


def test_summary_report_round_trip(tmp_path, report):
    paths = generate_summary_report(report, tmp_path / "run")
    assert paths["report_json"].exists() and paths["report_text"].exists()
    assert MetricsReport.model_validate(load_report(tmp_path / "run")) == report
    assert MetricsReport.model_validate(load_report(paths["report_json"])) == report

    data = json.loads(paths["report_json"].read_text())
    assert data["improvement_pct"]["position.mae"] == pytest.approx(50.0)


def test_report_text(report):
    text = format_report_text(report)
    assert "Head stabilization report: exp1" in text
    assert "MAE (m)" in text and "P2P (m/s)" in text
    assert "50.0%" in text


def test_report_text_is_deterministic(tmp_path, report):
    first = generate_summary_report(report, tmp_path / "a")["report_text"].read_bytes()
    second = generate_summary_report(report, tmp_path / "b")["report_text"].read_bytes()
    assert first == second
    assert format_report_text(report) == format_report_text(report)


def test_report_text_with_single_mode():
    single = compare("flat", seed=1, transient_s=0.5, baseline=mode_metrics(1.0), proposed=None)
    text = format_report_text(single)
    assert "n/a" in text
    assert single.improvement_pct == {}


def test_report_table(report):
    table = format_report_table(report)
    assert isinstance(table, Table)
    assert table.row_count == 6
