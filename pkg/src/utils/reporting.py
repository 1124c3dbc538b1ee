"""
Reporting utility functions for the Wheeled Biped Head Stabilizer.

This module writes simulation traces, downsampled plot data and the
baseline/proposed comparison report (JSON for machines, aligned text and
a rich table for people).
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd
from rich.table import Table

from src.config import OUTPUT_DIR

# Configure logger
logger = logging.getLogger("reporting")

FLOAT_FORMAT = "%.9g"


def write_trace_csv(frame: pd.DataFrame, path: Path) -> Path:
    """Write a full-rate trace; identical inputs give byte-identical files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def write_plot_data(frame: pd.DataFrame, path: Path, every: int = 10) -> Path:
    """Write every n-th sample of a trace for plotting."""
    if every < 1:
        raise ValueError(f"Plot decimation must be >= 1, got {every}")
    return write_trace_csv(frame.iloc[::every].reset_index(drop=True), path)


def _fmt(value: Optional[float], spec: str) -> str:
    return "n/a" if value is None else format(value, spec)


def _fmt_pct(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.1f}%"


def format_report_text(report) -> str:
    """Plain-text comparison table of one scenario."""
    lines = [
        f"Head stabilization report: {report.scenario}",
        f"Seed: {report.seed}   transient excluded: {report.transient_s:.2f} s",
    ]
    for mode in ("baseline", "proposed"):
        metrics = getattr(report, mode)
        if metrics is not None:
            lines.append(f"{mode} reference head height: {metrics.reference_height:.6f} m")
    lines.append("")
    lines.append(f"{'Metric':<16}{'Baseline':>14}{'Proposed':>14}{'Improvement':>14}")
    lines.append("-" * 58)
    for row in report.rows():
        label = f"{row['metric']} ({row['unit']})"
        lines.append(
            f"{label:<16}{_fmt(row['baseline'], '.6f'):>14}"
            f"{_fmt(row['proposed'], '.6f'):>14}{_fmt_pct(row['improvement']):>14}"
        )
    return "\n".join(lines) + "\n"


def format_report_table(report) -> Table:
    """Rich table version of the comparison, for the console."""
    table = Table(title=f"Head stabilization: {report.scenario}")
    table.add_column("Metric")
    table.add_column("Baseline", justify="right")
    table.add_column("Proposed", justify="right")
    table.add_column("Improvement", justify="right")
    for row in report.rows():
        improvement = row["improvement"]
        style = "green" if improvement is not None and improvement > 0 else None
        table.add_row(
            f"{row['metric']} ({row['unit']})",
            _fmt(row["baseline"], ".6f"),
            _fmt(row["proposed"], ".6f"),
            _fmt_pct(improvement),
            style=style,
        )
    return table


def generate_summary_report(report, output_dir: Path = OUTPUT_DIR) -> Dict[str, Path]:
    """
    Write report.json and report.txt for one scenario.

    Args:
        report: MetricsReport of the scenario
        output_dir: Directory to save the report

    Returns:
        Dict[str, Path]: paths of the written files
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    json_path = output_dir / "report.json"
    text_path = output_dir / "report.txt"

    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(report.model_dump(mode="json"), f, indent=2)

    try:
        text = format_report_text(report)
    except Exception as e:
        logger.error(f"Error formatting text report: {str(e)}")
        text = f"Error generating report for {report.scenario}: {str(e)}\n"

    with open(text_path, "w", encoding="utf-8") as f:
        f.write(text)

    logger.info(f"Summary report generated: {text_path}")
    logger.info(f"Report data saved to: {json_path}")
    return {"report_json": json_path, "report_text": text_path}


def load_report(path: Path) -> Dict[str, Any]:
    """Read report.json (or the directory holding it) back as a dict."""
    path = Path(path)
    if path.is_dir():
        path = path / "report.json"
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
