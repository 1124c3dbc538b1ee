"""
Stabilization metrics for the Wheeled Biped Head Stabilizer.

MAE, RMSE and peak-to-peak amplitude of a signal against a reference,
and the relative improvement of a proposed controller over a baseline.
"""

import logging
from typing import Dict, Sequence, Union

import numpy as np

# Configure logger
logger = logging.getLogger("metrics")

Series = Union[Sequence[float], np.ndarray]

METRIC_NAMES = ("mae", "rmse", "p2p")


class MetricsError(ValueError):
    """Raised when a metric cannot be computed."""


def _as_array(series: Series) -> np.ndarray:
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        raise MetricsError("Metric requires a nonempty series")
    return values


def mae(series: Series, reference: float = 0.0) -> float:
    """Mean absolute deviation from the reference."""
    values = _as_array(series)
    return float(np.mean(np.abs(values - reference)))


def rmse(series: Series, reference: float = 0.0) -> float:
    """Root-mean-square deviation from the reference."""
    values = _as_array(series)
    return float(np.sqrt(np.mean((values - reference) ** 2)))


def p2p(series: Series) -> float:
    """Peak-to-peak amplitude (max - min)."""
    values = _as_array(series)
    return float(np.max(values) - np.min(values))


def improvement(baseline: float, proposed: float) -> float:
    """
    Relative reduction of a metric in percent: 100 * (1 - proposed / baseline).

    Raises:
        MetricsError: if the baseline is not positive
    """
    if not baseline > 0:
        raise MetricsError(f"Improvement needs a positive baseline, got {baseline}")
    return 100.0 * (1.0 - proposed / baseline)


def evaluate(series: Series, reference: float = 0.0) -> Dict[str, float]:
    """All three metrics of one signal."""
    return {
        "mae": mae(series, reference),
        "rmse": rmse(series, reference),
        "p2p": p2p(series),
    }
