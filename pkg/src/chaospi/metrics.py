"""Forecast accuracy and interval quality metrics.

Point metrics:

* ``smape`` -- symmetric mean absolute percentage error, in percent, range
  [0, 200]. A term whose actual and forecast are both exactly zero
  contributes zero rather than 0/0.
* ``directional_symmetry`` -- percentage of steps whose actual and forecast
  moves agree in sign, range [0, 100]. Agreement is strict: a zero move on
  either side counts as disagreement.

Interval metrics:

* ``picp`` -- fraction of actuals inside their interval, bounds inclusive.
* ``piaw`` -- mean interval width.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyInputError, LengthMismatchError, SeriesTooShortError


def _paired(actual, predicted, min_len: int = 1) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape or a.ndim != 1:
        raise LengthMismatchError(f"paired 1-d sequences required, got {a.shape} vs {p.shape}")
    if a.size == 0:
        raise EmptyInputError("metric inputs are empty")
    if a.size < min_len:
        raise SeriesTooShortError(f"need at least {min_len} observations, got {a.size}")
    return a, p


def smape(actual, predicted) -> float:
    """Symmetric MAPE in percent.

    .. math:: \\frac{100}{n} \\sum_t \\frac{|y_t - \\hat y_t|}{(|y_t| + |\\hat y_t|)/2}
    """
    a, p = _paired(actual, predicted)
    denom = (np.abs(a) + np.abs(p)) / 2.0
    num = np.abs(a - p)
    terms = np.divide(num, denom, out=np.zeros_like(num), where=denom > 0)
    return float(100.0 / a.size * np.sum(terms))


def directional_symmetry(actual, predicted) -> float:
    """Percentage of moves whose actual and predicted directions agree.

    A step counts as a hit only when the product of consecutive differences
    is strictly positive, so flat moves on either side never count.
    """
    a, p = _paired(actual, predicted, min_len=2)
    hits = (np.diff(a) * np.diff(p)) > 0
    return float(100.0 * np.mean(hits))


def picp(actual, lower, upper) -> float:
    """Prediction interval coverage probability, bounds inclusive, in [0, 1]."""
    a, lo = _paired(actual, lower)
    _, hi = _paired(actual, upper)
    return float(np.mean((a >= lo) & (a <= hi)))


def piaw(lower, upper) -> float:
    """Prediction interval average width."""
    lo, hi = _paired(lower, upper)
    return float(np.mean(hi - lo))
