"""Input validation helpers for decision vectors.

Decision vectors are plain float64 numpy arrays.  Continuous decisions live
in [0, 1]^n and are read as an independent multivariate Bernoulli
distribution; binary decisions have every entry exactly 0.0 or 1.0.  The
helpers here canonicalize and check those conventions so the algorithms can
assume clean inputs.
"""

from __future__ import annotations

import numpy as np


class DecisionValidationError(ValueError):
    """A decision vector violates its domain; `index` points at the offender."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


def _as_vector(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DecisionValidationError(
            f"expected a 1-d decision vector, got shape {arr.shape}"
        )
    return arr


def validate_continuous(values) -> np.ndarray:
    """Check a continuous decision vector: finite entries in [0, 1].

    Returns the values as a float64 array, unchanged.  Raises
    :class:`DecisionValidationError` naming the first offending index.
    """
    arr = _as_vector(values)
    bad = ~(np.isfinite(arr) & (arr >= 0.0) & (arr <= 1.0))
    if bad.any():
        i = int(np.argmax(bad))
        raise DecisionValidationError(
            f"continuous decision out of [0, 1] at index {i}: {arr[i]!r}", index=i
        )
    return arr


def validate_binary(values) -> np.ndarray:
    """Check a binary decision vector: every entry exactly 0 or 1."""
    arr = _as_vector(values)
    bad = ~((arr == 0.0) | (arr == 1.0))
    if bad.any():
        i = int(np.argmax(bad))
        raise DecisionValidationError(
            f"binary decision not in {{0, 1}} at index {i}: {arr[i]!r}", index=i
        )
    return arr


def threshold(values, cut: float) -> np.ndarray:
    """Round entries to binary: 1.0 where value >= `cut`, else 0.0.

    `cut` must lie strictly inside (0, 1) so binary inputs pass through
    unchanged (thresholding is idempotent).
    """
    if not 0.0 < cut < 1.0:
        raise ValueError(f"threshold must lie strictly in (0, 1), got {cut}")
    arr = _as_vector(values)
    return (arr >= cut).astype(np.float64)


def is_binary(values) -> bool:
    arr = _as_vector(values)
    return bool(((arr == 0.0) | (arr == 1.0)).all())
