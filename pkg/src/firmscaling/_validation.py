"""Input checks shared by the estimators."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, check_consistent_length

from .growth import ObservationSet
from .panel import FirmPanel


def check_sizes(X) -> np.ndarray:
    """Return initial sizes as a 1-d float array; ``X`` may be 1-d or a single column."""
    if isinstance(X, ObservationSet):
        return np.asarray(X.s0, dtype=float)
    arr = check_array(X, ensure_2d=False, dtype=np.float64)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"expected a single column of initial sizes, got shape {arr.shape}")
        arr = arr[:, 0]
    if np.any(arr <= 0):
        raise ValueError("initial sizes must be strictly positive")
    return arr


def check_sizes_growth(X, y=None) -> tuple[np.ndarray, np.ndarray]:
    """Resolve ``(s0, log_growth)`` from an ObservationSet or from ``X`` sizes and ``y`` log growth."""
    if isinstance(X, ObservationSet):
        if y is not None:
            raise ValueError("y must be omitted when X is an ObservationSet")
        return np.asarray(X.s0, dtype=float), np.asarray(X.log_growth, dtype=float)
    if y is None:
        raise ValueError("y (log growth rates) is required when X holds bare sizes")
    s0 = check_sizes(X)
    r = check_array(y, ensure_2d=False, dtype=np.float64)
    if r.ndim != 1:
        raise ValueError(f"y must be 1-d, got shape {r.shape}")
    check_consistent_length(s0, r)
    return s0, r


def check_panel(X) -> FirmPanel:
    if not isinstance(X, FirmPanel):
        raise TypeError(f"expected a FirmPanel, got {type(X).__name__}")
    return X
