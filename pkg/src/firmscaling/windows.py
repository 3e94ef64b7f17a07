"""Moving pooled-window power-law fits and detection of convergence to scaling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InsufficientDataError, ScalingError
from .growth import ObservationSet, growth_pipeline, pool
from .panel import FirmPanel
from .scaling import RegressionFit, fit_power_law, log_bin

OK = "ok"
INSUFFICIENT = "insufficient-data"


@dataclass(frozen=True)
class WindowEntry:
    start_year: int
    end_year: int
    fit: RegressionFit | None
    n_obs: int
    n_firms: int
    status: str = OK
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.fit is not None


@dataclass(frozen=True)
class WindowSeries:
    entries: list[WindowEntry]
    window_length: int
    n_bins: int
    label: str = ""

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def start_years(self) -> np.ndarray:
        return np.array([e.start_year for e in self.entries], dtype=np.int64)

    def slope_std_errs(self) -> np.ndarray:
        """Slope standard error per entry, NaN for failed windows."""
        return np.array([e.fit.slope_std_err if e.ok else np.nan for e in self.entries])

    def residual_std_errs(self) -> np.ndarray:
        return np.array([e.fit.residual_std_err if e.ok else np.nan for e in self.entries])

    def betas(self) -> np.ndarray:
        return np.array([e.fit.beta if e.ok else np.nan for e in self.entries])


@dataclass(frozen=True)
class ConvergenceResult:
    converged: bool
    onset_year: int | None
    threshold: float
    persistence: int
    series_ref: str = ""

    def summary(self) -> str:
        rule = (f"slope SE < {self.threshold:g} for >= {self.persistence} consecutive windows "
                "and in every later successful window")
        if self.converged:
            return f"converged at {self.onset_year} ({rule})"
        return f"no convergence onset ({rule})"


def _fit_window(obs: ObservationSet, start: int, end: int, n_bins: int, min_count: int) -> WindowEntry:
    pooled = pool(obs, start, end)
    n_obs, n_firms = len(pooled), pooled.n_firms
    try:
        fit = fit_power_law(log_bin(pooled, n_bins, min_count))
    except ScalingError as exc:
        return WindowEntry(start, end, None, n_obs, n_firms, INSUFFICIENT, str(exc))
    return WindowEntry(start, end, fit, n_obs, n_firms)


def moving_window_fits(panel: FirmPanel, measure: str | None = None, window_length: int = 5,
                       n_bins: int = 10, min_count: int = 5, max_growth_pct: float = 1000.0,
                       label: str = "") -> WindowSeries:
    """Power-law fits over pooled windows of initial years, shifted one year at a time.

    The window starting at ``y`` pools observations with initial year in
    ``[y, y + window_length - 1]`` and so needs sizes through
    ``y + window_length``. Windows whose data cannot support a fit carry an
    ``insufficient-data`` entry instead of a fit.
    """
    if window_length < 1:
        raise ValueError(f"window_length must be >= 1, got {window_length}")
    span = panel.year_span
    if span is None or span[1] - span[0] < window_length:
        raise InsufficientDataError(
            f"panel spans {span}; a {window_length}-year window needs {window_length + 1} years of data"
        )
    obs = growth_pipeline(panel, measure, max_growth_pct)
    starts = range(span[0], span[1] - window_length + 1)
    entries = [_fit_window(obs, y, y + window_length - 1, n_bins, min_count) for y in starts]
    if not entries:
        raise InsufficientDataError("no feasible windows")
    return WindowSeries(entries, window_length, n_bins, label=label or panel.provenance)


def detect_convergence(series: WindowSeries, threshold: float = 0.1, persistence: int = 3) -> ConvergenceResult:
    """Earliest start year from which the fit stays good.

    The onset is the first entry that begins ``persistence`` consecutive
    successful windows with slope SE below ``threshold``, provided every later
    successful window is also below ``threshold``. Failed windows break a run.
    """
    if not len(series):
        raise ValueError("series is empty")
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    if persistence < 1:
        raise ValueError(f"persistence must be >= 1, got {persistence}")
    se = series.slope_std_errs()
    good = ~np.isnan(se) & (se < threshold)
    bad_ok = ~np.isnan(se) & ~good
    n = len(se)
    # later_bad[i]: some successful entry at index >= i is at or above threshold
    later_bad = np.logical_or.accumulate(bad_ok[::-1])[::-1]
    onset = None
    for i in range(n - persistence + 1):
        if good[i:i + persistence].all() and not (i + persistence < n and later_bad[i + persistence]):
            onset = int(series.entries[i].start_year)
            break
    return ConvergenceResult(onset is not None, onset, threshold, persistence, series.label)
