"""scikit-learn compatible estimators wrapping the scaling pipeline.

Each estimator stores its configuration as constructor parameters (so
``get_params``/``set_params``/``clone`` work) and exposes learned state
through trailing-underscore attributes after ``fit``.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_panel, check_sizes, check_sizes_growth
from .exceptions import ScalingError
from .scaling import fit_laplace, fit_power_law, log_bin_arrays
from .windows import detect_convergence, moving_window_fits


def _drop_outliers(s0, r, max_growth_pct):
    if max_growth_pct is None:
        return s0, r
    keep = np.expm1(r) <= max_growth_pct / 100.0
    return s0[keep], r[keep]


class PowerLawScaling(BaseEstimator):
    """Fit ``sigma(S0) = a * S0**-beta`` to growth observations.

    Parameters
    ----------
    n_bins : int, default=20
        Number of equal-width bins in log initial size.
    min_count : int, default=5
        Bins with fewer observations are left out of the fit.
    max_growth_pct : float or None, default=1000
        Observations growing by more than this percentage are discarded
        before binning. ``None`` keeps everything.

    Attributes
    ----------
    bin_table_ : BinTable
    fit_ : RegressionFit
    beta_ : float
        Scaling exponent, the negated log-log slope.
    amplitude_ : float
        Prefactor ``a``.

    Examples
    --------
    >>> est = PowerLawScaling(n_bins=20).fit(sizes, log_growth)  # doctest: +SKIP
    >>> est.beta_  # doctest: +SKIP
    """

    def __init__(self, n_bins=20, min_count=5, max_growth_pct=1000.0):
        self.n_bins = n_bins
        self.min_count = min_count
        self.max_growth_pct = max_growth_pct

    def fit(self, X, y=None):
        s0, r = _drop_outliers(*check_sizes_growth(X, y), self.max_growth_pct)
        self.bin_table_ = log_bin_arrays(s0, r, self.n_bins, self.min_count)
        self.fit_ = fit_power_law(self.bin_table_)
        self.beta_ = self.fit_.beta
        self.amplitude_ = self.fit_.amplitude
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        """Predicted standard deviation of log growth at initial sizes ``X``."""
        check_is_fitted(self, "fit_")
        return self.amplitude_ * check_sizes(X) ** (-self.beta_)

    def score(self, X, y=None):
        """R^2 of the fitted line against the binned ln sigma of new data."""
        check_is_fitted(self, "fit_")
        s0, r = _drop_outliers(*check_sizes_growth(X, y), self.max_growth_pct)
        table = log_bin_arrays(s0, r, self.n_bins, self.min_count)
        rows = [b for b in table.bins if b.sigma > 0]
        x = np.log([b.center for b in rows])
        obs = np.log([b.sigma for b in rows])
        pred = self.fit_.predict(x)
        sst = float(((obs - obs.mean()) ** 2).sum())
        return 1.0 - float(((obs - pred) ** 2).sum()) / sst


class ConditionalLaplace(BaseEstimator):
    """Per-size-bin Laplace fits of the log growth distribution.

    Attributes
    ----------
    bin_table_ : BinTable
    bins_ : list of BinRow
        Bins holding at least ``min_obs`` observations.
    laplace_fits_ : list of LaplaceFit
        One fit per entry of ``bins_``.
    """

    def __init__(self, n_bins=20, min_count=5, min_obs=10, max_growth_pct=1000.0):
        self.n_bins = n_bins
        self.min_count = min_count
        self.min_obs = min_obs
        self.max_growth_pct = max_growth_pct

    def fit(self, X, y=None):
        s0, r = _drop_outliers(*check_sizes_growth(X, y), self.max_growth_pct)
        table = log_bin_arrays(s0, r, self.n_bins, self.min_count)
        bins, fits = [], []
        for row in table.bins:
            values = r[row.contains(s0)]
            if len(values) < self.min_obs:
                continue
            try:
                fits.append(fit_laplace(values))
            except ScalingError:
                continue
            bins.append(row)
        self.bin_table_ = table
        self.bins_ = bins
        self.laplace_fits_ = fits
        self.n_features_in_ = 1
        return self

    def _bin_of(self, X):
        """Position in ``bins_`` of each size, -1 when no fitted bin holds it."""
        s0 = check_sizes(X)
        k = np.full(len(s0), -1)
        for pos, row in enumerate(self.bins_):
            k[row.contains(s0)] = pos
        return k

    def predict_scale(self, X):
        """Laplace scale of the bin containing each size; NaN where no bin was fitted."""
        check_is_fitted(self, "laplace_fits_")
        scales = np.array([f.scale for f in self.laplace_fits_] + [math.nan])
        return scales[self._bin_of(X)]

    def score_samples(self, X, y):
        """Log density of each log growth ``y`` under its bin's Laplace fit."""
        check_is_fitted(self, "laplace_fits_")
        k = self._bin_of(X)
        loc = np.array([f.location for f in self.laplace_fits_] + [math.nan])[k]
        scale = np.array([f.scale for f in self.laplace_fits_] + [math.nan])[k]
        y = np.asarray(y, dtype=float)
        return -np.log(2.0 * scale) - np.abs(y - loc) / scale


class MovingWindowScaling(BaseEstimator):
    """Pooled moving-window power-law fits on a FirmPanel plus convergence detection.

    Attributes
    ----------
    series_ : WindowSeries
    convergence_ : ConvergenceResult
    onset_year_ : int or None
    """

    def __init__(self, window_length=5, n_bins=10, min_count=5, max_growth_pct=1000.0,
                 measure=None, threshold=0.1, persistence=3):
        self.window_length = window_length
        self.n_bins = n_bins
        self.min_count = min_count
        self.max_growth_pct = max_growth_pct
        self.measure = measure
        self.threshold = threshold
        self.persistence = persistence

    def fit(self, X, y=None):
        panel = check_panel(X)
        self.series_ = moving_window_fits(panel, self.measure, self.window_length, self.n_bins,
                                          self.min_count, self.max_growth_pct)
        self.convergence_ = detect_convergence(self.series_, self.threshold, self.persistence)
        self.onset_year_ = self.convergence_.onset_year
        return self
