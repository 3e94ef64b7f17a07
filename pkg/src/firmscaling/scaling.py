"""Conditional growth statistics: log binning, OLS on log-log axes, Laplace fits."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateFitError, InsufficientDataError
from .growth import ObservationSet

LN10 = math.log(10.0)


@dataclass(frozen=True)
class BinRow:
    """Aggregate of the observations whose initial size falls in one log bin.

    ``lo``/``hi`` are the bin edges in size units; ``center`` is their
    geometric mean. ``sigma`` is the sample (n-1) standard deviation of
    log growth.
    """

    index: int
    lo: float
    hi: float
    center: float
    count: int
    sigma: float
    mean_log_growth: float
    closed_right: bool = False
    log_lo: float = math.nan
    log_hi: float = math.nan

    def contains(self, s0: np.ndarray) -> np.ndarray:
        """Membership test using the same log-space edges as the binning itself."""
        s0 = np.asarray(s0, dtype=float)
        lo = math.log(self.lo) if math.isnan(self.log_lo) else self.log_lo
        hi = math.log(self.hi) if math.isnan(self.log_hi) else self.log_hi
        x = np.log(s0)
        upper = x <= hi if self.closed_right else x < hi
        return (x >= lo) & upper


@dataclass(frozen=True)
class BinTable:
    bins: list[BinRow]
    n_bins_requested: int
    log_range: tuple[float, float]
    min_count: int
    edges: np.ndarray = field(repr=False)
    dropped: list[BinRow] = field(default_factory=list)
    n_observations: int = 0

    @property
    def centers(self) -> np.ndarray:
        return np.array([b.center for b in self.bins])

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([b.sigma for b in self.bins])

    @property
    def counts(self) -> np.ndarray:
        return np.array([b.count for b in self.bins], dtype=np.int64)


@dataclass(frozen=True)
class RegressionFit:
    """Least-squares line ``y = slope * x + intercept``.

    For power-law fits ``x = ln S0`` and ``y = ln sigma`` so ``beta = -slope``
    and the amplitude is ``exp(intercept)``. ``n_obs`` is the number of
    underlying growth observations (equal to ``n_points`` for a bare OLS).
    """

    slope: float
    intercept: float
    r_squared: float
    slope_std_err: float
    n_points: int
    residual_std_err: float = 0.0
    intercept_std_err: float = 0.0
    n_obs: int = 0

    @property
    def beta(self) -> float:
        return -self.slope

    @property
    def amplitude(self) -> float:
        return math.exp(self.intercept)

    @property
    def intercept_log10(self) -> float:
        """Intercept of the same line drawn on base-10 axes."""
        return self.intercept / LN10

    def predict(self, x):
        return self.slope * np.asarray(x, dtype=float) + self.intercept


@dataclass(frozen=True)
class LaplaceFit:
    location: float
    scale: float
    n: int
    log_likelihood: float

    @property
    def std(self) -> float:
        return self.scale * math.sqrt(2.0)


def log_bin_arrays(s0, log_growth, n_bins: int, min_count: int = 5) -> BinTable:
    """Equal-width binning in ``ln s0`` with per-bin sample standard deviations.

    Edges run from the smallest to the largest observed size. Bins are
    closed on the left; the last bin is closed on both sides. Bins with fewer
    than ``min_count`` members go to ``dropped``.
    """
    s0 = np.asarray(s0, dtype=float)
    r = np.asarray(log_growth, dtype=float)
    if n_bins < 2:
        raise ValueError(f"n_bins must be at least 2, got {n_bins}")
    if min_count < 2:
        raise ValueError(f"min_count must be at least 2, got {min_count}")
    if s0.shape != r.shape or s0.ndim != 1:
        raise ValueError("s0 and log_growth must be 1-d arrays of equal length")
    if np.any(~(s0 > 0)):
        raise ValueError("initial sizes must be strictly positive")
    if len(np.unique(s0)) < 2:
        raise InsufficientDataError("need at least 2 distinct initial sizes to bin")

    x = np.log(s0)
    lo, hi = float(x.min()), float(x.max())
    edges = np.linspace(lo, hi, n_bins + 1)
    idx = np.searchsorted(edges[1:-1], x, side="right")

    counts = np.bincount(idx, minlength=n_bins)
    sums = np.bincount(idx, weights=r, minlength=n_bins)
    means = np.divide(sums, counts, out=np.zeros(n_bins), where=counts > 0)
    sq = np.bincount(idx, weights=(r - means[idx]) ** 2, minlength=n_bins)

    size_edges = np.exp(edges)
    size_edges[0], size_edges[-1] = s0.min(), s0.max()
    kept, dropped = [], []
    for i in range(n_bins):
        n = int(counts[i])
        sigma = math.sqrt(sq[i] / (n - 1)) if n >= 2 else math.nan
        row = BinRow(
            index=i,
            lo=float(size_edges[i]),
            hi=float(size_edges[i + 1]),
            center=math.exp(0.5 * (edges[i] + edges[i + 1])),
            count=n,
            sigma=sigma,
            mean_log_growth=float(means[i]) if n else math.nan,
            closed_right=i == n_bins - 1,
            log_lo=float(edges[i]),
            log_hi=float(edges[i + 1]),
        )
        (kept if n >= min_count else dropped).append(row)
    if not kept:
        raise InsufficientDataError(
            f"all {n_bins} bins hold fewer than {min_count} observations; data too sparse to fit"
        )
    return BinTable(bins=kept, n_bins_requested=n_bins, log_range=(lo, hi), min_count=min_count,
                    edges=size_edges, dropped=dropped, n_observations=len(s0))


def log_bin(obs: ObservationSet, n_bins: int, min_count: int = 5) -> BinTable:
    return log_bin_arrays(obs.s0, obs.log_growth, n_bins, min_count)


def ols(xs, ys) -> RegressionFit:
    """Ordinary least squares for one regressor plus intercept.

    Raises
    ------
    InsufficientDataError
        Fewer than 3 points.
    DegenerateFitError
        All ``xs`` equal, or all ``ys`` equal (R^2 undefined).
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-d sequences of equal length")
    n = len(x)
    if n < 3:
        raise InsufficientDataError(f"ols needs at least 3 points, got {n}")
    if np.all(x == x[0]):
        raise DegenerateFitError("zero variance in xs")
    if np.all(y == y[0]):
        raise DegenerateFitError("zero variance in ys; R^2 undefined")

    xbar, ybar = x.mean(), y.mean()
    dx, dy = x - xbar, y - ybar
    sxx = float(dx @ dx)
    sxy = float(dx @ dy)
    sst = float(dy @ dy)
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    resid = y - (slope * x + intercept)
    sse = float(resid @ resid)
    s2 = sse / (n - 2)
    return RegressionFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=float(min(1.0, max(0.0, 1.0 - sse / sst))),
        slope_std_err=math.sqrt(s2 / sxx),
        n_points=n,
        residual_std_err=math.sqrt(s2),
        intercept_std_err=math.sqrt(s2 * (1.0 / n + xbar * xbar / sxx)),
        n_obs=n,
    )


def fit_power_law(table: BinTable) -> RegressionFit:
    """Fit ``sigma = a * center**(-beta)`` by unweighted OLS of ln sigma on ln center.

    Rows with zero sigma are skipped with a warning.
    """
    rows = [b for b in table.bins if b.sigma > 0]
    skipped = len(table.bins) - len(rows)
    if skipped:
        warnings.warn(f"{skipped} bin(s) with zero sigma excluded from the power-law fit", RuntimeWarning,
                      stacklevel=2)
    if len(rows) < 3:
        raise InsufficientDataError(f"power-law fit needs at least 3 usable bins, got {len(rows)}")
    x = np.log([b.center for b in rows])
    y = np.log([b.sigma for b in rows])
    fit = ols(x, y)
    return RegressionFit(**{**fit.__dict__, "n_obs": table.n_observations})


def fit_laplace(values) -> LaplaceFit:
    """Maximum-likelihood Laplace fit: median location, mean absolute deviation scale."""
    v = np.asarray(values, dtype=float)
    n = len(v)
    if n < 2:
        raise InsufficientDataError(f"Laplace fit needs at least 2 values, got {n}")
    loc = float(np.median(v))
    scale = float(np.mean(np.abs(v - loc)))
    if scale == 0.0:
        raise DegenerateFitError("all values identical; Laplace scale is zero")
    return LaplaceFit(location=loc, scale=scale, n=n, log_likelihood=-n * math.log(2.0 * scale) - n)


def fit_conditional_laplace(obs: ObservationSet, bin: BinRow, min_obs: int = 10) -> LaplaceFit:
    """Laplace fit of the log growth of observations whose ``s0`` lies in ``bin``."""
    values = obs.log_growth[bin.contains(obs.s0)]
    if len(values) < min_obs:
        raise InsufficientDataError(f"bin {bin.index} holds {len(values)} observations, need {min_obs}")
    return fit_laplace(values)
