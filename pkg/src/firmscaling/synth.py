"""Seeded synthetic firm panels with known growth-fluctuation scaling.

Random numbers come from numpy's Philox-4x64-10 counter-based generator.
Firm ``i`` of a run with seed ``s`` owns the stream keyed by the two 64-bit
words ``(s, i)``, so every firm's trajectory is independent of how many
other firms are generated and of the order in which they are generated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import stats

from .panel import FirmPanel, check_code

# Firms above this many units draw the yearly aggregate from its moment-matched
# normal instead of summing individual units.
EXACT_UNIT_LIMIT = 1000
SIZE_FLOOR_FACTOR = 0.01


@dataclass(frozen=True)
class SynthConfig:
    n_firms: int
    n_years: int
    seed: int = 0
    size_range: tuple[float, float] = (10.0, 1.0e6)
    start_year: int = 1990
    classification: str = "20"

    def __post_init__(self):
        if self.n_firms < 1:
            raise ValueError(f"n_firms must be >= 1, got {self.n_firms}")
        if self.n_years < 2:
            raise ValueError(f"n_years must be >= 2, got {self.n_years}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        s_min, s_max = self.size_range
        if not (0 < s_min < s_max):
            raise ValueError(f"size_range must satisfy 0 < s_min < s_max, got {self.size_range}")
        if not (1950 <= self.start_year and self.start_year + self.n_years - 1 <= 2100):
            raise ValueError("panel years must fall within 1950..2100")
        check_code(self.classification)

    @property
    def years(self) -> np.ndarray:
        return np.arange(self.start_year, self.start_year + self.n_years)


def firm_rng(seed: int, firm_index: int) -> np.random.Generator:
    """Independent generator for one firm: Philox keyed by ``(seed, firm_index)``."""
    key = np.array([seed, firm_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _log_uniform(u: np.ndarray, size_range: tuple[float, float]) -> np.ndarray:
    lo, hi = math.log(size_range[0]), math.log(size_range[1])
    return lo + u * (hi - lo)


def _draw(cfg: SynthConfig, sampler, n_firms: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-firm uniform for the initial size plus ``n_years - 1`` innovations."""
    n_firms = cfg.n_firms if n_firms is None else n_firms
    u = np.empty(n_firms)
    z = np.empty((n_firms, cfg.n_years - 1))
    for i in range(n_firms):
        rng = firm_rng(cfg.seed, i)
        u[i] = rng.random()
        z[i] = sampler(rng, cfg.n_years - 1)
    return u, z


def _to_panel(cfg: SynthConfig, sizes: np.ndarray, present: np.ndarray | None = None,
              label: str = "") -> FirmPanel:
    n_firms, n_years = sizes.shape
    ids = np.repeat(np.array([f"F{i:06d}" for i in range(n_firms)]), n_years)
    years = np.tile(cfg.years, n_firms)
    flat = sizes.ravel()
    if present is not None:
        keep = present.ravel()
        ids, years, flat = ids[keep], years[keep], flat[keep]
    codes = np.full(len(ids), cfg.classification)
    return FirmPanel.from_arrays(ids, years, codes, sales=flat,
                                 provenance=f"synth:{label} seed={cfg.seed}")


def sigma_of_size(size, beta: float, a: float) -> np.ndarray:
    """Standard deviation of log growth imposed by the power-law generators."""
    return a * np.asarray(size, dtype=float) ** (-beta)


def _laplace_scale(log_s: np.ndarray, cfg: SynthConfig, beta: float, a: float) -> np.ndarray:
    # sizes that wander far below the sampled range keep the fluctuation of
    # SIZE_FLOOR_FACTOR * s_min; without the cap small firms diffuse to 0 or inf
    floor = math.log(cfg.size_range[0] * SIZE_FLOOR_FACTOR)
    return sigma_of_size(np.exp(np.maximum(log_s, floor)), beta, a) / math.sqrt(2.0)


def _evolve_laplace(log_s0: np.ndarray, z: np.ndarray, cfg: SynthConfig, beta: float, a: float) -> np.ndarray:
    log_s = np.empty((len(log_s0), z.shape[1] + 1))
    log_s[:, 0] = log_s0
    for t in range(z.shape[1]):
        log_s[:, t + 1] = log_s[:, t] + _laplace_scale(log_s[:, t], cfg, beta, a) * z[:, t]
    return np.exp(log_s)


def gen_gibrat(cfg: SynthConfig, sigma_eps: float) -> FirmPanel:
    """Gibrat process: ``S[t+1] = S[t] * exp(eps)``, ``eps ~ Normal(0, sigma_eps**2)``."""
    if not sigma_eps > 0:
        raise ValueError(f"sigma_eps must be positive, got {sigma_eps}")
    u, z = _draw(cfg, lambda rng, k: rng.standard_normal(k))
    log_s = _log_uniform(u, cfg.size_range)[:, None] + np.concatenate(
        [np.zeros((cfg.n_firms, 1)), np.cumsum(sigma_eps * z, axis=1)], axis=1)
    return _to_panel(cfg, np.exp(log_s), label="gibrat")


def _unit_moments(unit_sigma: float) -> tuple[float, float]:
    a = -1.0 / unit_sigma
    mean, var = stats.truncnorm.stats(a, np.inf, loc=0.0, scale=unit_sigma, moments="mv")
    return float(mean), float(var)


def gen_units(cfg: SynthConfig, unit_sigma: float) -> FirmPanel:
    """Firms made of ``K`` independent unit-size subunits.

    ``K`` is log-uniform on ``size_range`` (rounded, at least 1) and fixed per
    firm. Each year every unit grows by ``1 + eta`` with ``eta`` normal,
    truncated to keep units positive, and the firm grows by the mean unit
    factor, so the log-growth spread falls off like ``K**-0.5``. Firms start
    at size ``K``.
    """
    if not 0 < unit_sigma <= 0.5:
        raise ValueError(f"unit_sigma must lie in (0, 0.5], got {unit_sigma}")
    m, v = _unit_moments(unit_sigma)
    n_steps = cfg.n_years - 1
    k_units = np.empty(cfg.n_firms, dtype=np.int64)
    factors = np.empty((cfg.n_firms, n_steps))
    for i in range(cfg.n_firms):
        rng = firm_rng(cfg.seed, i)
        k = max(1, int(round(math.exp(_log_uniform(rng.random(), cfg.size_range)))))
        k_units[i] = k
        for t in range(n_steps):
            if k <= EXACT_UNIT_LIMIT:
                eta = unit_sigma * rng.standard_normal(k)
                bad = eta <= -1.0
                while bad.any():
                    eta[bad] = unit_sigma * rng.standard_normal(int(bad.sum()))
                    bad = eta <= -1.0
                factors[i, t] = 1.0 + eta.mean()
            else:
                factors[i, t] = 1.0 + m + math.sqrt(v / k) * rng.standard_normal()
    sizes = k_units[:, None] * np.concatenate([np.ones((cfg.n_firms, 1)), np.cumprod(factors, axis=1)], axis=1)
    return _to_panel(cfg, sizes, label="units")


def _check_power_law(beta: float, a: float) -> None:
    if not 0 <= beta <= 1:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")


def gen_power_law_laplace(cfg: SynthConfig, beta: float, a: float = 1.0) -> FirmPanel:
    """Laplace log growth with standard deviation ``a * S**-beta`` at current size ``S``."""
    _check_power_law(beta, a)
    u, z = _draw(cfg, lambda rng, k: rng.laplace(0.0, 1.0, k))
    sizes = _evolve_laplace(_log_uniform(u, cfg.size_range), z, cfg, beta, a)
    return _to_panel(cfg, sizes, label="laplace")


def cumulative_counts(schedule: Mapping[int, int], years: np.ndarray) -> np.ndarray:
    """Cumulative firm count per year: zero before the first entry year,
    linear interpolation between schedule points, flat after the last."""
    keys = sorted(schedule)
    counts = [int(schedule[k]) for k in keys]
    out = np.interp(years, keys, counts, left=0, right=counts[-1])
    out[years < keys[0]] = 0
    return np.floor(out + 0.5).astype(np.int64)


def gen_emerging_industry(cfg: SynthConfig, beta: float, a: float,
                          entry_schedule: Mapping[int, int]) -> FirmPanel:
    """Power-law Laplace growth in an industry whose firm population grows.

    ``entry_schedule`` maps calendar year to cumulative firm count. Firm ``i``
    enters in the first year the cumulative count exceeds ``i`` and starts at
    a log-uniform size. Firms beyond the final count never appear.
    """
    _check_power_law(beta, a)
    if not entry_schedule:
        raise ValueError("entry_schedule is empty")
    keys = sorted(entry_schedule)
    counts = [int(entry_schedule[k]) for k in keys]
    if any(c < 0 for c in counts):
        raise ValueError("entry_schedule counts must be non-negative")
    if any(b < a_ for a_, b in zip(counts, counts[1:])):
        raise ValueError(f"entry_schedule must be non-decreasing, got {dict(zip(keys, counts))}")
    if counts[-1] > cfg.n_firms:
        raise ValueError(f"final cumulative count {counts[-1]} exceeds n_firms {cfg.n_firms}")
    years = cfg.years
    if keys[0] < years[0] or keys[-1] > years[-1]:
        raise ValueError(f"entry_schedule years must lie within {years[0]}..{years[-1]}")

    cum = cumulative_counts(entry_schedule, years)
    n_active = int(cum[-1])
    u, z = _draw(cfg, lambda rng, k: rng.laplace(0.0, 1.0, k), n_active)
    # first year index with cum > i
    entry = np.searchsorted(cum, np.arange(n_active), side="right")

    log_s = np.empty((n_active, cfg.n_years))
    log_s0 = _log_uniform(u, cfg.size_range)
    for t in range(cfg.n_years):
        entering = entry == t
        log_s[entering, t] = log_s0[entering]
        live = entry < t
        if t > 0 and live.any():
            prev = log_s[live, t - 1]
            log_s[live, t] = prev + _laplace_scale(prev, cfg, beta, a) * z[live, t - 1]
    present = np.arange(cfg.n_years)[None, :] >= entry[:, None]
    log_s[~present] = 0.0
    return _to_panel(cfg, np.exp(log_s), present=present, label="emerging")


MODELS = ("gibrat", "units", "laplace", "emerging")
