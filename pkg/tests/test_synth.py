import math

import numpy as np
import pytest
from scipy import stats

from firmscaling import (
    SynthConfig,
    extract_growth_observations,
    fit_conditional_laplace,
    fit_power_law,
    gen_emerging_industry,
    gen_gibrat,
    gen_power_law_laplace,
    gen_units,
    growth_pipeline,
    log_bin,
)
from firmscaling.exceptions import InsufficientDataError
from firmscaling.panel import panel_to_bytes
from firmscaling.synth import cumulative_counts, firm_rng


def _beta(panel, n_bins=20):
    return fit_power_law(log_bin(growth_pipeline(panel), n_bins)).beta


@pytest.mark.parametrize("bad", [
    dict(n_firms=0, n_years=3),
    dict(n_firms=1, n_years=1),
    dict(n_firms=1, n_years=3, size_range=(10.0, 1.0)),
    dict(n_firms=1, n_years=3, size_range=(0.0, 1.0)),
    dict(n_firms=1, n_years=3, seed=-1),
    dict(n_firms=1, n_years=3, classification="123"),
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        SynthConfig(**bad)


def test_determinism_byte_identical():
    cfg = SynthConfig(300, 4, seed=9)
    assert panel_to_bytes(gen_power_law_laplace(cfg, 0.25)) == panel_to_bytes(gen_power_law_laplace(cfg, 0.25))
    assert panel_to_bytes(gen_gibrat(cfg, 0.2)) == panel_to_bytes(gen_gibrat(cfg, 0.2))
    assert panel_to_bytes(gen_units(cfg, 0.2)) == panel_to_bytes(gen_units(cfg, 0.2))


def test_firm_streams_do_not_depend_on_panel_size():
    small = gen_power_law_laplace(SynthConfig(10, 4, seed=3), 0.25)
    large = gen_power_law_laplace(SynthConfig(40, 4, seed=3), 0.25)
    first = {(r.firm_id, r.year): r.sales for r in large if r.firm_id < "F000010"}
    assert first == {(r.firm_id, r.year): r.sales for r in small}


def test_firm_stream_is_philox_keyed_by_seed_and_index():
    panel = gen_gibrat(SynthConfig(5, 2, seed=11, size_range=(1.0, math.e)), 0.2)
    rng = firm_rng(11, 4)
    u, eps = rng.random(), rng.standard_normal()
    f4 = [r.sales for r in panel if r.firm_id == "F000004"]
    assert f4[0] == pytest.approx(math.exp(u), rel=1e-12)
    assert f4[1] == pytest.approx(math.exp(u + 0.2 * eps), rel=1e-12)


def test_gibrat_beta_zero():
    panel = gen_gibrat(SynthConfig(10_000, 6, seed=42), 0.2)
    assert abs(_beta(panel)) <= 0.02


def test_gibrat_vanishing_noise():
    obs = extract_growth_observations(gen_gibrat(SynthConfig(200, 3, seed=1), 1e-8), "sales")
    assert np.max(np.abs(obs.log_growth)) < 1e-6


def test_units_rejects_sigma_out_of_range():
    with pytest.raises(ValueError):
        gen_units(SynthConfig(10, 3), 0.6)
    with pytest.raises(ValueError):
        gen_units(SynthConfig(10, 3), 0.0)


def test_units_single_unit_firms_cannot_be_binned():
    panel = gen_units(SynthConfig(200, 2, seed=1, size_range=(1.0, 1.4)), 0.2)
    assert set(extract_growth_observations(panel, "sales").s0) == {1.0}
    with pytest.raises(InsufficientDataError):
        log_bin(growth_pipeline(panel), 20)


def test_units_scale_equivariance():
    a = _beta(gen_units(SynthConfig(4000, 4, seed=7, size_range=(10.0, 1e5)), 0.2))
    b = _beta(gen_units(SynthConfig(4000, 4, seed=7, size_range=(20.0, 2e5)), 0.2))
    assert abs(a - 0.5) <= 0.03
    assert abs(a - b) <= 0.03


def test_laplace_beta_zero_is_gibrat_like():
    panel = gen_power_law_laplace(SynthConfig(20_000, 3, seed=1), 0.0, 0.3)
    assert abs(_beta(panel)) <= 0.02


def test_laplace_parameter_validation():
    cfg = SynthConfig(10, 3)
    with pytest.raises(ValueError):
        gen_power_law_laplace(cfg, 1.5)
    with pytest.raises(ValueError):
        gen_power_law_laplace(cfg, 0.25, a=0.0)


def test_laplace_middle_bin_scale():
    obs = growth_pipeline(gen_power_law_laplace(SynthConfig(20_000, 3, seed=1), 0.25, 1.0))
    table = log_bin(obs, 20)
    middle = table.bins[len(table.bins) // 2]
    fit = fit_conditional_laplace(obs, middle)
    expected = middle.center ** -0.25 / math.sqrt(2)
    assert abs(fit.scale - expected) <= 0.10 * expected


@pytest.fixture(scope="module")
def narrow_slice():
    s, beta, a = 1000.0, 0.25, 1.0
    panel = gen_power_law_laplace(SynthConfig(100_000, 2, seed=5, size_range=(s, 1.05 * s)), beta, a)
    obs = extract_growth_observations(panel, "sales")
    return obs, s, beta, a


@pytest.mark.slow
def test_moment_in_narrow_slice(narrow_slice):
    obs, s, beta, a = narrow_slice
    assert len(obs) == 100_000
    assert abs(np.std(obs.log_growth, ddof=1) / (a * s ** -beta) - 1) <= 0.03


@pytest.mark.slow
def test_laplace_excess_kurtosis(narrow_slice):
    obs, _, beta, a = narrow_slice
    standardized = obs.log_growth / (a * obs.s0 ** -beta)
    assert abs(stats.kurtosis(standardized, fisher=True) - 3.0) <= 0.3


def test_cumulative_schedule():
    years = np.arange(1980, 2010)
    cum = cumulative_counts({1980: 53, 1991: 214, 2004: 514}, years)
    assert cum[0] == 53 and cum[11] == 214 and cum[24] == 514 and cum[-1] == 514
    assert np.all(np.diff(cum) >= 0)
    assert cumulative_counts({1985: 10}, years)[4] == 0


def test_emerging_population_follows_schedule():
    cfg = SynthConfig(600, 30, seed=2, start_year=1980)
    panel = gen_emerging_industry(cfg, 0.25, 1.0, {1980: 53, 1991: 214, 2004: 514})
    years = panel.column("year")
    assert (years == 1980).sum() == 53
    assert (years == 1991).sum() == 214
    assert (years == 2004).sum() == 514
    assert panel.firm_count == 514
    assert panel_to_bytes(panel) == panel_to_bytes(
        gen_emerging_industry(cfg, 0.25, 1.0, {1980: 53, 1991: 214, 2004: 514}))


@pytest.mark.parametrize("schedule", [{1980: 100, 1990: 50}, {1980: 10, 2050: 20}, {1980: 700}, {}])
def test_emerging_rejects_bad_schedule(schedule):
    with pytest.raises(ValueError):
        gen_emerging_industry(SynthConfig(600, 30, start_year=1980), 0.25, 1.0, schedule)
