import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from firmscaling import FirmPanel, FirmRecord, ObservationSet, extract_growth_observations, filter_outliers, pool
from firmscaling.growth import log_growth_matches_ratio, read_observations, write_observations


def _panel(*rows):
    return FirmPanel.from_records(FirmRecord(*r) for r in rows)


def test_single_doubling():
    obs = extract_growth_observations(_panel(("A", 1990, "20", 100.0), ("A", 1991, "20", 200.0)), "sales")
    (o,) = list(obs)
    assert o.ratio == 2.0
    assert o.log_growth == pytest.approx(0.6931, abs=1e-4)
    assert (o.firm_id, o.year0, o.s0, o.s1, o.classification) == ("A", 1990, 100.0, 200.0, "20")


def test_year_gap_produces_nothing():
    obs = extract_growth_observations(_panel(("A", 1990, "20", 1.0), ("A", 1992, "20", 2.0)), "sales")
    assert len(obs) == 0
    assert obs.filter_log["missing"] == 1


def test_zero_initial_size_is_nonpositive():
    obs = extract_growth_observations(_panel(("A", 1990, "20", 0.0), ("A", 1991, "20", 2.0)), "sales")
    assert len(obs) == 0
    assert obs.filter_log["nonpositive"] == 1


def test_absent_measure_counts_missing(small_panel):
    obs = extract_growth_observations(small_panel, "employees")
    assert len(obs) == 3
    assert obs.filter_log["missing"] == 1
    assert obs.n_candidates == 4


def test_unknown_measure(small_panel):
    with pytest.raises(ValueError):
        extract_growth_observations(small_panel, "profit")


def test_pairs_never_cross_firms():
    obs = extract_growth_observations(_panel(("A", 1990, "20", 1.0), ("B", 1991, "20", 5.0)), "sales")
    assert len(obs) == 0
    assert obs.n_candidates == 0


def _obs(ratios):
    ratios = np.asarray(ratios, dtype=float)
    n = len(ratios)
    return ObservationSet(firm_id=np.array([f"F{i}" for i in range(n)]), year0=np.full(n, 2000),
                          s0=np.ones(n), s1=ratios.copy(), ratio=ratios, log_growth=np.log(ratios),
                          classification=np.full(n, "20"))


def test_outlier_rule():
    out = filter_outliers(_obs([15.0, 11.0, 0.01, 1.0]))
    assert sorted(out.ratio) == [0.01, 1.0, 11.0]
    assert out.filter_log["outlier"] == 1


def test_outlier_boundary_exact():
    obs = ObservationSet(
        firm_id=np.array(["A", "B"]), year0=np.array([2000, 2000]), s0=np.array([1.0, 1.0]),
        s1=np.array([11.0, 11.000001]), ratio=np.array([11.0, 11.000001]),
        log_growth=np.log([11.0, 11.000001]), classification=np.array(["20", "20"]),
    )
    kept = filter_outliers(obs)
    assert list(kept.ratio) == [11.0]


def test_outlier_threshold_must_be_positive():
    with pytest.raises(ValueError):
        filter_outliers(_obs([1.0]), 0)


def test_infinite_threshold_is_identity(small_panel):
    obs = extract_growth_observations(small_panel, "sales")
    assert filter_outliers(obs, math.inf) == obs


def _years_obs(years):
    years = np.asarray(years)
    return ObservationSet.from_arrays(np.ones(len(years)), np.zeros(len(years)), year0=years)


def test_pool_window():
    obs = _years_obs(range(1975, 1995))
    assert sorted(pool(obs, 1981, 1985).year0) == [1981, 1982, 1983, 1984, 1985]
    assert len(pool(obs, 1990, 1990)) == 1
    assert len(pool(obs, 2000, 2004)) == 0
    with pytest.raises(ValueError):
        pool(obs, 1985, 1981)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1980, 1999), max_size=40), st.integers(1980, 1990), st.integers(0, 5),
       st.integers(0, 5))
def test_pool_partitions(years, a, w1, w2):
    obs = _years_obs(years)
    b, c = a + w1, a + w1 + 1 + w2
    joined = ObservationSet.concat([pool(obs, a, b), pool(obs, b + 1, c)])
    assert sorted(joined.year0) == sorted(pool(obs, a, c).year0)


sizes = st.one_of(st.none(), st.floats(0, 1e9, allow_nan=False, allow_infinity=False))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("ABC"), st.integers(1990, 1995), sizes), max_size=25,
                unique_by=lambda r: (r[0], r[1])))
def test_extraction_accounting(rows):
    panel = FirmPanel.from_records(FirmRecord(f, y, "20", s) for f, y, s in rows)
    obs = extract_growth_observations(panel, "sales")
    n_adjacent = sum(1 for f in "ABC" for _ in range(max(0, sum(r[0] == f for r in rows) - 1)))
    assert obs.n_candidates == n_adjacent
    assert np.all(obs.s0 > 0) and np.all(obs.s1 > 0)
    assert np.array_equal(obs.ratio, obs.s1 / obs.s0)
    assert log_growth_matches_ratio(obs)


def test_observation_file_round_trip(small_panel):
    obs = extract_growth_observations(small_panel, "sales")
    buf = io.StringIO()
    write_observations(obs, buf)
    assert buf.getvalue().splitlines()[0] == "firm_id\tyear0\ts0\ts1\tratio\tlog_growth\tclassification"
    buf.seek(0)
    assert read_observations(buf) == obs
