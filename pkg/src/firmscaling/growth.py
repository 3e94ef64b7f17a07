"""One-year growth observations extracted from a firm panel.

Each observation pairs a firm's size in year ``t`` (``s0``) with its size in
year ``t + 1`` (``s1``).  Growth is the ratio ``s1 / s0`` and the log growth
rate is its natural logarithm.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .panel import FirmPanel, check_measure

OBS_COLUMNS = ("firm_id", "year0", "s0", "s1", "ratio", "log_growth", "classification")
FILTER_REASONS = ("missing", "nonpositive", "outlier")


@dataclass(frozen=True)
class GrowthObservation:
    firm_id: str
    year0: int
    s0: float
    s1: float
    ratio: float
    log_growth: float
    classification: str


def _empty_log() -> dict[str, int]:
    return {reason: 0 for reason in FILTER_REASONS}


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Column-oriented collection of growth observations.

    ``filter_log`` counts candidate pairs excluded so far, by reason.
    """

    firm_id: np.ndarray
    year0: np.ndarray
    s0: np.ndarray
    s1: np.ndarray
    ratio: np.ndarray
    log_growth: np.ndarray
    classification: np.ndarray
    measure: str = "sales"
    filter_log: dict[str, int] = field(default_factory=_empty_log)

    def __len__(self) -> int:
        return len(self.s0)

    def __iter__(self) -> Iterator[GrowthObservation]:
        for i in range(len(self)):
            yield GrowthObservation(str(self.firm_id[i]), int(self.year0[i]), float(self.s0[i]),
                                    float(self.s1[i]), float(self.ratio[i]), float(self.log_growth[i]),
                                    str(self.classification[i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ObservationSet):
            return NotImplemented
        return (self.measure == other.measure
                and all(np.array_equal(getattr(self, c), getattr(other, c)) for c in OBS_COLUMNS))

    __hash__ = None

    @property
    def n_candidates(self) -> int:
        return len(self) + sum(self.filter_log.values())

    @property
    def n_firms(self) -> int:
        return int(len(np.unique(self.firm_id)))

    def select(self, mask: np.ndarray, filter_log: dict[str, int] | None = None) -> ObservationSet:
        cols = {c: getattr(self, c)[mask] for c in OBS_COLUMNS}
        return ObservationSet(**cols, measure=self.measure,
                              filter_log=dict(self.filter_log if filter_log is None else filter_log))

    @classmethod
    def concat(cls, parts: list[ObservationSet]) -> ObservationSet:
        if not parts:
            raise ValueError("concat needs at least one ObservationSet")
        cols = {c: np.concatenate([getattr(p, c) for p in parts]) for c in OBS_COLUMNS}
        log = _empty_log()
        for p in parts:
            for k, v in p.filter_log.items():
                log[k] = log.get(k, 0) + v
        return cls(**cols, measure=parts[0].measure, filter_log=log)

    @classmethod
    def from_arrays(cls, s0, log_growth, *, year0=None, firm_id=None, classification=None,
                    measure: str = "sales") -> ObservationSet:
        """Build a set from bare ``(s0, log_growth)`` arrays; ``s1`` and ``ratio`` are derived."""
        s0 = np.asarray(s0, dtype=float)
        log_growth = np.asarray(log_growth, dtype=float)
        n = len(s0)
        ratio = np.exp(log_growth)
        return cls(
            firm_id=np.asarray(firm_id if firm_id is not None else [f"obs{i}" for i in range(n)]).astype(str),
            year0=np.asarray(year0 if year0 is not None else np.zeros(n), dtype=np.int64),
            s0=s0,
            s1=s0 * ratio,
            ratio=ratio,
            log_growth=log_growth,
            classification=np.asarray(classification if classification is not None else [""] * n).astype(str),
            measure=measure,
        )


def extract_growth_observations(panel: FirmPanel, measure: str | None = None) -> ObservationSet:
    """Turn consecutive-year size pairs into growth observations.

    Only pairs ``(t, t + 1)`` of the same firm with both sizes present and
    strictly positive yield an observation. Every adjacent pair of a firm's
    records is a candidate: year gaps and absent sizes are logged as
    ``missing``, zero sizes as ``nonpositive``.
    """
    measure = check_measure(measure or panel.size_measure_default)
    firm = panel.column("firm_id")
    year = panel.column("year")
    size = panel.column(measure)
    code = panel.column("classification")
    log = _empty_log()
    if len(firm) < 2:
        return ObservationSet.from_arrays([], [], measure=measure).select(slice(None), log)

    same_firm = firm[1:] == firm[:-1]
    cand = np.flatnonzero(same_firm)
    a, b = size[cand], size[cand + 1]
    consecutive = year[cand + 1] == year[cand] + 1
    present = consecutive & ~np.isnan(a) & ~np.isnan(b)
    positive = present & (a > 0) & (b > 0)
    log["missing"] = int((~present).sum())
    log["nonpositive"] = int((present & ~positive).sum())

    idx = cand[positive]
    s0 = size[idx]
    s1 = size[idx + 1]
    ratio = s1 / s0
    return ObservationSet(
        firm_id=firm[idx].copy(),
        year0=year[idx].copy(),
        s0=s0,
        s1=s1,
        ratio=ratio,
        log_growth=np.log(ratio),
        classification=code[idx].copy(),
        measure=measure,
        filter_log=log,
    )


def filter_outliers(obs: ObservationSet, max_growth_pct: float = 1000.0) -> ObservationSet:
    """Drop observations whose growth ``ratio - 1`` exceeds ``max_growth_pct`` percent.

    The default removes ratios strictly above 11. Shrinking firms are never removed.
    """
    if not max_growth_pct > 0:
        raise ValueError(f"max_growth_pct must be positive, got {max_growth_pct}")
    keep = (obs.ratio - 1.0) <= max_growth_pct / 100.0
    log = dict(obs.filter_log)
    log["outlier"] = log.get("outlier", 0) + int((~keep).sum())
    return obs.select(keep, log)


def pool(obs: ObservationSet, start_year: int, end_year: int) -> ObservationSet:
    """Keep observations with ``start_year <= year0 <= end_year``.

    A window ``[y, y + 4]`` therefore uses sizes up to year ``y + 5``. The
    filter log of the input is carried over unchanged.
    """
    if start_year > end_year:
        raise ValueError(f"pool window start {start_year} is after end {end_year}")
    return obs.select((obs.year0 >= start_year) & (obs.year0 <= end_year))


def growth_pipeline(panel: FirmPanel, measure: str | None = None,
                    max_growth_pct: float = 1000.0) -> ObservationSet:
    """Extraction followed by the outlier rule, the order used by every analysis."""
    return filter_outliers(extract_growth_observations(panel, measure), max_growth_pct)


def write_observations(obs: ObservationSet, fh, delimiter: str = "\t") -> None:
    writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    writer.writerow(OBS_COLUMNS)
    for o in obs:
        writer.writerow([o.firm_id, o.year0, repr(o.s0), repr(o.s1), repr(o.ratio),
                         repr(o.log_growth), o.classification])


def read_observations(fh, measure: str = "sales", delimiter: str = "\t") -> ObservationSet:
    reader = csv.DictReader(fh, delimiter=delimiter)
    rows = list(reader)
    missing = [c for c in OBS_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise ValueError(f"observation file lacks columns {missing}")
    return ObservationSet(
        firm_id=np.array([r["firm_id"] for r in rows], dtype=str) if rows else np.zeros(0, dtype="<U1"),
        year0=np.array([int(r["year0"]) for r in rows], dtype=np.int64),
        s0=np.array([float(r["s0"]) for r in rows]),
        s1=np.array([float(r["s1"]) for r in rows]),
        ratio=np.array([float(r["ratio"]) for r in rows]),
        log_growth=np.array([float(r["log_growth"]) for r in rows]),
        classification=np.array([r["classification"] for r in rows], dtype=str) if rows else np.zeros(0, dtype="<U1"),
        measure=measure,
    )


def log_growth_matches_ratio(obs: ObservationSet, rtol: float = 1e-12) -> bool:
    if len(obs) == 0:
        return True
    return bool(np.all(np.abs(np.exp(obs.log_growth) - obs.ratio) <= rtol * obs.ratio))


__all__ = [
    "GrowthObservation",
    "ObservationSet",
    "extract_growth_observations",
    "filter_outliers",
    "pool",
    "growth_pipeline",
    "write_observations",
    "read_observations",
    "log_growth_matches_ratio",
]
