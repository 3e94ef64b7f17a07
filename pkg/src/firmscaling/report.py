"""Tabular and line-oriented output: sector tables, bin tables, window series."""
from __future__ import annotations

import json
import math
import os
from typing import Iterable, Mapping, Sequence

from .scaling import BinTable, RegressionFit
from .windows import ConvergenceResult, WindowSeries

SECTOR_COLUMNS = ("Name", "Slope", "Intercept", "RSqr", "Std-Err", "No.Data Points",
                  "Intercept-log10", "Resid-SE", "Status")
BIN_COLUMNS = ("bin", "lo", "hi", "center", "count", "sigma", "mean_log_growth", "status")
PLOT_COLUMNS = ("ln_center", "ln_sigma", "fitted_ln_sigma", "count")
WINDOW_COLUMNS = ("start_year", "end_year", "beta", "slope_std_err", "resid_std_err", "r_squared",
                  "n_obs", "n_firms", "status")
FORMATS = ("tsv", "jsonl")


def render_sector_table(fits: Mapping[str, RegressionFit | None]) -> str:
    """Tab-separated table in the column order of a sector exponent table.

    A ``None`` fit renders as an ``insufficient-data`` row with blank numbers.
    """
    if not fits:
        raise ValueError("render_sector_table needs at least one fit")
    lines = ["\t".join(SECTOR_COLUMNS)]
    for name, fit in fits.items():
        if fit is None:
            cells = [name, "", "", "", "", "", "", "", "insufficient-data"]
        else:
            cells = [
                name,
                f"{fit.slope:.3f}",
                f"{fit.intercept:.3f}",
                f"{fit.r_squared:.3f}",
                f"{fit.slope_std_err:.4f}",
                str(fit.n_obs),
                f"{fit.intercept_log10:.3f}",
                f"{fit.residual_std_err:.4f}",
                "ok",
            ]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def _jsonable(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def format_rows(columns: Sequence[str], rows: Iterable[Sequence], fmt: str = "tsv") -> str:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    if fmt == "tsv":
        out = ["\t".join(columns)]
        out.extend("\t".join(_cell(v) for v in row) for row in rows)
    else:
        out = [json.dumps({c: _jsonable(v) for c, v in zip(columns, row)}) for row in rows]
    return "\n".join(out) + "\n"


def bin_rows(table: BinTable) -> list[tuple]:
    rows = [(b.index, b.lo, b.hi, b.center, b.count, b.sigma, b.mean_log_growth, "kept") for b in table.bins]
    rows += [(b.index, b.lo, b.hi, b.center, b.count, b.sigma, b.mean_log_growth, "dropped")
             for b in table.dropped]
    return sorted(rows, key=lambda r: r[0])


def plot_rows(table: BinTable, fit: RegressionFit) -> list[tuple]:
    rows = []
    for b in table.bins:
        if b.sigma > 0:
            x = math.log(b.center)
            rows.append((x, math.log(b.sigma), fit.slope * x + fit.intercept, b.count))
    return rows


def window_rows(series: WindowSeries) -> list[tuple]:
    rows = []
    for e in series.entries:
        if e.ok:
            f = e.fit
            rows.append((e.start_year, e.end_year, f.beta, f.slope_std_err, f.residual_std_err, f.r_squared,
                         e.n_obs, e.n_firms, e.status))
        else:
            rows.append((e.start_year, e.end_year, None, None, None, None, e.n_obs, e.n_firms, e.status))
    return rows


def convergence_text(result: ConvergenceResult) -> str:
    return result.summary() + "\n"


def write_text(path: str | os.PathLike, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
