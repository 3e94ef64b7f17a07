"""Command-line interface: ``firmscaling {validate,analyze,window,synth,report}``.

Exit status: 0 success, 1 usage error, 2 data or validation error, 3 fit failure.
Settings resolve as command-line flag, then ``--config`` key=value file, then
built-in default.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import report
from .exceptions import PanelFormatError, ScalingError
from .growth import growth_pipeline
from .panel import FirmPanel, filter_classification, filter_years, load_panel, panel_to_bytes, validate_panel
from .scaling import fit_power_law, log_bin
from .synth import MODELS, SynthConfig, gen_emerging_industry, gen_gibrat, gen_power_law_laplace, gen_units
from .windows import detect_convergence, moving_window_fits

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_FIT = 0, 1, 2, 3

DEFAULTS = {
    "measure": "sales",
    "bins": 20,
    "min_count": 5,
    "max_growth_pct": 1000.0,
    "window_len": 5,
    "se_threshold": 0.1,
    "persistence": 3,
    "format": "tsv",
    "out": ".",
    "seed": 0,
    "n_firms": 20000,
    "n_years": 3,
    "size_range": "10:1000000",
    "start_year": 1990,
    "classification": "20",
    "beta": 0.25,
    "a": 1.0,
    "sigma_eps": 0.2,
    "unit_sigma": 0.2,
    "schedule": None,
    "schema": None,
}

# window analyses default to the coarser binning used for young industries
WINDOW_DEFAULTS = {"bins": 10}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _year_range(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A:B, got {text!r}") from None


def _add_input(p):
    p.add_argument("--input", help="panel file (tab- or comma-delimited, header row)")
    p.add_argument("--schema", help="column mapping, e.g. firm_id=gvkey,year=fyear,classification=gics")
    p.add_argument("--config", help="key=value file supplying defaults for any flag")


def _add_analysis(p):
    p.add_argument("--measure", choices=("sales", "employees", "assets"))
    p.add_argument("--years", type=_year_range, help="inclusive year range A:B")
    p.add_argument("--bins", type=int)
    p.add_argument("--min-count", type=int)
    p.add_argument("--max-growth-pct", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=report.FORMATS)


def _add_synth(p, *, as_source: bool):
    if as_source:
        p.add_argument("--synth", choices=MODELS, help="analyse a generated panel instead of --input")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-firms", type=int)
    p.add_argument("--n-years", type=int)
    p.add_argument("--size-range", help="log-uniform initial size range LO:HI")
    p.add_argument("--start-year", type=int)
    p.add_argument("--classification")
    p.add_argument("--beta", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--sigma-eps", type=float)
    p.add_argument("--unit-sigma", type=float)
    p.add_argument("--schedule", help="emerging entry schedule YEAR:COUNT,YEAR:COUNT,...")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="firmscaling", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="report counts, rejects and missing values of a panel")
    _add_input(p)

    p = sub.add_parser("analyze", help="pooled bin table and power-law fit")
    _add_input(p)
    _add_analysis(p)
    p.add_argument("--prefix", help="classification prefix filter (2/4/6/8 digits)")
    _add_synth(p, as_source=True)

    p = sub.add_parser("window", help="moving-window fits and convergence onset")
    _add_input(p)
    _add_analysis(p)
    p.add_argument("--prefix")
    p.add_argument("--window-len", type=int)
    p.add_argument("--se-threshold", type=float)
    p.add_argument("--persistence", type=int)
    _add_synth(p, as_source=True)

    p = sub.add_parser("synth", help="write a synthetic panel file")
    p.add_argument("model", choices=MODELS)
    p.add_argument("--config")
    p.add_argument("--out", help="output directory or .tsv/.csv file path")
    _add_synth(p, as_source=False)

    p = sub.add_parser("report", help="sector table: one fit per classification prefix")
    _add_input(p)
    _add_analysis(p)
    p.add_argument("--prefix", action="append", default=None,
                   help="PREFIX or NAME=PREFIX; repeat for several sectors")
    return parser


def read_config(path: str) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if key.startswith("schema."):
                field = key.split(".", 1)[1]
                prev = values.get("schema")
                values["schema"] = f"{prev},{field}={value}" if prev else f"{field}={value}"
            else:
                values[key] = value
    return values


class Settings:
    """Flag > config file > default lookup with type coercion from the default's type."""

    def __init__(self, args: argparse.Namespace, extra_defaults: dict | None = None):
        self.args = args
        self.config = read_config(args.config) if getattr(args, "config", None) else {}
        self.defaults = {**DEFAULTS, **(extra_defaults or {})}

    def __getattr__(self, name):
        value = getattr(self.args, name, None)
        if value is not None:
            return value
        if name in self.config:
            raw = self.config[name]
            default = self.defaults.get(name)
            try:
                if name == "years":
                    return _year_range(raw)
                if isinstance(default, bool):
                    return raw.lower() in ("1", "true", "yes")
                if isinstance(default, int):
                    return int(raw)
                if isinstance(default, float):
                    return float(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config value {name}={raw!r}: {exc}") from None
            return raw
        return self.defaults.get(name)


def _parse_pair(text: str, what: str) -> tuple[float, float]:
    try:
        a, b = text.split(":")
        return float(a), float(b)
    except ValueError:
        raise UsageError(f"{what} must be LO:HI, got {text!r}") from None


def parse_schedule(text: str) -> dict[int, int]:
    schedule = {}
    try:
        for part in text.split(","):
            year, count = part.split(":")
            schedule[int(year)] = int(count)
    except ValueError:
        raise UsageError(f"schedule must be YEAR:COUNT,..., got {text!r}") from None
    return schedule


def synth_config(s: Settings) -> SynthConfig:
    return SynthConfig(
        n_firms=int(s.n_firms),
        n_years=int(s.n_years),
        seed=int(s.seed),
        size_range=_parse_pair(str(s.size_range), "--size-range"),
        start_year=int(s.start_year),
        classification=str(s.classification),
    )


def generate(model: str, s: Settings) -> FirmPanel:
    """Build the synthetic panel for ``model``; ValueError on invalid parameters."""
    cfg = synth_config(s)
    if model == "gibrat":
        return gen_gibrat(cfg, float(s.sigma_eps))
    if model == "units":
        return gen_units(cfg, float(s.unit_sigma))
    if model == "laplace":
        return gen_power_law_laplace(cfg, float(s.beta), float(s.a))
    if model == "emerging":
        if s.schedule:
            schedule = parse_schedule(str(s.schedule))
        else:
            y0 = cfg.start_year
            schedule = {y0: 53, y0 + 11: 214, y0 + 24: 514}
        return gen_emerging_industry(cfg, float(s.beta), float(s.a), schedule)
    raise UsageError(f"unknown model {model!r}")


def _load_source(s: Settings) -> FirmPanel:
    has_input = bool(s.input)
    has_synth = bool(getattr(s.args, "synth", None))
    if has_input == has_synth:
        raise UsageError("give exactly one of --input or --synth")
    if has_input:
        return load_panel(s.input, s.schema, size_measure_default=s.measure)
    try:
        return generate(s.args.synth, s)
    except ValueError as exc:
        raise DataError(f"invalid synth parameters: {exc}") from None


def _apply_filters(panel: FirmPanel, prefix: str | None, years) -> tuple[FirmPanel, str]:
    parts = []
    if prefix:
        try:
            panel = filter_classification(panel, prefix)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        parts.append(f"prefix={prefix}")
    if years:
        try:
            panel = filter_years(panel, *years)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        parts.append(f"years={years[0]}:{years[1]}")
    name = " ".join(parts) if parts else "all"
    if len(panel) == 0:
        raise DataError(f"filter {name} leaves an empty panel")
    return panel, name


def _out_dir(s: Settings) -> Path:
    out = Path(s.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fit_file_text(name: str, fit, fmt: str) -> str:
    if fmt == "tsv":
        return report.render_sector_table({name: fit})
    row = (name, fit.slope, fit.intercept, fit.r_squared, fit.slope_std_err, fit.n_obs,
           fit.intercept_log10, fit.residual_std_err, "ok")
    return report.format_rows(report.SECTOR_COLUMNS, [row], "jsonl")


def cmd_validate(args) -> int:
    s = Settings(args)
    if not s.input:
        raise UsageError("validate needs --input")
    panel = load_panel(s.input, s.schema)
    sys.stdout.write(validate_panel(panel).to_text())
    return EXIT_OK


def cmd_analyze(args) -> int:
    s = Settings(args)
    fmt = s.format
    panel, name = _apply_filters(_load_source(s), s.prefix, s.years)
    obs = growth_pipeline(panel, s.measure, s.max_growth_pct)
    try:
        table = log_bin(obs, s.bins, s.min_count)
        fit = fit_power_law(table)
    except ScalingError as exc:
        raise ScalingError(f"fit failed for {name} ({len(obs)} observations): {exc}") from None
    out = _out_dir(s)
    report.write_text(out / f"bins.{fmt}", report.format_rows(report.BIN_COLUMNS, report.bin_rows(table), fmt))
    report.write_text(out / f"fit.{fmt}", _fit_file_text(name, fit, fmt))
    report.write_text(out / f"plotdata.{fmt}",
                      report.format_rows(report.PLOT_COLUMNS, report.plot_rows(table, fit), fmt))
    sys.stdout.write(report.render_sector_table({name: fit}))
    return EXIT_OK


def cmd_window(args) -> int:
    s = Settings(args, WINDOW_DEFAULTS)
    fmt = s.format
    panel, name = _apply_filters(_load_source(s), s.prefix, s.years)
    span = panel.year_span
    if span[1] - span[0] < s.window_len:
        raise DataError(f"panel spans {span[0]}..{span[1]}, too short for {s.window_len}-year windows")
    series = moving_window_fits(panel, s.measure, s.window_len, s.bins, s.min_count, s.max_growth_pct,
                                label=name)
    result = detect_convergence(series, s.se_threshold, s.persistence)
    out = _out_dir(s)
    report.write_text(out / f"windows.{fmt}",
                      report.format_rows(report.WINDOW_COLUMNS, report.window_rows(series), fmt))
    report.write_text(out / "convergence.txt", report.convergence_text(result))
    sys.stdout.write(report.convergence_text(result))
    return EXIT_OK


def cmd_synth(args) -> int:
    s = Settings(args)
    try:
        panel = generate(args.model, s)
    except ValueError as exc:
        raise DataError(f"invalid synth parameters: {exc}") from None
    out = Path(s.out)
    if out.suffix.lower() in (".tsv", ".csv", ".txt"):
        out.parent.mkdir(parents=True, exist_ok=True)
        path = out
    else:
        out.mkdir(parents=True, exist_ok=True)
        path = out / "panel.tsv"
    delimiter = "," if path.suffix.lower() == ".csv" else "\t"
    path.write_bytes(panel_to_bytes(panel, delimiter))
    sys.stdout.write(f"seed={s.seed}\nwrote {path} ({len(panel)} records, {panel.firm_count} firms)\n")
    return EXIT_OK


def cmd_report(args) -> int:
    s = Settings(args)
    fmt = s.format
    if not s.input:
        raise UsageError("report needs --input")
    panel = load_panel(s.input, s.schema, size_measure_default=s.measure)
    specs = args.prefix or []
    if not specs and "prefix" in s.config:
        specs = [p.strip() for p in s.config["prefix"].split(",") if p.strip()]
    if not specs:
        raise UsageError("report needs at least one --prefix")
    fits = {}
    for pair in specs:
        label, _, prefix = pair.rpartition("=")
        try:
            sub, name = _apply_filters(panel, prefix, s.years)
            fits[label or name] = fit_power_law(log_bin(growth_pipeline(sub, s.measure, s.max_growth_pct),
                                                        s.bins, s.min_count))
        except (DataError, ScalingError):
            fits[label or f"prefix={prefix}"] = None
    text = report.render_sector_table(fits)
    if fmt == "jsonl":
        rows = []
        for name, fit in fits.items():
            if fit is None:
                rows.append((name, None, None, None, None, None, None, None, "insufficient-data"))
            else:
                rows.append((name, fit.slope, fit.intercept, fit.r_squared, fit.slope_std_err, fit.n_obs,
                             fit.intercept_log10, fit.residual_std_err, "ok"))
        file_text = report.format_rows(report.SECTOR_COLUMNS, rows, "jsonl")
    else:
        file_text = text
    report.write_text(_out_dir(s) / f"sectors.{fmt}", file_text)
    sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "analyze": cmd_analyze,
    "window": cmd_window,
    "synth": cmd_synth,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"firmscaling: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, PanelFormatError, OSError) as exc:
        print(f"firmscaling: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ScalingError as exc:
        print(f"firmscaling: fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT
    except ValueError as exc:
        print(f"firmscaling: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

