import hashlib
import json

import pytest

from firmscaling.cli import main
from firmscaling.report import render_sector_table
from firmscaling.scaling import RegressionFit


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def laplace_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "laplace", "--seed", "1", "--n-firms", "20000", "--n-years", "3",
                 "--start-year", "1974", "--classification", "201010", "--out", str(out)]) == 0
    return out / "panel.tsv"


def test_render_sector_table_matches_paper_row_format():
    fit = RegressionFit(slope=-0.256, intercept=0.421, r_squared=0.957, slope_std_err=0.0127, n_points=20,
                        n_obs=40908)
    text = render_sector_table({"Manufacturing": fit})
    header, row = text.splitlines()
    assert header.startswith("Name\tSlope\tIntercept\tRSqr\tStd-Err\tNo.Data Points")
    assert row.startswith("Manufacturing\t-0.256\t0.421\t0.957\t0.0127\t40908")


def test_render_failure_row():
    text = render_sector_table({"Utilities": None})
    row = text.splitlines()[1].split("\t")
    assert row[0] == "Utilities" and row[-1] == "insufficient-data"
    assert all(c == "" for c in row[1:-1])
    with pytest.raises(ValueError):
        render_sector_table({})


def test_synth_prints_seed_and_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    assert main(["synth", "laplace", "--seed", "1", "--n-firms", "300", "--out", str(a)]) == 0
    assert "seed=1" in capsys.readouterr().out
    assert main(["synth", "laplace", "--seed", "1", "--n-firms", "300", "--out", str(b)]) == 0
    assert _sha(a) == _sha(b)


def test_synth_validation(tmp_path, capsys):
    assert main(["synth", "units", "--unit-sigma", "0.6", "--n-firms", "10", "--out", str(tmp_path)]) == 2
    assert main(["synth", "emerging", "--schedule", "1990:100,1995:50", "--n-years", "10",
                 "--out", str(tmp_path)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["synth", "pareto"])
    assert exc.value.code == 1


def test_analyze_recovers_exponent(laplace_file, tmp_path, capsys):
    assert main(["analyze", "--input", str(laplace_file), "--bins", "20", "--out", str(tmp_path)]) == 0
    header, row = (tmp_path / "fit.tsv").read_text().splitlines()
    assert abs(float(row.split("\t")[1]) + 0.25) <= 0.02
    for name in ("bins.tsv", "plotdata.tsv"):
        assert (tmp_path / name).exists()
    plot = (tmp_path / "plotdata.tsv").read_text().splitlines()
    assert plot[0] == "ln_center\tln_sigma\tfitted_ln_sigma\tcount"
    assert len(plot) > 10


def test_analyze_name_carries_filters(laplace_file, tmp_path):
    assert main(["analyze", "--input", str(laplace_file), "--prefix", "20", "--years", "1974:1993",
                 "--out", str(tmp_path)]) == 0
    row = (tmp_path / "fit.tsv").read_text().splitlines()[1]
    assert row.startswith("prefix=20 years=1974:1993\t")


def test_analyze_empty_filter(laplace_file, tmp_path, capsys):
    assert main(["analyze", "--input", str(laplace_file), "--prefix", "35", "--out", str(tmp_path)]) == 2
    assert "prefix=35" in capsys.readouterr().err


def test_analyze_fit_failure_exit_code(tmp_path, capsys):
    panel = tmp_path / "p.csv"
    panel.write_text("firm_id,year,sales\nA,2000,1\nA,2001,2\nB,2000,3\nB,2001,3.5\n")
    assert main(["analyze", "--input", str(panel), "--out", str(tmp_path)]) == 3
    assert "fit failed" in capsys.readouterr().err


def test_analyze_usage_errors(laplace_file, tmp_path):
    assert main(["analyze", "--out", str(tmp_path)]) == 1
    assert main(["analyze", "--input", str(laplace_file), "--synth", "laplace", "--out", str(tmp_path)]) == 1
    assert main(["analyze", "--input", str(tmp_path / "missing.tsv"), "--out", str(tmp_path)]) == 2
    assert main(["analyze", "--input", str(laplace_file), "--bins", "1", "--out", str(tmp_path)]) == 1


def test_analyze_jsonl_and_config_precedence(laplace_file, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# run settings\nbins = 10\nformat = jsonl\nmin-count = 3\n")
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["analyze", "--config", str(cfg), "--input", str(laplace_file), "--out", str(out1)]) == 0
    rows = [json.loads(line) for line in (out1 / "bins.jsonl").read_text().splitlines()]
    assert len(rows) == 10
    assert main(["analyze", "--config", str(cfg), "--bins", "30", "--input", str(laplace_file),
                 "--out", str(out2)]) == 0
    assert len((out2 / "bins.jsonl").read_text().splitlines()) == 30
    fit = json.loads((out2 / "fit.jsonl").read_text())
    assert fit["Status"] == "ok" and abs(fit["Slope"] + 0.25) < 0.03


def test_analyze_from_synth_spec(tmp_path):
    assert main(["analyze", "--synth", "gibrat", "--seed", "42", "--n-firms", "10000", "--n-years", "6",
                 "--out", str(tmp_path)]) == 0
    row = (tmp_path / "fit.tsv").read_text().splitlines()[1].split("\t")
    assert abs(float(row[1])) <= 0.02


def test_schema_mapping_from_config(tmp_path):
    panel = tmp_path / "p.csv"
    lines = ["gvkey,fyear,revt"] + [f"F{i},{y},{(i + 1) * 10 ** (y - 2000)}" for i in range(3) for y in (2000, 2001)]
    panel.write_text("\n".join(lines) + "\n")
    cfg = tmp_path / "schema.cfg"
    cfg.write_text("schema.firm_id = gvkey\nschema.year = fyear\nschema.sales = revt\n")
    assert main(["validate", "--config", str(cfg), "--input", str(panel)]) == 0


def test_validate(tmp_path, capsys):
    panel = tmp_path / "p.csv"
    panel.write_text("firm_id,year,sales\nA,1990,1\nA,1990,2\nA,1991,-3\nB,1990,\n")
    assert main(["validate", "--input", str(panel)]) == 0
    out = capsys.readouterr().out
    assert "record_count\t4" in out and "duplicate_keys\t1" in out and "negative_values\t1" in out
    assert "missing_sales\t1" in out


def test_window_emerging(tmp_path, capsys):
    synth = tmp_path / "emerging.tsv"
    assert main(["synth", "emerging", "--seed", "3", "--n-firms", "514", "--n-years", "30",
                 "--start-year", "1980", "--out", str(synth)]) == 0
    out = tmp_path / "w"
    assert main(["window", "--input", str(synth), "--out", str(out)]) == 0
    assert (out / "convergence.txt").read_text().startswith("converged at 1980")
    lines = (out / "windows.tsv").read_text().splitlines()
    assert lines[0] == "start_year\tend_year\tbeta\tslope_std_err\tresid_std_err\tr_squared\tn_obs\tn_firms\tstatus"
    assert len(lines) == 1 + 25


def test_window_too_long(laplace_file, tmp_path):
    assert main(["window", "--input", str(laplace_file), "--window-len", "5", "--out", str(tmp_path)]) == 2


def test_report_sector_table(tmp_path, capsys):
    panel = tmp_path / "two.tsv"
    assert main(["synth", "laplace", "--seed", "2", "--n-firms", "3000", "--classification", "151010",
                 "--out", str(panel)]) == 0
    assert main(["report", "--input", str(panel), "--prefix", "Materials=15", "--prefix", "Energy=10",
                 "--bins", "10", "--out", str(tmp_path)]) == 0
    rows = [line.split("\t") for line in (tmp_path / "sectors.tsv").read_text().splitlines()]
    assert [r[0] for r in rows[1:]] == ["Materials", "Energy"]
    assert rows[1][-1] == "ok" and rows[2][-1] == "insufficient-data"
