import csv
import json

import numpy as np
import pytest

from semitrans import cli
from semitrans.config import RunConfig, config_keys, parse_config
from semitrans.data_io import emit_report, load_csv, load_json, read_mc_csv, report_dict
from semitrans.errors import (
    ConfigError,
    InvalidValue,
    IoError,
    MissingColumn,
    NonNumericCell,
    ParseError,
    UnknownKey,
)
from semitrans.estimators import BandwidthPolicy, ThetaGrid, fit
from semitrans.inference import bootstrap_md
from semitrans.simulation import DgpSpec, generate, run_mc

SMALL_GRID = ThetaGrid(-0.5, 1.5, 0.25)


def write(path, text):
    path.write_text(text)
    return path


def write_dataset(path, data):
    rows = ["y,x1,x2"]
    rows += [",".join(repr(float(v)) for v in (y, *x)) for y, x in zip(data.y, data.x)]
    return write(path, "\n".join(rows) + "\n")


@pytest.fixture(scope="module")
def data():
    return generate(DgpSpec(1, 0.5, 50, seed=8))


@pytest.fixture(scope="module")
def result(data):
    return fit(data, "boxcox", "md", SMALL_GRID, BandwidthPolicy.fixed(0.3))


class TestLoadCsv:
    def test_basic(self, tmp_path):
        d = load_csv(write(tmp_path / "d.csv", "y,x1,x2\n1.5,0.1,0.2\n2,-0.3,1e-2\n3.25,.5,0\n"))
        assert d.n == 3 and d.d == 2
        assert d.y.tolist() == [1.5, 2.0, 3.25]
        assert d.x[1].tolist() == [-0.3, 0.01]

    def test_y_anywhere_case_insensitive(self, tmp_path):
        d = load_csv(write(tmp_path / "d.csv", "a,Y,b\n1,2,3\n4,5,6\n"))
        assert d.y.tolist() == [2.0, 5.0]
        assert d.x.tolist() == [[1.0, 3.0], [4.0, 6.0]]

    def test_missing_y(self, tmp_path):
        with pytest.raises(MissingColumn):
            load_csv(write(tmp_path / "d.csv", "x1,x2\n1,2\n"))

    def test_nan_cell(self, tmp_path):
        with pytest.raises(NonNumericCell) as info:
            load_csv(write(tmp_path / "d.csv", "y,x1\n1,2\n3,NaN\n"))
        assert info.value.row == 3 and info.value.column == "x1"

    @pytest.mark.parametrize("cell", ["1,5", "inf", "abc", "", "1_000"])
    def test_rejects_non_decimal(self, tmp_path, cell):
        with pytest.raises(ParseError):
            load_csv(write(tmp_path / "d.csv", f'y,x1\n1,"{cell}"\n'))

    def test_ragged_and_empty(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(write(tmp_path / "a.csv", "y,x1\n1,2,3\n"))
        with pytest.raises(ParseError):
            load_csv(write(tmp_path / "b.csv", ""))
        with pytest.raises(ParseError):
            load_csv(write(tmp_path / "c.csv", "y,x1\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            load_csv(tmp_path / "nope.csv")


class TestParseConfig:
    def test_defaults(self, tmp_path):
        assert parse_config(write(tmp_path / "c.cfg", "")) == RunConfig()
        assert parse_config() == RunConfig()
        cfg = RunConfig()
        assert (cfg.family, cfg.method, cfg.grid, cfg.kernel, cfg.h0) == \
            ("boxcox", "md", (-0.5, 1.5, 0.0625), "quartic", 0.5)

    def test_flag_wins(self, tmp_path):
        path = write(tmp_path / "c.cfg", "method = pl\n# comment\nh0 = 0.3  # trailing\n")
        cfg = parse_config(path, {"method": "md", "h0": None})
        assert cfg.method == "md" and cfg.h0 == 0.3

    def test_grid_excludes_hi(self):
        cfg = parse_config(overrides={"grid": "0,1,0.3"})
        assert np.allclose(cfg.theta_grid.values(), [0.0, 0.3, 0.6, 0.9])

    def test_unknown_key(self, tmp_path):
        with pytest.raises(UnknownKey):
            parse_config(write(tmp_path / "c.cfg", "colour = red\n"))

    @pytest.mark.parametrize("key,value", [("method", "ols"), ("h0", "-1"), ("grid", "1,0,0.1"),
                                           ("level", "1.5"), ("kernel", "box"), ("h0", "nan")])
    def test_invalid_value(self, key, value):
        with pytest.raises(InvalidValue) as info:
            parse_config(overrides={key: value})
        assert key in str(info.value)

    def test_alias_and_case(self, tmp_path):
        cfg = parse_config(write(tmp_path / "c.cfg", "Transform = zellner\nB = 50\n"))
        assert cfg.family == "zellner" and cfg.B == 50

    def test_malformed_line(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(write(tmp_path / "c.cfg", "method pl\n"))

    def test_per_coordinate_conflicts_with_cv(self):
        with pytest.raises(InvalidValue):
            parse_config(overrides={"h_per_coord": "0.3,0.4", "bandwidth": "cv"})

    def test_keys_listed(self):
        assert {"family", "method", "grid", "cv_grid", "seed", "B", "level"} <= set(config_keys())


class TestEmitReport:
    def test_estimation_json(self, tmp_path, result):
        emit_report(result, "json", tmp_path / "r.json")
        doc = load_json(tmp_path / "r.json")
        assert {"theta_hat", "method", "curve", "diagnostics"} <= set(doc)
        assert doc == report_dict(result)
        assert doc["theta_hat"] == result.theta_hat

    def test_curve_csv(self, tmp_path, result):
        emit_report(result, "csv", tmp_path / "r.csv")
        rows = list(csv.reader((tmp_path / "r.csv").open()))
        assert rows[0] == ["theta", "value"]
        skipped = len(result.diagnostics["skipped"])
        assert len(rows) - 1 == SMALL_GRID.values().size - skipped

    def test_curve_csv_with_skipped_cells(self, tmp_path):
        data = generate(DgpSpec(3, 0.0, 60, seed=2))
        res = fit(data, "zellner", "md", policy=BandwidthPolicy.fixed(0.4))
        emit_report(res, "csv", tmp_path / "z.csv")
        lines = (tmp_path / "z.csv").read_text().splitlines()
        skipped = len(res.diagnostics["skipped"])
        assert skipped > 0
        assert len(lines) - 1 == ThetaGrid().values().size - skipped

    def test_bootstrap_round_trip(self, tmp_path, data, result):
        boot = bootstrap_md(data, "boxcox", SMALL_GRID, BandwidthPolicy.fixed(0.3), B=3, rng=1,
                            original=result)
        emit_report(boot, "json", tmp_path / "b.json")
        assert load_json(tmp_path / "b.json") == report_dict(boot)

    def test_mc_round_trip(self, tmp_path):
        report = run_mc(theta_os=(0.0, 0.5), methods=("md", "pl"), n=30, reps=2, seed=3,
                        grid=SMALL_GRID)
        emit_report(report, "csv", tmp_path / "mc.csv")
        back = read_mc_csv(tmp_path / "mc.csv")
        assert set(back.cells) == set(report.cells)
        for k, c in report.cells.items():
            b = back.cells[k]
            assert (b.mean, b.sd, b.mse, b.reps) == (c.mean, c.sd, c.mse, c.reps)
        emit_report(report, "json", tmp_path / "mc.json")
        assert load_json(tmp_path / "mc.json") == report_dict(report)

    def test_idempotent(self, tmp_path, result):
        path = tmp_path / "r.json"
        emit_report(result, "json", path)
        first = path.read_bytes()
        emit_report(result, "json", path)
        assert path.read_bytes() == first
        assert [p.name for p in tmp_path.iterdir()] == ["r.json"]

    def test_non_finite_become_null(self, tmp_path):
        emit_report({"a": float("inf"), "b": np.float64(1.5)}, "json", tmp_path / "x.json")
        assert load_json(tmp_path / "x.json") == {"a": None, "b": 1.5}

    def test_unknown_format(self, tmp_path, result):
        with pytest.raises(ValueError):
            emit_report(result, "xml", tmp_path / "r.xml")

    def test_unwritable(self, tmp_path, result):
        blocker = write(tmp_path / "file", "x")
        with pytest.raises(IoError):
            emit_report(result, "json", blocker / "r.json")


class TestCli:
    @pytest.fixture
    def csv_path(self, tmp_path, data):
        return write_dataset(tmp_path / "data.csv", data)

    def test_fit(self, tmp_path, csv_path, result, capsys):
        out = tmp_path / "out" / "fit.json"
        code = cli.main(["fit", str(csv_path), "--grid", "-0.5,1.5,0.25", "--h0", "0.3",
                         "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["theta_hat"] == result.theta_hat
        assert (tmp_path / "out" / "fit.csv").exists()
        assert "theta_hat" in capsys.readouterr().out

    def test_bootstrap_deterministic(self, tmp_path, csv_path):
        args = ["bootstrap", str(csv_path), "--grid", "-0.5,1.5,0.25", "--h0", "0.3", "--B", "3",
                "--seed", "5"]
        assert cli.main(args + ["--out", str(tmp_path / "a.json")]) == 0
        assert cli.main(args + ["--out", str(tmp_path / "b.json")]) == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_cv(self, tmp_path, csv_path, capsys):
        code = cli.main(["cv", str(csv_path), "--theta", "0.5", "--cv-grid", "0.3,0.5",
                         "--out", str(tmp_path / "cv.json")])
        assert code == 0
        doc = load_json(tmp_path / "cv.json")
        assert len(doc["scores"]) == 4
        assert capsys.readouterr().out.count("*") == 1

    def test_simulate(self, tmp_path):
        code = cli.main(["simulate", "--thetas", "0.5", "--n", "30", "--reps", "2",
                         "--grid", "-0.5,1.5,0.25", "--out", str(tmp_path / "mc.csv")])
        assert code == 0
        assert read_mc_csv(tmp_path / "mc.csv").cells
        assert load_json(tmp_path / "mc.json")["reps"] == 2

    def test_config_file(self, tmp_path, csv_path):
        cfg = write(tmp_path / "run.cfg", "grid = -0.5,1.5,0.5\nh0 = 0.3\nmethod = pl\n")
        out = tmp_path / "f.json"
        assert cli.main(["fit", str(csv_path), "--config", str(cfg), "--method", "md",
                         "--out", str(out)]) == 0
        doc = load_json(out)
        assert doc["method"] == "md" and len(doc["curve"]) == 5

    def test_exit_codes(self, tmp_path, csv_path):
        assert cli.main(["fit", str(csv_path), "--method", "ols"]) == 2
        assert cli.main(["fit", str(csv_path), "--config", str(tmp_path / "none.cfg")]) == 2
        assert cli.main(["fit", str(tmp_path / "missing.csv")]) == 3
        bad = write(tmp_path / "bad.csv", "y,x1\n1,NaN\n")
        assert cli.main(["fit", str(bad)]) == 3
        neg = write(tmp_path / "neg.csv", "y,x1\n-1,0.1\n2,0.2\n3,0.3\n")
        assert cli.main(["fit", str(neg)]) == 3

    def test_estimation_failure_exit(self, tmp_path):
        # every grid cell leaves the Zellner-Revankar domain for these large responses
        path = write(tmp_path / "big.csv", "y,x1\n" + "".join(f"{50 + i},{i / 10}\n" for i in range(10)))
        assert cli.main(["fit", str(path), "--transform", "zellner", "--grid", "-1,-0.5,0.25"]) == 4
