"""End-to-end tests of the command line surface."""

import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from projpolya.cli import main
from projpolya.data import load_angles
from projpolya.projection import TWO_PI

FAST_FIT = ["--iterations", "300", "--burn-in", "100", "--thin", "5", "--quad-L", "60"]


def _read_table(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _manifest(out):
    return json.loads((Path(out) / "manifest.json").read_text())


class TestPriorSim:
    def test_outputs_and_moment_spread(self, tmp_path):
        out = tmp_path / "prior0"
        rc = main([
            "prior-sim", "--mu", "0,0", "--paths", "500", "--angles-grid", "64",
            "--seed", "5", "--out", str(out),
        ])
        assert rc == 0
        header, rows = _read_table(out / "moments.csv")
        assert header == ["path", "a1", "b1", "mean_direction", "concentration", "mean_defined"]
        assert len(rows) == 500
        conc = np.array([float(r[4]) for r in rows])
        iqr = np.percentile(conc, 75) - np.percentile(conc, 25)
        assert iqr > 0.15  # dispersed concentration at the origin

        header, rows = _read_table(out / "paths.csv")
        assert header == ["path", "theta", "density"]
        assert len(rows) == 500 * 64

    def test_far_location_concentrates(self, tmp_path):
        out = tmp_path / "prior5"
        rc = main([
            "prior-sim", "--mu", "5,5", "--paths", "500", "--angles-grid", "64",
            "--seed", "5", "--out", str(out),
        ])
        assert rc == 0
        _, rows = _read_table(out / "moments.csv")
        conc = np.array([float(r[4]) for r in rows])
        assert np.median(conc) > 0.8

    def test_reproducible(self, tmp_path):
        args = ["prior-sim", "--paths", "3", "--seed", "7", "--angles-grid", "64"]
        main(args + ["--out", str(tmp_path / "a")])
        main(args + ["--out", str(tmp_path / "b")])
        for name in ("paths.csv", "moments.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_plot_flag_writes_svg(self, tmp_path):
        out = tmp_path / "plot"
        main(["prior-sim", "--paths", "2", "--seed", "1", "--out", str(out), "--plot"])
        svg = (out / "paths.svg").read_text()
        assert svg.lstrip().startswith("<?xml")
        assert _manifest(out)["output.figure"] == "paths.svg"


class TestFit:
    def test_peccary_density_support(self, tmp_path):
        out = tmp_path / "fit"
        rc = main(["fit", "--dataset", "peccary", "--alpha", "0.5", "--seed", "3",
                   "--out", str(out)] + FAST_FIT)
        assert rc == 0
        header, rows = _read_table(out / "density.csv")
        assert header == ["theta", "mean", "lower", "upper"]
        grid = np.array([float(r[0]) for r in rows])
        mean = np.array([float(r[1]) for r in rows])
        assert np.all((grid > 0.0) & (grid <= TWO_PI))
        inside = (grid > 1.5) & (grid < 4.7)
        # mass visibly concentrated inside (1.5, 4.7)
        assert mean[inside].mean() > 3.0 * mean[~inside].mean()
        assert (out / "posterior.npz").exists()
        mani = _manifest(out)
        assert mani["command"] == "fit"
        assert mani["output.posterior"] == "posterior.npz"

    def test_reproducible(self, tmp_path):
        args = ["fit", "--dataset", "tapir", "--alpha", "1", "--seed", "9"] + FAST_FIT
        main(args + ["--out", str(tmp_path / "a")])
        main(args + ["--out", str(tmp_path / "b")])
        for name in ("density.csv", "moments.csv", "diagnostics.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_alpha_flags_conflict(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["fit", "--dataset", "peccary", "--alpha", "1", "--alpha-prior", "1,2",
                  "--out", str(tmp_path / "x")])
        assert exc.value.code == 2

    def test_bad_numeric_option(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["fit", "--dataset", "peccary", "--mu", "a,b", "--out", str(tmp_path / "x")])
        assert exc.value.code == 2

    def test_missing_data_file(self, tmp_path):
        rc = main(["fit", "--data", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "x")])
        assert rc == 1

    def test_parse_error_reports_line(self, tmp_path, capsys):
        data = tmp_path / "bad.csv"
        data.write_text("theta\n1.0\nnonsense\n")
        rc = main(["fit", "--data", str(data), "--out", str(tmp_path / "x")] + FAST_FIT)
        assert rc == 1
        assert "line 3" in capsys.readouterr().err

    def test_external_data_with_units(self, tmp_path):
        data = tmp_path / "hours.csv"
        data.write_text("hour\n6.0\n12.0\n18.0\n23.9\n3.1\n14.2\n9.9\n20.0\n")
        out = tmp_path / "fit"
        rc = main(["fit", "--data", str(data), "--unit", "clock24", "--alpha", "1",
                   "--seed", "1", "--out", str(out)] + FAST_FIT)
        assert rc == 0

    def test_hyper_prior_run(self, tmp_path):
        out = tmp_path / "fit"
        rc = main(["fit", "--dataset", "peccary", "--alpha-prior", "1,2", "--mu-prior", "0,1",
                   "--seed", "2", "--out", str(out)] + FAST_FIT)
        assert rc == 0
        _, rows = _read_table(out / "diagnostics.csv")
        metrics = {r[0]: float(r[1]) for r in rows}
        assert metrics["accept_rate_alpha"] > 0.0
        assert metrics["alpha_ci_lower"] < metrics["alpha_ci_upper"]


class TestScore:
    @pytest.fixture()
    def fitted(self, tmp_path):
        out = tmp_path / "fit"
        main(["fit", "--dataset", "peccary", "--alpha", "0.5", "--seed", "3",
              "--out", str(out)] + FAST_FIT)
        return out

    def test_lpml_default(self, fitted, tmp_path):
        out = tmp_path / "score"
        rc = main(["score", "--posterior", str(fitted / "posterior.npz"), "--out", str(out)])
        assert rc == 0
        _, rows = _read_table(out / "score.csv")
        metrics = dict((r[0], float(r[1])) for r in rows)
        assert "lpml" in metrics and metrics["lpml"] < 0.0
        header, cpo_rows = _read_table(out / "cpo.csv")
        assert len(cpo_rows) == 16

    def test_bf_on_fixed_alpha(self, fitted, tmp_path):
        out = tmp_path / "score"
        rc = main(["score", "--posterior", str(fitted / "posterior.npz"), "--bf", "--out", str(out)])
        assert rc == 0
        _, rows = _read_table(out / "score.csv")
        metrics = dict((r[0], float(r[1])) for r in rows)
        assert metrics["bf10"] > 0.0
        assert metrics["bf_log_numerator"] - metrics["bf_log_denominator"] == pytest.approx(
            math.log(metrics["bf10"]), rel=1e-6
        )

    def test_bf_refused_on_random_alpha(self, tmp_path, capsys):
        fit_out = tmp_path / "fit"
        main(["fit", "--dataset", "peccary", "--alpha-prior", "1,2", "--seed", "2",
              "--out", str(fit_out)] + FAST_FIT)
        rc = main(["score", "--posterior", str(fit_out / "posterior.npz"), "--bf",
                   "--out", str(tmp_path / "score")])
        assert rc == 1
        assert "fixed" in capsys.readouterr().err

    def test_empty_posterior_exits_one(self, tmp_path):
        empty = tmp_path / "posterior.npz"
        empty.write_bytes(b"")
        rc = main(["score", "--posterior", str(empty), "--out", str(tmp_path / "score")])
        assert rc == 1


class TestSimulate:
    def test_mixture_sample(self, tmp_path):
        out = tmp_path / "sim"
        rc = main(["simulate", "--model", "mixture", "--n", "500", "--seed", "1", "--out", str(out)])
        assert rc == 0
        sample = load_angles(out / "sample.csv")
        assert sample.n == 500
        assert np.all((sample.angles > 0.0) & (sample.angles <= TWO_PI))

    def test_projnormal_roundtrip(self, tmp_path):
        out = tmp_path / "sim"
        rc = main(["simulate", "--model", "projnormal", "--mu", "0,0", "--n", "50",
                   "--seed", "2", "--out", str(out)])
        assert rc == 0
        assert load_angles(out / "sample.csv").n == 50

    def test_default_mixture_components(self, tmp_path):
        # no overrides: weights (0.1, 0.2, 0.4, 0.3) and the four documented
        # locations; check via the manifest echo
        out = tmp_path / "sim"
        main(["simulate", "--model", "mixture", "--n", "10", "--seed", "3", "--out", str(out)])
        mani = _manifest(out)
        assert mani["option.weights"] == [0.1, 0.2, 0.4, 0.3]
        assert mani["option.locations"] == [[1.5, 1.5], [-1.0, 1.0], [-1.0, -2.0], [1.5, -1.5]]

    def test_reproducible(self, tmp_path):
        args = ["simulate", "--model", "mixture", "--n", "20", "--seed", "4"]
        main(args + ["--out", str(tmp_path / "a")])
        main(args + ["--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "sample.csv").read_bytes() == (tmp_path / "b" / "sample.csv").read_bytes()

    def test_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--model", "mixture", "--n", "0", "--out", str(tmp_path / "x")])
        assert exc.value.code == 2

    def test_bad_weights_are_usage_errors(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--model", "mixture", "--n", "5", "--weights", "0.5,0.5,0.5,0.5",
                  "--out", str(tmp_path / "x")])
        assert exc.value.code == 2


class TestExperimentTable1:
    def test_grid_has_nine_rows(self, tmp_path):
        out = tmp_path / "exp"
        rc = main(["experiment-table1", "--n", "60", "--seed", "1", "--out", str(out), "--plot",
                   "--iterations", "200", "--burn-in", "50", "--thin", "5", "--quad-L", "50"])
        assert rc == 0
        assert (out / "table1.svg").exists()
        header, rows = _read_table(out / "table1.csv")
        assert header == ["mu1", "mu2", "alpha", "lpml"]
        assert len(rows) == 9
        mus = [(float(r[0]), float(r[1])) for r in rows]
        assert mus == [(0.0, 0.0)] * 3 + [(1.0, 1.0)] * 3 + [(2.0, 2.0)] * 3
        alphas = [float(r[2]) for r in rows]
        assert alphas == [0.5, 1.0, 2.0] * 3
        assert (out / "sample.csv").exists()
