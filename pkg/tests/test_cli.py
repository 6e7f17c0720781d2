import csv

import pytest

from mlaucb.cli import main, quantile_rows

FAST = ["--set", "run.horizon=60", "--set", "run.replications=3"]


def _run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


class TestSimulate:
    def test_writes_outputs(self, tmp_path):
        assert _run(tmp_path, "simulate", "--config", "fig4d", *FAST) == 0
        assert (tmp_path / "results.csv").exists() and (tmp_path / "summary.json").exists()
        assert (tmp_path / "trace.csv").exists()

    def test_short_horizon_is_config_error(self, tmp_path, capsys):
        assert _run(tmp_path, "simulate", "--set", "run.horizon=20") == 2
        assert "run.horizon" in capsys.readouterr().err

    def test_same_seed_same_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--seed", "7", "--out", str(a), *FAST]) == 0
        assert main(["simulate", "--seed", "7", "--out", str(b), *FAST]) == 0
        assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()
        assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()

    def test_unknown_key(self, tmp_path):
        assert _run(tmp_path, "simulate", "--set", "run.colour=red") == 2

    def test_bad_threads(self, tmp_path):
        assert _run(tmp_path, "simulate", "--threads", "0") == 2

    def test_bad_seed(self, tmp_path):
        with pytest.raises(SystemExit):
            _run(tmp_path, "simulate", "--seed", "-1")


def test_sweep(tmp_path):
    assert _run(tmp_path, "sweep", "--set", "sweep.grid=0,100", "--set", "run.policies=mla_ucb", *FAST) == 0
    with open(tmp_path / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["param_value"] for r in rows} == {"0.0", "100.0"}


class TestQuantileTable:
    def test_defaults(self, tmp_path):
        assert _run(tmp_path, "quantile-table") == 0
        with open(tmp_path / "quantile_table.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == ["s", "d", "bound", "quantile", "gap"]
        assert all(float(r["gap"]) > 0 for r in rows)

    def test_single_point(self):
        [(s, d, bound, q, gap)] = quantile_rows([1000.0], [6])
        assert gap > 0 and bound > q > 0

    def test_d_one(self, tmp_path):
        assert _run(tmp_path, "quantile-table", "--set", "quantile_table.d=1") == 2

    def test_s_not_above_one(self, tmp_path):
        assert _run(tmp_path, "quantile-table", "--set", "quantile_table.s=1,10") == 2

    def test_default_d_rule_below_two(self, tmp_path):
        # floor(log 5) = 1
        assert _run(tmp_path, "quantile-table", "--set", "quantile_table.s=5") == 2


class TestCoverage:
    SMALL = ["--set", "coverage.reps=1000", "--set", "coverage.n=10", "--set", "coverage.offline=100",
             "--set", "coverage.rho=0.7"]

    def test_small_grid(self, tmp_path):
        assert _run(tmp_path, "coverage", *self.SMALL) == 0
        lines = (tmp_path / "coverage.csv").read_text().splitlines()
        assert lines[0] == "n,N,rho,delta,reps,miscoverage,limit,pass" and len(lines) == 3

    def test_near_half_delta(self, tmp_path):
        assert _run(tmp_path, "coverage", *self.SMALL, "--set", "coverage.delta=0.4999") == 0

    def test_n_three(self, tmp_path):
        assert _run(tmp_path, "coverage", *self.SMALL, "--set", "coverage.n=3,10") == 2

    def test_too_few_reps(self, tmp_path):
        assert _run(tmp_path, "coverage", "--set", "coverage.reps=999") == 2

    def test_bad_delta(self, tmp_path):
        assert _run(tmp_path, "coverage", *self.SMALL, "--set", "coverage.delta=0.5") == 2


def test_selftest(tmp_path, capsys):
    assert _run(tmp_path, "selftest") == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 3
