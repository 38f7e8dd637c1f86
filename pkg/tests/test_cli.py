import json
import math
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from polyspec import cli


def run_cli(args, check=True):
    proc = subprocess.run(
        [sys.executable, "-m", "polyspec.cli", *args],
        capture_output=True,
        text=True,
    )
    if check and proc.returncode != 0:
        raise AssertionError(f"cli failed ({proc.returncode}): {proc.stderr}")
    return proc


def load_schema():
    import importlib.resources as res

    with res.files("polyspec").joinpath("schema/output.schema.json").open() as fh:
        return json.load(fh)


class TestDensityCommand:
    def test_closed_rows_satisfy_linear_law(self):
        proc = run_cli(
            ["density", "--d", "3", "--n", "2", "--route", "closed", "--points", "9"]
        )
        lines = proc.stdout.strip().splitlines()
        assert lines[0] == "r,rho,err,route"
        for line in lines[1:]:
            r, rho, err, route = line.split(",")
            assert route == "ClosedForm2"
            if float(r) < 2.0:
                assert float(rho) == pytest.approx(float(r) / 2.0, rel=1e-12)

    def test_recursion_emits_inf_sentinel(self):
        proc = run_cli(
            ["density", "--d", "2", "--n", "3", "--route", "recursion",
             "--r-min", "0.5", "--r-max", "1.5", "--points", "3"]
        )
        rows = proc.stdout.strip().splitlines()[1:]
        middle = rows[1].split(",")
        assert middle[0] == "1" and middle[1] == "inf"

    def test_mc_route_byte_deterministic(self):
        args = ["density", "--d", "2", "--n", "4", "--route", "mc",
                "--points", "11", "--seed", "42"]
        out1 = run_cli(args).stdout
        out2 = run_cli(args).stdout
        assert out1 == out2


class TestConstantCommand:
    def test_closed_pi_over_four(self):
        proc = run_cli(["constant", "--d", "3", "--q", "3", "--route", "closed"])
        payload = json.loads(proc.stdout)
        assert payload["results"][0]["value"] == pytest.approx(math.pi / 4, rel=1e-12)

    def test_divergent_classification(self):
        proc = run_cli(["constant", "--d", "2", "--q", "4"])
        payload = json.loads(proc.stdout)
        assert payload["results"][0]["classification"] == "Divergent"
        assert payload["results"][0]["value"] is None

    def test_direct_agrees_with_closed(self):
        direct = json.loads(
            run_cli(["constant", "--d", "2", "--q", "3", "--route", "direct"]).stdout
        )["results"][0]["value"]
        closed = json.loads(
            run_cli(["constant", "--d", "2", "--q", "3", "--route", "closed"]).stdout
        )["results"][0]["value"]
        assert direct == pytest.approx(closed, abs=1e-6)

    def test_json_schema(self):
        payload = json.loads(run_cli(["constant", "--d", "3", "--q", "4"]).stdout)
        jsonschema.validate(payload, load_schema())


class TestVarianceCommand:
    def test_parity_zero_row(self):
        proc = run_cli(
            ["variance", "--geometry", "spherical", "--d", "2", "--q", "3",
             "--R", str(math.pi), "--freq", "11"]
        )
        rows = proc.stdout.strip().splitlines()
        assert rows[0] == "freq,value,method,err_lo,err_hi,regime,ratio_to_prediction"
        fields = rows[1].split(",")
        assert fields[5] == "ParityZero"
        assert abs(float(fields[1])) < 1e-12

    def test_grid_ratio_tends_to_one(self):
        proc = run_cli(
            ["variance", "--geometry", "euclidean", "--d", "2", "--q", "3",
             "--R", "1.0", "--freq-grid", "25,50,100,200"]
        )
        rows = proc.stdout.strip().splitlines()[1:]
        ratios = [float(r.split(",")[-1]) for r in rows]
        assert abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0)
        assert ratios[-1] == pytest.approx(1.0, abs=0.05)

    def test_mc_ci_brackets_exact(self):
        exact = float(
            run_cli(
                ["variance", "--geometry", "euclidean", "--d", "2", "--q", "3",
                 "--R", "1.0", "--freq", "8", "--method", "exact"]
            ).stdout.strip().splitlines()[1].split(",")[1]
        )
        row = run_cli(
            ["variance", "--geometry", "euclidean", "--d", "2", "--q", "3",
             "--R", "1.0", "--freq", "8", "--method", "mc",
             "--trials", "1200", "--resolution", "12"]
        ).stdout.strip().splitlines()[1].split(",")
        value, lo, hi = float(row[1]), float(row[3]), float(row[4])
        assert value - lo <= exact <= value + hi


class TestTableCommand:
    def test_reproduction_table(self):
        proc = run_cli(["table"])
        rows = [r.split(",") for r in proc.stdout.strip().splitlines()[1:]]
        constants = [r for r in rows if r[0] == "constant"]
        d3q3 = next(r for r in constants if r[1] == "3" and r[2] == "3")
        assert float(d3q3[4]) == pytest.approx(math.pi / 4, rel=1e-12)
        assert float(d3q3[7]) < 1e-8 and float(d3q3[8]) < 1e-8
        classif = {(r[1], r[2]): r[3] for r in rows if r[0] == "classification"}
        assert classif[("2", "2")] == "Divergent"
        assert classif[("2", "4")] == "Divergent"
        assert classif[("3", "3")] == "Conditional"
        assert classif[("6", "8")] == "Absolute"

    def test_table_deterministic(self):
        a = run_cli(["table"]).stdout
        b = run_cli(["table"]).stdout
        assert a == b


class TestInfrastructure:
    def test_usage_error_exit_code(self):
        proc = run_cli(["density", "--d", "3"], check=False)
        assert proc.returncode == 2

    def test_unknown_route_exit_code(self):
        proc = run_cli(
            ["density", "--d", "3", "--n", "2", "--route", "bogus"], check=False
        )
        assert proc.returncode == 2

    def test_config_file_defaults(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("points=5\nroute=closed\n")
        proc = run_cli(
            ["--config", str(cfg), "density", "--d", "3", "--n", "2"]
        )
        assert len(proc.stdout.strip().splitlines()) == 5  # header + 4 rows

    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("points=5\nroute=closed\n")
        proc = run_cli(
            ["--config", str(cfg), "density", "--d", "3", "--n", "2", "--points", "7"]
        )
        assert len(proc.stdout.strip().splitlines()) == 7

    def test_output_path(self, tmp_path):
        out = tmp_path / "rows.csv"
        run_cli(
            ["density", "--d", "3", "--n", "2", "--route", "closed",
             "--points", "5", "--output-path", str(out)]
        )
        assert out.read_text().startswith("r,rho,err,route")

    def test_json_meta_fields(self):
        payload = json.loads(
            run_cli(
                ["density", "--d", "3", "--n", "2", "--route", "closed",
                 "--points", "4", "--format", "json"]
            ).stdout
        )
        jsonschema.validate(payload, load_schema())
        assert payload["meta"]["seed"] == 42
        assert "wall_time_s" in payload["meta"]

    def test_threads_env_and_flag(self, monkeypatch):
        monkeypatch.setenv("POLYSPEC_THREADS", "3")
        assert cli.worker_count(None) == 3
        assert cli.worker_count(2) == 2
        monkeypatch.setenv("POLYSPEC_THREADS", "junk")
        assert cli.worker_count(None) == 1

    def test_csv_17_digit_precision(self):
        proc = run_cli(
            ["density", "--d", "2", "--n", "2", "--route", "closed",
             "--r-min", "0.3333333333333333", "--r-max", "1.0", "--points", "2"]
        )
        row = proc.stdout.strip().splitlines()[1]
        assert row.split(",")[0] == "0.33333333333333331"
