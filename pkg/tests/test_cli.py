"""Command-line interface: subcommands, exit codes, deterministic output."""

import json

import pytest

from finslerflow.cli import main
from finslerflow import io as fio

SPHERE = """
name = "sphere"
dim = 2
F2 = "4*(y1^2 + y2^2) / (1 + x1^2 + x2^2)^2"
"""

FLAT = """
name = "euclid"
dim = 2
F2 = "y1^2 + y2^2"
"""

BAD = """
name = "badranders"
dim = 2
F2 = "(sqrt(y1^2 + y2^2) + 1.5*y1)^2"
"""

BUMPY = """
name = "bumpy"
dim = 2
F2 = "(1 + 0.3*x1^2)*(y1^2 + y2^2)"
"""

ZERO_FIELD = """
dim = 2
v1 = "0"
v2 = "0"
"""

RADIAL_FIELD = """
dim = 2
v1 = "0.5*x1"
v2 = "0.5*x2"
"""


@pytest.fixture
def files(tmp_path):
    def w(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    paths = {
        "sphere": w("sphere.toml", SPHERE),
        "flat": w("flat.toml", FLAT),
        "bad": w("bad.toml", BAD),
        "bumpy": w("bumpy.toml", BUMPY),
        "zero": w("zero.toml", ZERO_FIELD),
        "radial": w("radial.toml", RADIAL_FIELD),
        "case": w("case.toml",
                  'metric = "sphere.toml"\nlambda = 1.0\n'
                  '[grid]\npoints = 2\ndirs = 4\nbox = 0.5\n'),
        "gauss_case": w("gauss.toml",
                        'metric = "flat.toml"\nfield = "radial.toml"\n'
                        'lambda = 0.5\n[grid]\npoints = 2\ndirs = 4\n'),
        "dir": tmp_path,
    }
    return paths


def out_path(files, name):
    return str(files["dir"] / name)


class TestCurvature:
    def test_runs_and_emits(self, files, capsys):
        out = out_path(files, "c.json")
        rc = main(["curvature", "--metric", files["sphere"],
                   "--grid", "points=2,dirs=4", "--out", out])
        assert rc == 0
        data = fio.read_json(out)
        assert data["summary"]["max_abs_ric"] == pytest.approx(1.0, abs=1e-9)
        assert len(data["rows"]) == 16
        assert "max |Ric|" in capsys.readouterr().out

    def test_csv_format(self, files):
        out = out_path(files, "c.csv")
        rc = main(["curvature", "--metric", files["sphere"],
                   "--grid", "points=2,dirs=4", "--out", out,
                   "--format", "csv"])
        assert rc == 0
        lines = open(out).read().strip().split("\n")
        assert lines[0].startswith("x1,x2,y1,y2,F2,g11")
        assert len(lines) == 17

    def test_csv_and_json_rows_agree(self, files):
        jp, cp = out_path(files, "a.json"), out_path(files, "a.csv")
        main(["curvature", "--metric", files["sphere"],
              "--grid", "points=2,dirs=4", "--out", jp])
        main(["curvature", "--metric", files["sphere"],
              "--grid", "points=2,dirs=4", "--out", cp, "--format", "csv"])
        jrows = fio.read_json(jp)["rows"]
        lines = open(cp).read().strip().split("\n")[1:]
        crows = [[float(v) for v in ln.split(",")] for ln in lines]
        assert crows == jrows


class TestCheckFinsler:
    def test_pass(self, files):
        assert main(["check-finsler", "--metric", files["sphere"]]) == 0

    def test_fail_exit_one(self, files, capsys):
        rc = main(["check-finsler", "--metric", files["bad"],
                   "--grid", "points=2,dirs=12"])
        assert rc == 1
        assert "FAIL" in capsys.readouterr().out


class TestSolitonCheck:
    def test_einstein_sphere(self, files):
        rc = main(["soliton-check", "--metric", files["sphere"],
                   "--field", files["zero"], "--lambda", "1.0",
                   "--tol", "1e-8"])
        assert rc == 0

    def test_wrong_lambda_fails_tolerance(self, files):
        rc = main(["soliton-check", "--metric", files["sphere"],
                   "--field", files["zero"], "--lambda", "0.7",
                   "--tol", "1e-6"])
        assert rc == 1

    def test_without_tol_reports_only(self, files):
        rc = main(["soliton-check", "--metric", files["sphere"],
                   "--field", files["zero"], "--lambda", "0.7"])
        assert rc == 0

    def test_field_optional(self, files):
        rc = main(["soliton-check", "--metric", files["sphere"],
                   "--lambda", "1.0", "--tol", "1e-8"])
        assert rc == 0


class TestEstimate:
    def test_sphere_lambda(self, files, capsys):
        rc = main(["estimate", "--metric", files["sphere"]])
        assert rc == 0
        assert "lambda = 1" in capsys.readouterr().out

    def test_gaussian_with_field(self, files, capsys):
        rc = main(["estimate", "--metric", files["flat"],
                   "--field", files["radial"]])
        assert rc == 0
        assert "lambda = 0.5" in capsys.readouterr().out


class TestFlowCommands:
    def test_flow_build(self, files):
        out = out_path(files, "fb.json")
        rc = main(["flow-build", "--case", files["case"], "--out", out])
        assert rc == 0
        data = fio.read_json(out)
        assert data["lambda"] == 1.0
        assert data["critical_time"] == pytest.approx(0.5)

    def test_flow_verify_passes(self, files):
        rc = main(["flow-verify", "--case", files["case"], "--tmax", "0.4"])
        assert rc == 0

    def test_flow_verify_beyond_critical_time(self, files, capsys):
        rc = main(["flow-verify", "--case", files["case"], "--tmax", "0.6"])
        assert rc == 3
        assert "scale factor vanishes" in capsys.readouterr().err

    def test_flow_verify_gaussian_closed_form(self, files):
        rc = main(["flow-verify", "--case", files["gauss_case"],
                   "--tmax", "0.8"])
        assert rc == 0

    def test_flow_conformal(self, files, capsys):
        rc = main(["flow-conformal", "--metric", files["sphere"],
                   "--dt", "1e-3", "--tmax", "0.4"])
        assert rc == 0
        assert "c(0.4) = 0.2" in capsys.readouterr().out

    def test_flow_conformal_non_einstein(self, files, capsys):
        rc = main(["flow-conformal", "--metric", files["bumpy"],
                   "--dt", "1e-3", "--tmax", "0.4"])
        assert rc == 3
        assert "not constant" in capsys.readouterr().err


class TestVerifyLemmas:
    def test_small_corpus_passes(self, files, capsys):
        out = out_path(files, "vl.json")
        rc = main(["verify-lemmas", "--samples", "4", "--out", out])
        assert rc == 0
        assert "45/45 suites passed" in capsys.readouterr().out
        data = fio.read_json(out)
        assert len(data["suites"]) == 45
        assert all(s["passed"] for s in data["suites"])


class TestExitCodes:
    def test_missing_file_is_config_error(self, files, capsys):
        rc = main(["curvature", "--metric", str(files["dir"] / "none.toml")])
        assert rc == 2
        assert "config error" in capsys.readouterr().err

    def test_bad_grid_is_config_error(self, files):
        rc = main(["curvature", "--metric", files["sphere"],
                   "--grid", "points=zero"])
        assert rc == 2

    def test_unknown_command_is_usage_error(self, capsys):
        assert main(["no-such-command"]) == 2

    def test_missing_required_flag(self, capsys):
        assert main(["curvature"]) == 2

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0


class TestDeterminism:
    def test_repeated_runs_byte_identical(self, files):
        a, b = out_path(files, "r1.json"), out_path(files, "r2.json")
        argv = ["curvature", "--metric", files["sphere"], "--out"]
        main(argv + [a])
        main(argv + [b])
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_full_precision_in_output(self, files):
        out = out_path(files, "p.json")
        main(["curvature", "--metric", files["sphere"], "--out", out])
        raw = open(out).read()
        # 17 significant digits appear for non-terminating values
        assert "0.44444444444444442" in raw
