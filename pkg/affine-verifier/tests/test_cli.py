"""
Tests for the command-line entry point.
"""
import json

from src.cli import _params, main
from src.config import settings


def test_params_parsing():
    assert _params("a=3, b=0.5") == {"a": 3.0, "b": 0.5}
    assert _params(None) == {}


def test_examples_list(capsys):
    assert main(["examples", "list"]) == 0
    output = capsys.readouterr().out
    assert "titeica" in output
    assert "scrambled-titeica" in output


def test_examples_show(capsys):
    assert main(["examples", "show", "ellipse"]) == 0
    manifest = json.loads(capsys.readouterr().out)
    assert manifest["sphere_type"] == "elliptic"


def test_verify_writes_report(tmp_path, capsys):
    path = tmp_path / "reports" / "hyperbola.json"
    code = main(["verify", "--example", "hyperbola", "--checks", "structure.", "--report", str(path)])
    assert code == 0
    report = json.loads(path.read_text())
    assert report["meta"]["checks_filter"] == ["structure."]
    assert all(check["verdict"] == "pass" for check in report["checks"])
    assert "0 fail, 0 error" in capsys.readouterr().out


def test_unknown_example_exits_with_usage_error(capsys):
    assert main(["verify", "--example", "catenoid"]) == 2


def test_boundary_writes_ray_tables(tmp_path, capsys):
    code = main(["boundary", "--example", "hyperbola", "--csv", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "hyperbola_ray0.csv").exists()
    assert (tmp_path / "hyperbola_ray1.csv").exists()
    assert "ray 1:" in capsys.readouterr().out


def test_verify_step_reaches_the_report_only(tmp_path):
    before = settings.FD_STEP
    path = tmp_path / "titeica.json"
    code = main(["verify", "--example", "titeica", "--checks", "structure.reconstruction",
                 "--step", "2e-3", "--report", str(path)])
    assert code == 0
    assert json.loads(path.read_text())["meta"]["step"] == 2e-3
    assert settings.FD_STEP == before
