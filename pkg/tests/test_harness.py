import json

import pytest

from nelson_lab.harness import REGISTRY, ConfigError, ExperimentConfig, run, validate
from nelson_lab.harness.cli import main
from nelson_lab.harness.report import Metric

EXPERIMENTS = {"triangle", "energy-conservation", "hbar-consistency", "estimator-bias",
               "noise-constant-scaling", "hidden-decomposition", "circle-wallstrom",
               "time-reversal"}


def _toml(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_registry_lists_every_experiment(capsys):
    assert set(REGISTRY) == EXPERIMENTS
    assert main(["list-experiments"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in EXPERIMENTS)


@pytest.mark.parametrize("name", sorted(EXPERIMENTS))
def test_default_configs_are_valid(name):
    assert validate({"experiment": name}) == []
    assert validate(ExperimentConfig.default(name)) == []


def test_shipped_configs_validate(capsys):
    from pathlib import Path
    for path in sorted(Path(__file__).parents[1].joinpath("configs").glob("*.toml")):
        assert main(["validate", str(path)]) == 0, path


def test_unknown_key_is_named():
    problems = validate({"experiment": "triangle", "foo": 1})
    assert len(problems) == 1 and "foo" in problems[0]
    assert any("bar" in p for p in validate({"experiment": "triangle", "ensemble": {"bar": 1}}))
    assert any("zzz" in p for p in validate({"experiment": "triangle", "options": {"zzz": 1}}))


def test_alpha_out_of_range_cites_the_constraint():
    problems = validate({"experiment": "estimator-bias", "options": {"alphas": [0.5, 1.5]}})
    assert len(problems) == 1 and "alpha + beta = 1" in problems[0]


@pytest.mark.parametrize("section, body", [
    ("ensemble", {"N": -5}), ("ensemble", {"dt": 0.0}), ("params", {"m": -1.0}),
    ("params", {"hbar": 1.0, "nu": 0.5}), ("grid", {"n_nodes": 2}),
    ("tolerances", {"l1": -0.1}), ("options", {"states": ["nowhere"]}),
])
def test_invalid_values_rejected(section, body):
    assert validate({"experiment": "triangle", section: body}) != []
    with pytest.raises(ConfigError):
        ExperimentConfig.default("triangle", **{section: body})


def test_unknown_experiment():
    assert validate({"experiment": "nope"}) and validate({})


def test_cli_config_error_writes_nothing(tmp_path, capsys):
    out = tmp_path / "out"
    path = _toml(tmp_path, f'experiment = "triangle"\noutput_dir = "{out}"\n[ensemble]\nN = -5\n')
    assert main(["validate", path]) == 2
    assert main(["run", path]) == 2
    assert not out.exists()
    assert "N" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.toml")]) == 2
    assert main(["validate", _toml(tmp_path, "experiment = [", "bad.toml")]) == 2


def test_cli_pass_and_fail_exit_codes(tmp_path, capsys):
    ok = _toml(tmp_path, f'experiment = "hidden-decomposition"\noutput_dir = "{tmp_path / "a"}"\n', "a.toml")
    assert main(["run", ok]) == 0
    assert capsys.readouterr().out.strip().splitlines()[-1].startswith("PASS")
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["experiment"] == "hidden-decomposition" and manifest["passed"]
    for entry in manifest["files"]:
        assert (tmp_path / "a" / entry["path"]).stat().st_size == entry["bytes"]
    bad = _toml(tmp_path, f'experiment = "hidden-decomposition"\noutput_dir = "{tmp_path / "b"}"\n'
                          "[tolerances]\nidentity = 1e-300\n", "b.toml")
    assert main(["run", bad]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_runs_are_deterministic(tmp_path):
    reports = [run(ExperimentConfig.default("hidden-decomposition", output_dir=str(tmp_path / k)))
               for k in "ab"]
    assert reports[0].numeric() == reports[1].numeric()
    hashes = [{e["path"]: e["sha256"] for e in
               json.loads((tmp_path / k / "manifest.json").read_text())["files"]
               if e["path"] != "report.json"} for k in "ab"]
    assert hashes[0] == hashes[1] and hashes[0]


def test_metric_verdicts():
    assert Metric.at_most("x", 1.0, 1.0).passed and not Metric.at_most("x", 1.1, 1.0).passed
    assert Metric.at_least("x", 2.0, 1.0).passed
    assert Metric.near("x", 1.05, 1.0, 0.1).passed and not Metric.near("x", 1.2, 1.0, 0.1).passed
    assert not Metric.flag("x", False).passed
    assert Metric.at_most("x", 0.5, 1.0).line().startswith("PASS  x = 0.5")
