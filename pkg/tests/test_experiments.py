import json
import math

import numpy as np
import pytest

from core.errors import ConfigError
from drivers.moments import worst_verdict
from experiments.config import SCHEMA, config_digest, load_config, parse_config
from experiments.output import write_results
from experiments.runner import run_experiment

EXP_HALF = {"expression": {"kind": "exp_wT", "scale": "0.5"}, "positivity": "strict", "label": "exp(W_T/2)"}
EXP_ONE = {"expression": {"kind": "exp_wT", "scale": "1"}, "positivity": "strict", "label": "exp(W_T)"}
COSH = {
    "expression": {"kind": "sum", "terms": [
        {"kind": "exp_wT", "scale": 1.0, "coef": 0.5},
        {"kind": "exp_wT", "scale": -1.0, "coef": 0.5},
    ]},
    "positivity": "strict",
}


def _write(tmp_path, data, name="experiment.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data, indent=2) + "\n")
    return path


def test_load_config_with_decimal_strings(tmp_path):
    path = _write(tmp_path, {
        "kind": "solve", "driver": "gamma_norm(2)", "terminal": EXP_ONE,
        "grid": {"horizon": "1", "steps": "20"}, "seed": "42",
    })
    config = load_config(path)
    assert config.name == "experiment"
    assert config.steps == (20,) and config.horizon == 1.0 and config.seed == 42
    assert config.digest == config_digest(path.read_bytes())
    assert config.describe()["config_sha256"] == config.digest


def test_errors_point_at_lines(tmp_path):
    text = '{\n  "name": "bad",\n  "kind": "solve",\n  "driver": "no_such_driver"\n}\n'
    path = tmp_path / "bad.json"
    path.write_text(text)
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.line == 4
    assert info.value.key == "driver"
    assert str(info.value).startswith(f"{path}:4: driver: ")


def test_nested_key_line(tmp_path):
    text = '{\n  "kind": "solve",\n  "driver": "zero",\n  "grid": {\n    "horizon": "-1"\n  }\n}\n'
    path = tmp_path / "horizon.json"
    path.write_text(text)
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.line == 5
    assert info.value.key == "grid.horizon"


def test_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "kind": "solve",\n  "driver": "zero",\n}\n')
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.line == 4


def test_yaml_configs(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text("kind: solve\ndriver: zero\ncolour: blue\n")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.line == 3


@pytest.mark.parametrize("data, key", [
    ({"kind": "dance", "driver": "zero"}, "kind"),
    ({"kind": "solve"}, "driver"),
    ({"kind": "convergence", "driver": "zero", "grid": {"steps": [8]}, "reference": {"kind": "value", "value": 1}},
     "grid.steps"),
    ({"kind": "oracle-compare", "driver": "zero", "routes": ["gbsde"]}, "reference"),
    ({"kind": "oracle-compare", "driver": "zero", "routes": ["magic"], "reference": {"kind": "value"}}, "routes[0]"),
    ({"kind": "audit-axioms", "driver": "zero", "axioms": []}, "axioms"),
    ({"kind": "solve", "driver": {"catalog": "gamma_norm", "params": {"gamma": "0.5"}}}, "driver"),
    ({"kind": "solve", "driver": "zero", "solver": {"method": "pde"}}, "solver.method"),
])
def test_validation_keys(data, key):
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    assert info.value.key == key


def test_schema_covers_options():
    for name in ("kind", "driver", "terminal", "grid", "solver", "axioms", "routes", "bound"):
        assert name in SCHEMA


def test_solve_with_certificates(tmp_path):
    config = load_config(_write(tmp_path, {
        "kind": "solve", "driver": "log_star(0.5)", "terminal": EXP_HALF, "grid": {"steps": 16},
        "bound": {}, "compare": {"driver": "log_star(1)"}, "diagnostics": {"p": 1}, "seed": 7,
    }))
    result = run_experiment(config)
    assert not result.failed
    assert [row["certificate"] for row in result.tables["certificates"]] == ["comparison", "bihari_bound"]
    assert result.metadata["diagnostics"]["quadratic_variation"]["finite"]
    assert result.fields["field"].steps == 16


def test_audit_driver_rows():
    config = parse_config({
        "kind": "audit-driver", "driver": "gamma_norm(2)", "terminal": EXP_ONE,
        "window": {"samples": 200}, "moments": {"p": 1}, "seed": 3,
    })
    result = run_experiment(config)
    rows = result.tables["audits"]
    assert {"driver", "assumption", "verdict"} <= set(rows[0])
    assert all(row["driver"] == "gamma_norm(2)" for row in rows)
    assert not result.failed


def test_moment_audit_with_ensemble_takes_worse_verdict():
    config = parse_config({
        "kind": "audit-driver", "driver": "gamma_norm(2)", "terminal": EXP_HALF, "assumptions": [],
        "moments": {"p": 1, "paths": 3000}, "seed": 4,
    })
    result = run_experiment(config)
    (audit,) = result.metadata["audits"]
    details = audit["details"]
    assert details["quadrature_verdict"] == "pass"
    assert audit["verdict"] == worst_verdict([details["quadrature_verdict"], details["ensemble"]["verdict"]])
    assert result.failed == (audit["verdict"] == "fail")


def test_axiom_failures_are_recorded():
    config = parse_config({
        "kind": "audit-axioms", "driver": "log_star(1)", "grid": {"steps": 10},
        "axioms": ["monotone", "normalized"], "instances": {"count": 3}, "seed": 1,
    })
    result = run_experiment(config)
    verdicts = {row["axiom"]: row["verdict"] for row in result.tables["axioms"]}
    assert verdicts == {"monotone": "pass", "normalized": "fail"}
    assert result.failures == ["axiom normalized"]


def test_convergence_table():
    config = parse_config({
        "kind": "convergence", "driver": "gamma_norm(2)", "terminal": COSH, "grid": {"steps": [16, 32, 64]},
        "reference": {"kind": "gaussian_moment", "order": 2},
    })
    rows = run_experiment(config).tables["convergence"]
    assert [row["steps"] for row in rows] == [16, 32, 64]
    assert math.isnan(rows[0]["observed_order"])
    assert rows[2]["abs_error"] < rows[0]["abs_error"]
    assert -1.5 < rows[2]["observed_order"] < -0.5


def test_oracle_compare_routes():
    config = parse_config({
        "kind": "oracle-compare", "driver": "gamma_norm(2)", "terminal": EXP_ONE, "grid": {"steps": 64},
        "routes": ["closed_form", "gbsde", "lnq", "two_driver", "monetary"],
        "reference": {"kind": "closed_form", "coef": 1, "scale": 1},
    })
    result = run_experiment(config)
    rows = result.tables["oracle_compare"]
    assert [row["route"] for row in rows] == ["closed_form", "gbsde", "lnq", "two_driver", "monetary"]
    assert rows[0]["rel_error"] == 0.0
    assert all(row["rel_error"] < 0.01 for row in rows)
    assert all(row["agrees"] for row in rows)
    assert not result.failed


@pytest.mark.parametrize("tolerance, failures", [(None, ["oracle gbsde"]), ("0.1", [])])
def test_oracle_compare_flags_routes_off_the_reference(tolerance, failures):
    reference = {"kind": "value", "value": "2.5"}
    if tolerance is not None:
        reference["tolerance"] = tolerance
    config = parse_config({
        "kind": "oracle-compare", "driver": "gamma_norm(2)", "terminal": EXP_ONE, "grid": {"steps": 32},
        "routes": ["gbsde"], "reference": reference,
    })
    result = run_experiment(config)
    (row,) = result.tables["oracle_compare"]
    assert row["rel_error"] == pytest.approx(abs(np.e - 2.5) / 2.5, rel=1e-6)
    assert row["agrees"] == (not failures)
    assert result.failures == failures


def test_lebesgue_table():
    config = parse_config({
        "kind": "lebesgue", "driver": "gamma_norm(2)", "terminal": EXP_HALF, "grid": {"steps": 50},
        "levels": [2, 4, 8], "target": "1",
    })
    result = run_experiment(config)
    assert [row["level"] for row in result.tables["lebesgue"]] == [2.0, 4.0, 8.0]
    assert not result.failed


def test_results_are_reproducible(tmp_path):
    path = _write(tmp_path, {
        "kind": "solve", "driver": "robust_gamma_norm(2, 0.5)", "terminal": EXP_HALF,
        "grid": {"steps": 12}, "compare": {"driver": "robust_gamma_norm(2, 1)"}, "output": "robust",
    })
    first = write_results(run_experiment(load_config(path)), tmp_path / "a")
    second = write_results(run_experiment(load_config(path)), tmp_path / "b")
    digest = config_digest(path.read_bytes())

    csv_files = sorted(p.name for p in first.glob("*.csv"))
    assert csv_files == ["certificates.csv", "field.csv"]
    for name in csv_files:
        content = (first / name).read_bytes()
        assert content == (second / name).read_bytes()
        assert content.startswith(f"# schema=1 config={digest}\n".encode())

    manifest = json.loads((first / "manifest.json").read_text())
    assert manifest["config_sha256"] == digest
    assert manifest["status"] == "pass"
    assert set(manifest["files"]) == {"certificates.csv", "field.csv", "metadata.json"}
    assert (first / "manifest.json").read_bytes() == (second / "manifest.json").read_bytes()
