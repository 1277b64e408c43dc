"""
End-to-end run of the command line: sample configs in, result folders out.
"""
import json
import shutil
from pathlib import Path

import pytest

import main

EXPERIMENTS = Path(__file__).resolve().parent / "config" / "experiments"


def _run(config, root, *extra):
    return main.main(["run", str(config), "--output-root", str(root), *extra])


def test_solve_run_is_byte_identical(tmp_path, capsys):
    config = EXPERIMENTS / "log_star_bihari.json"
    assert _run(config, tmp_path / "first") == main.EXIT_OK
    assert _run(config, tmp_path / "second") == main.EXIT_OK
    out = capsys.readouterr().out
    assert "certificates" in out and "results:" in out

    first, second = tmp_path / "first" / "log_star_bihari", tmp_path / "second" / "log_star_bihari"
    manifest = json.loads((first / "manifest.json").read_text())
    assert manifest["status"] == "pass"
    assert manifest["kind"] == "solve"
    for name in manifest["files"]:
        if name.endswith(".csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()


def test_strict_mode_turns_failures_into_exit_status(tmp_path):
    config = tmp_path / "normalization.json"
    config.write_text(json.dumps({
        "kind": "audit-axioms",
        "driver": "log_star(1)",
        "grid": {"steps": 10},
        "axioms": ["normalized"],
        "instances": {"count": 2},
    }))
    assert _run(config, tmp_path) == main.EXIT_OK
    assert _run(config, tmp_path, "--strict") == main.EXIT_FAILURE
    manifest = json.loads((tmp_path / "normalization" / "manifest.json").read_text())
    assert manifest["status"] == "fail"


def test_config_errors_exit_with_location(tmp_path, capsys):
    config = tmp_path / "bad.json"
    shutil.copy(EXPERIMENTS / "gamma_norm_audit.json", config)
    config.write_text(config.read_text().replace('"gamma_norm(2)"', '"gamma_norm(0.5)"'))
    assert _run(config, tmp_path) == main.EXIT_CONFIG
    err = capsys.readouterr().err
    assert f"{config}:4: driver:" in err
    assert not (tmp_path / "gamma_norm_audit").exists()


def test_config_errors_found_while_running_exit_with_location(tmp_path, capsys):
    config = tmp_path / "late.json"
    config.write_text(
        '{\n'
        '  "kind": "audit-driver",\n'
        '  "driver": "zero",\n'
        '  "terminal": {"kind": "exp_wT", "scale": 1},\n'
        '  "assumptions": [],\n'
        '  "moments": {\n'
        '    "p": "abc"\n'
        '  }\n'
        '}\n'
    )
    assert _run(config, tmp_path) == main.EXIT_CONFIG
    err = capsys.readouterr().err
    assert f"{config}:7: moments.p:" in err
    assert not (tmp_path / "late").exists()


def test_catalog_and_schema(capsys):
    assert main.main(["catalog", "--json"]) == main.EXIT_OK
    rows = json.loads(capsys.readouterr().out)
    assert {"zero", "geom_cond_exp", "gamma_norm", "robust_gamma_norm", "log_star"} <= {r["name"] for r in rows}

    assert main.main(["schema"]) == main.EXIT_OK
    schema = json.loads(capsys.readouterr().out)
    assert "kind" in schema and "driver" in schema


@pytest.mark.parametrize("name", sorted(p.name for p in EXPERIMENTS.glob("*.json")))
def test_sample_configs_load(name):
    from experiments.config import load_config

    config = load_config(EXPERIMENTS / name)
    assert config.digest


if __name__ == "__main__":
    print("=" * 60)
    print("GBSDE LAB - COMMAND LINE INTEGRATION RUN")
    print("=" * 60)
    status = main.main(["run", str(EXPERIMENTS / "log_star_bihari.json")])
    print("\nINTEGRATION RUN PASSED" if status == main.EXIT_OK else "\nINTEGRATION RUN FAILED")
