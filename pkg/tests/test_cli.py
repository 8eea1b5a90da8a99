import copy
import json
import pathlib

import pytest

from cocyclib.cli import ConfigError, emit, load_config, main, run

CONFIG_DIR = pathlib.Path(__file__).resolve().parent.parent / "scripts" / "configs"

CONFIGS = {
    "example-unipotent": "example_unipotent.json",
    "exponents": "exponents_mixed.json",
    "holonomy": "holonomy_two_block.json",
    "blocks": "blocks_orthogonal.json",
    "shadow": "shadow_mixed.json",
    "reconstruct": "reconstruct_two_block.json",
    "verify-zimmer": "verify_zimmer_two_block.json",
}


def load(kind):
    return load_config(str(CONFIG_DIR / CONFIGS[kind]))


@pytest.mark.parametrize("kind", sorted(CONFIGS))
def test_every_kind_runs_and_passes(kind):
    report = run(load(kind))
    assert report["kind"] == kind
    assert report["passed"] is True
    assert report["library_version"]
    assert all("tolerance" in c and "instantiates" in c
               for c in report["checks"])


@pytest.mark.parametrize("kind", sorted(CONFIGS))
def test_determinism_byte_identical(kind):
    r1 = run(load(kind))
    r2 = run(load(kind))
    assert emit(r1, "json") == emit(r2, "json")
    assert emit(r1, "csv") == emit(r2, "csv")


def test_json_roundtrip():
    report = run(load("shadow"))
    text = emit(report, "json")
    assert json.loads(text) == report
    assert emit(json.loads(text), "json") == text


def test_csv_one_row_per_m():
    report = run(load("shadow"))
    text = emit(report, "csv")
    section = text.split("# table: growth\n")[1].splitlines()
    header, *rows = [line for line in section if line and not
                     line.startswith("#")]
    assert header.split(",")[0] == "m"
    ms = [int(r.split(",")[0]) for r in rows[:4]]
    assert ms == [4, 8, 12, 16]


def test_unsupported_format():
    with pytest.raises(ValueError, match="format"):
        emit({"tables": {}}, "yaml")


def test_seed_is_mandatory():
    config = load("exponents")
    del config["experiment"]["seed"]
    with pytest.raises(ConfigError, match="seed"):
        run(config)


def test_unknown_kind_rejected():
    config = load("exponents")
    config["experiment"]["kind"] = "nonsense"
    with pytest.raises(ConfigError, match="kind"):
        run(config)


def test_reducible_matrix_diagnostic():
    config = load("example-unipotent")
    config["system"]["transition_matrix"] = [[1, 1], [0, 1]]
    with pytest.raises(ConfigError, match="unreachable"):
        run(config)


def test_measure_support_mismatch():
    config = copy.deepcopy(load("exponents"))
    config["measure"]["transition_probabilities"] = [[1.0, 0.0], [0.5, 0.5]]
    with pytest.raises(ConfigError):
        run(config)


def test_seed_override_changes_report(tmp_path):
    src = CONFIG_DIR / CONFIGS["exponents"]
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    assert main(["exponents", "--config", str(src), "--out", str(out1)]) == 0
    assert main(["exponents", "--config", str(src), "--out", str(out2),
                 "--seed", "999"]) == 0
    r1 = json.loads(out1.read_text())
    r2 = json.loads(out2.read_text())
    assert r1["seed"] == 11 and r2["seed"] == 999
    assert r1["results"]["monte_carlo"] != r2["results"]["monte_carlo"]


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["exponents", "--config", str(bad)]) == 2

    mismatched = tmp_path / "mismatch.json"
    cfg = load("exponents")
    mismatched.write_text(json.dumps(cfg))
    assert main(["holonomy", "--config", str(mismatched)]) == 2


def test_exponents_constant_diagonal_report():
    # lambda_+ = ln 2 appears in the report for the constant diag(2, 1/2)
    config = {
        "system": {"transition_matrix": [[1, 1], [1, 1]], "tau": 1.0},
        "measure": {"transition_probabilities": [[0.5, 0.5], [0.5, 0.5]]},
        "cocycle": {"window_radius": 0, "dimension": 2,
                    "table": {"0": [[2.0, 0.0], [0.0, 0.5]],
                              "1": [[2.0, 0.0], [0.0, 0.5]]}},
        "experiment": {"kind": "exponents", "seed": 3, "n": 2,
                       "trials": 200, "max_period": 2},
    }
    report = run(config)
    import math

    rows = report["tables"]["periodic_exponents"]
    assert all(abs(r["lambda_plus"] - math.log(2)) <= 1e-12 for r in rows)
    assert abs(report["results"]["finite_scale_a_n"] - math.log(2)) <= 1e-12


def test_budget_flags(tmp_path):
    src = CONFIG_DIR / CONFIGS["exponents"]
    out = tmp_path / "r.json"
    assert main(["exponents", "--config", str(src), "--out", str(out),
                 "--budget-words", "4", "--budget-samples", "50"]) == 0
    report = json.loads(out.read_text())
    assert report["budgets"] == {"words": 4, "samples": 50}
    assert report["results"]["finite_scale_a_n"] is None
    assert "monte_carlo" in report["results"]
    assert report["results"]["monte_carlo"]["trials"] == 50


def test_missing_config_file_clean_exit(capsys):
    assert main(["exponents", "--config", "/does/not/exist.json"]) == 2
    assert "cannot read config" in capsys.readouterr().err


def test_shadow_with_angle_experiment_tables():
    # shadow experiment with a declared invariant flag produces angle and
    # projection tables and checks the closed-form bound
    table = {"0": [[1.0, 1.0], [0.0, 1.0]], "1": [[1.0, 1.0], [0.0, 2.0]]}
    config = {
        "system": {"transition_matrix": [[1, 1], [1, 1]], "tau": 1.0},
        "measure": {"transition_probabilities": [[0.5, 0.5], [0.5, 0.5]]},
        "cocycle": {"window_radius": 0, "dimension": 2, "table": table},
        "experiment": {"kind": "shadow", "seed": 23, "x_word": "0",
                       "y_word": "1", "ms": [4, 8], "b": 2, "c": 2,
                       "alpha": 0.1, "N": 4, "theta": 3.5,
                       "flag_dims": [1, 2], "cone_split": [1, 1],
                       "cone_mu": 2.0, "cone_lambda": 0.999,
                       "cone_epsilon": 0.05, "cone_delta": 0.3},
    }
    report = run(config)
    assert report["passed"]
    assert report["tables"]["angles"]
    assert all(r["meets_bound"] for r in report["tables"]["projection_growth"])
    assert report["results"]["j0"] < report["results"]["j1"] \
        < report["results"]["u_m"]
