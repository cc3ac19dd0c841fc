"""Command-line exit codes."""
import csv
import json

from lab import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, main


def test_verify_subset_succeeds(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "verify", "exponent-2M", "log-law-inversion"]) == EXIT_OK
    assert "exponent-2M" in capsys.readouterr().out
    assert list(tmp_path.glob("verify-suite-*/record.json"))


def test_unknown_check_is_invalid_input(tmp_path):
    assert main(["--out", str(tmp_path), "verify", "no-such-check"]) == EXIT_INPUT


def test_missing_config_file_is_invalid_input(tmp_path):
    assert main(["--config", str(tmp_path / "missing.json"), "solve"]) == EXIT_INPUT


def test_bad_config_key_is_invalid_input(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"colour": "red"}')
    assert main(["--config", str(path), "--out", str(tmp_path), "solve"]) == EXIT_INPUT


def test_flat_fit_is_a_numerical_failure(tmp_path):
    path = tmp_path / "flat.csv"
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["deficit", "deviation"])
        for d in (1e-2, 1e-3, 1e-4):
            writer.writerow([d, 0.3])
    assert main(["fit", str(path)]) == EXIT_NUMERICAL


def test_emit_plot_needs_a_record(tmp_path):
    assert main(["emit-plot", str(tmp_path / "record.json")]) == EXIT_INPUT


def test_solve_flags_reach_the_run(tmp_path, capsys):
    code = main(["--out", str(tmp_path), "solve", "--n", "2", "--p", "2", "--mode", "radial",
                 "--resolution", "201", "--tol", "1e-6"])
    assert code == EXIT_OK
    record = json.loads(next(tmp_path.glob("single-solve-*/record.json")).read_text())
    config = json.loads(next(tmp_path.glob("single-solve-*/config.json")).read_text())
    assert config["mesh"] == {"solver": "radial", "resolution": 201}
    assert config["problem"]["tol"] == 1e-6
    assert record["outputs"]["solve"]["tolerance"] == 1e-6
    assert record["outputs"]["solve"]["mesh"]["resolution"] == [201]


def test_bubble_flags_scale_the_box(tmp_path):
    code = main(["--out", str(tmp_path), "bubble", "--n", "3", "--p", "2.5", "--z", "0.3", "0", "0",
                 "--lambda", "0.5", "--rbox", "4", "--resolution", "9"])
    assert code == EXIT_OK
    record = json.loads(next(tmp_path.glob("bubble-report-*/record.json")).read_text())
    assert record["outputs"]["bubble"]["center"] == [0.3, 0.0, 0.0]
    assert record["outputs"]["bubble"]["scale"] == 0.5
    assert record["outputs"]["mesh"]["extent"] == 4.0
    assert record["outputs"]["mesh"]["resolution"] == [9, 9, 9]


def test_nonpositive_bubble_scale_is_invalid_input(tmp_path):
    assert main(["--out", str(tmp_path), "bubble", "--lambda", "0"]) == EXIT_INPUT
