"""Experiment configs, run directories, records, plot data and the verify suite."""
import csv
import json
import math

import numpy as np
import pytest

from services.domain import ConfigError, InvalidInputError
from services.harness import (
    VERIFY_CHECKS,
    ExperimentConfig,
    ResultRecord,
    emit_plot_data,
    fit_from_csv,
    run,
    run_verify,
)
from services.moving_planes import fit_log_law, log_law

CHEAP_CHECKS = ["exponent-2M", "harnack-radius", "log-law-inversion", "small-domain-comparison"]


def _verify_config(tmp_path, **extra):
    data = {"kind": "verify-suite", "problem": {"n": 2, "p": 3.0}, "checks": CHEAP_CHECKS,
            "output_dir": str(tmp_path)}
    data.update(extra)
    return ExperimentConfig.from_dict(data)


def _synthetic_record(tmp_path):
    d = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    s = log_law(d, 2.0, 0.5)
    fit = fit_log_law(list(zip(d, s)))
    samples = [{"epsilon": float(e), "deficit": float(e), "deviation": float(v)} for e, v in zip(d, s)]
    return ResultRecord("ball-sweep", "0" * 64, 1, str(tmp_path), samples=samples, fit=fit.to_dict())


def test_unknown_keys_are_all_listed():
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict({"kind": "single-solve", "problem": {"n": 2, "p": 3.0},
                                    "colour": "red", "mesh": {"nodes": 3}})
    assert "colour" in info.value.keys
    assert "mesh.nodes" in info.value.keys


def test_missing_kind_and_problem():
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict({})
    assert set(info.value.keys) == {"kind", "problem"}


def test_fit_needs_decreasing_epsilons():
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict({"kind": "ball-sweep", "problem": {"n": 2, "p": 3.0},
                                    "epsilons": [0.01, 0.1]})
    assert info.value.keys == ("epsilons",)
    config = ExperimentConfig.from_dict({"kind": "ball-sweep", "problem": {"n": 2, "p": 3.0},
                                         "epsilons": [0.01, 0.1], "fit": False})
    assert config.epsilons == [0.01, 0.1]


def test_whole_space_sweep_needs_subcritical_p():
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict({"kind": "space-sweep", "problem": {"n": 3, "p": 3.5},
                                    "epsilons": [0.1, 0.01, 0.001]})
    assert "problem.p" in info.value.keys


def test_unknown_verify_check_is_rejected(tmp_path):
    with pytest.raises(ConfigError):
        _verify_config(tmp_path, checks=["no-such-check"])


def test_config_hash_ignores_the_output_directory(tmp_path):
    a = _verify_config(tmp_path / "a")
    b = _verify_config(tmp_path / "b")
    assert a.config_hash == b.config_hash
    assert a.run_dir.name == b.run_dir.name == f"verify-suite-{a.config_hash[:12]}"
    assert _verify_config(tmp_path, seed=7).config_hash != a.config_hash


def test_config_roundtrips_through_json(tmp_path):
    config = _verify_config(tmp_path)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config.to_dict()))
    assert ExperimentConfig.load(path).to_dict() == config.to_dict()


def test_unreadable_config_is_a_config_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(path)


def test_verify_run_writes_verdicts_and_summary(tmp_path):
    config = _verify_config(tmp_path)
    record = run(config)
    run_dir = config.run_dir
    assert record.outputs["passed"]
    for name in CHEAP_CHECKS:
        verdict = json.loads((run_dir / "verdicts" / f"{name}.json").read_text())
        assert verdict["check"] == name and verdict["passed"]
    with (run_dir / "summary.csv").open() as handle:
        rows = list(csv.DictReader(handle))
    assert [r["check"] for r in rows] == CHEAP_CHECKS
    assert (run_dir / "config.json").exists()
    assert ResultRecord.load(run_dir / "record.json").to_dict() == record.to_dict()


def test_rerun_gives_identical_record(tmp_path):
    config = _verify_config(tmp_path)
    run(config)
    first = (config.run_dir / "record.json").read_bytes()
    run(config)
    assert (config.run_dir / "record.json").read_bytes() == first


def test_crashing_check_becomes_a_failed_verdict(monkeypatch):
    def explode(seed):
        raise RuntimeError("boom")

    monkeypatch.setitem(VERIFY_CHECKS, "explode", explode)
    verdicts = run_verify(["explode", "exponent-2M"])
    assert verdicts[0]["passed"] is False
    assert verdicts[0]["error"] == "RuntimeError"
    assert verdicts[1]["passed"] is True


def test_run_verify_rejects_unknown_names():
    with pytest.raises(ConfigError):
        run_verify(["no-such-check"])


def test_plot_data_lies_on_the_fitted_line(tmp_path):
    plot_path, line_path = emit_plot_data(_synthetic_record(tmp_path))
    line = json.loads(line_path.read_text())
    assert line["slope"] == pytest.approx(-0.5, abs=1e-3)
    assert line["intercept"] == pytest.approx(math.log(2.0), abs=1e-3)
    assert line["residual"] < 1e-3
    with plot_path.open() as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 4
    assert set(rows[0]) == {"log_abs_log_d", "log_abs_log_cd", "log_s"}


def test_plot_data_needs_a_fit(tmp_path):
    record = _synthetic_record(tmp_path)
    record.fit = None
    with pytest.raises(InvalidInputError):
        emit_plot_data(record)


def test_fit_from_csv_accepts_the_osc_column(tmp_path):
    path = tmp_path / "sweep.csv"
    d = [1e-2, 1e-3, 1e-4, 1e-5]
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["epsilon", "deficit", "osc"])
        for value in d:
            writer.writerow([value, value, float(log_law(value, 2.0, 0.5))])
    fit = fit_from_csv(path)
    assert fit.c == pytest.approx(2.0, abs=1e-4)
    assert fit.alpha == pytest.approx(0.5, abs=1e-4)


def test_fit_from_csv_needs_known_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n0.1,0.2\n")
    with pytest.raises(InvalidInputError):
        fit_from_csv(path)


def test_bubble_report_box_follows_the_bubble_scale(tmp_path):
    quotients = {}
    for scale in (1.0, 0.1):
        config = ExperimentConfig.from_dict({
            "kind": "bubble-report", "problem": {"n": 3, "p": 2.5},
            "bubble": {"center": [0.3, 0.0, 0.0], "scale": scale},
            "mesh": {"box_nodes": 17}, "output_dir": str(tmp_path)})
        record = run(config)
        assert record.outputs["mesh"]["extent"] == pytest.approx(20.0 * scale)
        quotients[scale] = record.outputs["sobolev"]["value"]
    assert quotients[0.1] == pytest.approx(quotients[1.0], rel=1e-3)
