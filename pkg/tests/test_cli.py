import json
import filecmp

import pytest

from empclt.cli import (
    TASKS,
    emit_manifest,
    load_scenario,
    main,
    parse_scenario,
    run_scenario,
)
from empclt.errors import ConfigError


def _write(tmp_path, text, name="scn.toml"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


MINIMAL = """
task = "conditions"
[params]
theta = 1.0
r = 1.0
d = 1
p_max = 8
"""


def test_parse_minimal_defaults(tmp_path):
    scn = load_scenario(_write(tmp_path, MINIMAL))
    assert scn.name == "scn"
    assert scn.seed == 0
    assert scn.task == "conditions"
    assert scn.params["alpha"] == 1.0  # default expanded
    resolved = scn.resolved()
    assert resolved["params"]["p_max"] == 8
    assert resolved["process"]["kind"] == "iid"


def test_unknown_top_level_key_named():
    with pytest.raises(ConfigError, match="procss"):
        parse_scenario({"task": "delta", "procss": {"rho": 0.5}}, "x")


def test_unknown_process_key_named():
    with pytest.raises(ConfigError, match=r"process\.roh"):
        parse_scenario({"task": "delta", "process": {"kind": "iid", "roh": 1}}, "x")


def test_unknown_param_key_named_with_task():
    with pytest.raises(ConfigError, match=r'params\.foo.*"delta"'):
        parse_scenario({"task": "delta", "params": {"foo": 1}}, "x")


def test_task_required_and_validated():
    with pytest.raises(ConfigError, match="task"):
        parse_scenario({}, "x")
    with pytest.raises(ConfigError, match="unknown task"):
        parse_scenario({"task": "simulte"}, "x")


def test_process_kind_requirements():
    with pytest.raises(ConfigError, match=r"process\.rho"):
        parse_scenario({"task": "simulate", "process": {"kind": "geometric"}}, "x")
    with pytest.raises(ConfigError, match=r"process\.b"):
        parse_scenario({"task": "simulate", "process": {"kind": "polynomial"}}, "x")
    with pytest.raises(ConfigError, match="student-t"):
        parse_scenario(
            {"task": "simulate", "process": {"kind": "iid", "nu": 3.0}}, "x"
        )


def test_bad_seed_rejected():
    with pytest.raises(ConfigError, match="seed"):
        parse_scenario({"task": "simulate", "seed": -1}, "x")
    with pytest.raises(ConfigError, match="seed"):
        parse_scenario({"task": "simulate", "seed": True}, "x")


def test_toml_syntax_error_has_position(tmp_path):
    p = _write(tmp_path, 'task = "delta"\nseed = oops\n')
    with pytest.raises(ConfigError, match="line"):
        load_scenario(p)


def test_missing_file_is_config_error():
    with pytest.raises(ConfigError, match="not found"):
        load_scenario("/nonexistent/path.toml")


def test_manifest_contents_and_stability():
    text = emit_manifest()
    assert text == emit_manifest()
    data = json.loads(text)
    assert set(data["tasks"]) == set(TASKS) and len(TASKS) == 8
    assert data["defaults"]["epsilon"] == 0.25
    assert data["seed_scheme"] == "philox4x64/seedseq-path/v1"
    assert "timestamp" not in text


def test_main_manifest_exit_zero(capsys):
    assert main(["manifest"]) == 0
    out = capsys.readouterr().out
    assert '"empclt"' in out


def test_run_conditions_scenario(tmp_path, capsys):
    cfg = _write(tmp_path, f'out = "{tmp_path}/res"\n' + MINIMAL)
    assert main(["run", str(cfg)]) == 0
    res = tmp_path / "res"
    assert (res / "scn_summary.json").exists()
    assert (res / "scn_scan.csv").exists()
    assert (res / "scn_scan.png").exists()
    summary = json.loads((res / "scn_summary.json").read_text())
    assert summary["results"]["b_star"] == 6.0
    assert summary["config"]["params"]["p_max"] == 8
    assert summary["seed_scheme"] == "philox4x64/seedseq-path/v1"


def test_run_unknown_key_exit_one(tmp_path, capsys):
    cfg = _write(tmp_path, 'task = "delta"\n[procss]\nrho = 0.5\n')
    assert main(["run", str(cfg)]) == 1
    assert "procss" in capsys.readouterr().err


def test_run_resource_error_exit_three(tmp_path, capsys):
    cfg = _write(
        tmp_path,
        """
task = "moment"
[process]
kind = "geometric"
innovation = "rademacher"
rho = 0.5
lag = 40
[params]
oracle = true
oracle_n = 8
reps = 20
n_list = [8]
ref_count = 2000
""",
    )
    assert main(["run", str(cfg)]) == 3


def test_run_check_failure_exit_two(tmp_path, capsys):
    # a KS threshold of ~0 makes every projection fail while the run completes
    cfg = _write(
        tmp_path,
        f"""
name = "failing"
task = "clt"
out = "{tmp_path}/res"
[params]
n = 120
reps = 110
m = 3
projections = 2
threshold = 1e-9
calibration_count = 5000
mc_calibration = 50
""",
    )
    assert main(["run", str(cfg)]) == 2
    # checks still ran and the full report was written
    summary = json.loads((tmp_path / "res" / "failing_summary.json").read_text())
    assert summary["checks"][0]["passed"] is False
    assert (tmp_path / "res" / "failing_projections.csv").exists()


def test_rerun_byte_identical_apart_from_timestamp(tmp_path):
    cfg = _write(
        tmp_path,
        f"""
name = "det"
task = "delta"
seed = 5
out = "{tmp_path}/a"
[process]
kind = "geometric"
innovation = "uniform"
rho = 0.5
[params]
lags = [1, 2, 3]
reps = 60
""",
    )
    assert main(["run", str(cfg)]) == 0
    assert main(["run", str(cfg), "--out", str(tmp_path / "b"), "--jobs", "3"]) == 0
    assert filecmp.cmp(
        tmp_path / "a" / "det_profile.csv",
        tmp_path / "b" / "det_profile.csv",
        shallow=False,
    )
    sa = json.loads((tmp_path / "a" / "det_summary.json").read_text())
    sb = json.loads((tmp_path / "b" / "det_summary.json").read_text())
    for s in (sa, sb):
        s.pop("timestamp")
        s["config"].pop("out")
    assert sa == sb


def test_seed_override_changes_numbers(tmp_path):
    cfg = _write(
        tmp_path,
        f"""
name = "sd"
task = "simulate"
out = "{tmp_path}/s1"
[params]
n = 40
""",
    )
    assert main(["run", str(cfg)]) == 0
    assert main(["run", str(cfg), "--seed", "9", "--out", str(tmp_path / "s2")]) == 0
    a = (tmp_path / "s1" / "sd_paths.csv").read_text()
    b = (tmp_path / "s2" / "sd_paths.csv").read_text()
    assert a != b
    sb = json.loads((tmp_path / "s2" / "sd_summary.json").read_text())
    assert sb["config"]["seed"] == 9


def test_run_scenario_object_interface(tmp_path):
    scn = load_scenario(_write(tmp_path, MINIMAL))
    scn = scn.__class__(**{**scn.__dict__, "out": str(tmp_path / "obj")})
    assert run_scenario(scn) == 0
