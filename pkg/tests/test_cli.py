import json
import sys

import numpy as np
import pytest
import yaml
from typer.testing import CliRunner

from pod_eit.cli import commands
from pod_eit.cli.commands import app
from pod_eit.core.artifacts import read_frames, write_frames

runner = CliRunner()

SMALL_CONFIG = {
    "mesh": {"boundary_segments": 32, "interior_density": 1.0, "symmetry": 16},
    "synth": {"contact_noise": 0.05},
    "placement": {"slots": 8, "select": 6, "modes": 5},
    "projection": {"modes": 5},
    "render": {"panel_size": 96},
}


def _invoke(config, *args):
    return runner.invoke(app, ["--config", str(config), *map(str, args)])


def _prepare(directory):
    config = directory / "config.yaml"
    config.write_text(yaml.safe_dump(SMALL_CONFIG), encoding="utf-8")
    for args in (
        ("mesh", "--out", directory / "mesh.json"),
        ("simulate", "--mesh", directory / "mesh.json", "--out", directory / "frames.csv", "--frames", 30, "--seed", 3),
        ("pod", "--in", directory / "frames.csv", "--out", directory / "basis.json"),
    ):
        result = _invoke(config, *args)
        assert result.exit_code == 0, result.output
    return config


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("pipeline")
    _prepare(directory)
    return directory


def test_simulate_writes_noisy_and_truth_frames(workdir):
    noisy, header = read_frames(workdir / "frames.csv")
    truth, truth_header = read_frames(workdir / "frames_truth.csv")
    assert noisy.shape == truth.shape == (30, 40)
    assert header["protocol_id"] == truth_header["protocol_id"]
    assert header["kind"] == "noisy"
    assert truth_header["kind"] == "truth"
    assert header["seed"] == "3"


REPRO_OUTPUTS = (
    "mesh.json",
    "frames.csv",
    "frames_truth.csv",
    "basis.json",
    "repro_placement.json",
    "repro_projected.csv",
    "repro_eval.json",
    "repro_ablation.json",
    "repro_jacobian.json",
    "repro_modes.svg",
)


def _downstream(directory):
    config = directory / "config.yaml"
    for args in (
        ("place", "--mesh", directory / "mesh.json", "--basis", directory / "basis.json",
         "--out", directory / "repro_placement.json"),
        ("project", "--basis", directory / "basis.json", "--bad", "0",
         "--in", directory / "frames.csv", "--out", directory / "repro_projected.csv"),
        ("eval", "--truth", directory / "frames_truth.csv", "--projected", directory / "repro_projected.csv",
         "--out", directory / "repro_eval.json"),
        ("ablation", "--basis", directory / "basis.json", "--frames", directory / "frames.csv",
         "--truth", directory / "frames_truth.csv", "--out", directory / "repro_ablation.json"),
        ("jacobian", "--mesh", directory / "mesh.json", "--out", directory / "repro_jacobian.json"),
        ("render", "--mesh", directory / "mesh.json", "--basis", directory / "basis.json",
         "--jacobian", directory / "repro_jacobian.json", "--out", directory / "repro_modes.svg"),
    ):
        result = _invoke(config, *args)
        assert result.exit_code == 0, result.output


def test_pipeline_is_reproducible(workdir, tmp_path):
    _prepare(tmp_path)
    _downstream(workdir)
    _downstream(tmp_path)
    for name in REPRO_OUTPUTS:
        assert (tmp_path / name).read_bytes() == (workdir / name).read_bytes(), name


def test_project_and_eval(workdir):
    config = workdir / "config.yaml"
    result = _invoke(
        config,
        "project", "--basis", workdir / "basis.json", "--bad", "0",
        "--in", workdir / "frames.csv", "--out", workdir / "projected.csv",
    )
    assert result.exit_code == 0, result.output
    projected, header = read_frames(workdir / "projected.csv")
    assert projected.shape == (30, 40)
    assert header["bad"] == "0"
    assert header["method"] == "lstsq"

    result = _invoke(
        config,
        "eval", "--truth", workdir / "frames_truth.csv", "--projected", workdir / "projected.csv",
        "--out", workdir / "eval.json",
    )
    assert result.exit_code == 0, result.output
    report = json.loads((workdir / "eval.json").read_text())
    assert report["bad_electrodes"] == [0]
    assert report["frames"] == 30
    assert report["beats_baseline_fraction"] >= 0.9
    assert report["summary"]["median"] < report["baseline"]["median"]


def test_reduced_width_input_is_accepted(workdir, tmp_path):
    config = workdir / "config.yaml"
    result = _invoke(
        config,
        "fault", "--in", workdir / "frames.csv", "--bad", "2", "--model", "drop", "--out", tmp_path / "dropped.csv",
    )
    assert result.exit_code == 0, result.output
    dropped, _ = read_frames(tmp_path / "dropped.csv")
    assert dropped.shape == (30, 20)
    result = _invoke(
        config,
        "project", "--basis", workdir / "basis.json", "--bad", "2",
        "--in", tmp_path / "dropped.csv", "--out", tmp_path / "projected.csv",
    )
    assert result.exit_code == 0, result.output
    assert read_frames(tmp_path / "projected.csv")[0].shape == (30, 40)


def test_auto_detects_zeroed_electrode(workdir, tmp_path):
    config = workdir / "config.yaml"
    result = _invoke(
        config,
        "fault", "--in", workdir / "frames_truth.csv", "--bad", "5", "--model", "zero", "--out", tmp_path / "zeroed.csv",
    )
    assert result.exit_code == 0, result.output
    result = _invoke(
        config,
        "project", "--basis", workdir / "basis.json", "--bad", "auto",
        "--in", tmp_path / "zeroed.csv", "--out", tmp_path / "projected.csv",
    )
    assert result.exit_code == 0, result.output
    assert read_frames(tmp_path / "projected.csv")[1]["bad"] == "5"


def test_placement_and_renders(workdir):
    config = workdir / "config.yaml"
    result = _invoke(config, "place", "--mesh", workdir / "mesh.json", "--basis", workdir / "basis.json",
                     "--out", workdir / "placement.json", "--top", 3)
    assert result.exit_code == 0, result.output
    report = json.loads((workdir / "placement.json").read_text())
    assert len(report["entries"]) == 28
    assert [e["rank"] for e in report["entries"]] == list(range(1, 29))

    result = _invoke(config, "render-layout", "--report", workdir / "placement.json", "--out", workdir / "layout.svg")
    assert result.exit_code == 0, result.output
    assert (workdir / "layout.svg").read_text().count('class="electrode"') == 6

    result = _invoke(config, "jacobian", "--mesh", workdir / "mesh.json", "--out", workdir / "jacobian.json")
    assert result.exit_code == 0, result.output
    result = _invoke(
        config,
        "render", "--mesh", workdir / "mesh.json", "--basis", workdir / "basis.json",
        "--jacobian", workdir / "jacobian.json", "--modes", "1,2,3", "--out", workdir / "modes.svg",
    )
    assert result.exit_code == 0, result.output
    svg = (workdir / "modes.svg").read_text()
    assert svg.startswith("<svg")
    assert svg.count('class="panel"') == 3


def test_ablation_report(workdir):
    result = _invoke(
        workdir / "config.yaml",
        "ablation", "--basis", workdir / "basis.json", "--truth", workdir / "frames_truth.csv",
        "--out", workdir / "ablation.json",
    )
    assert result.exit_code == 0, result.output
    rows = json.loads((workdir / "ablation.json").read_text())["rows"]
    assert [row["electrodes"] for row in rows] == [[e] for e in range(8)]
    assert all(row["valid_count"] == 20 and row["modes"] == 5 for row in rows)


def test_missing_artifact_exits_with_data_error(workdir):
    result = _invoke(workdir / "config.yaml", "pod", "--in", workdir / "absent.csv", "--out", workdir / "x.json")
    assert result.exit_code == 2


def test_foreign_protocol_frames_are_refused(workdir, tmp_path):
    rows, _ = read_frames(workdir / "frames.csv")
    write_frames(tmp_path / "foreign.csv", rows, {"protocol_id": "deadbeefdead", "electrodes": 8})
    result = _invoke(
        workdir / "config.yaml",
        "project", "--basis", workdir / "basis.json", "--bad", "0",
        "--in", tmp_path / "foreign.csv", "--out", tmp_path / "p.csv",
    )
    assert result.exit_code == 2
    assert not (tmp_path / "p.csv").exists()


def test_bad_electrode_list_is_a_usage_error(workdir, tmp_path):
    result = _invoke(
        workdir / "config.yaml",
        "project", "--basis", workdir / "basis.json", "--bad", "zero",
        "--in", workdir / "frames.csv", "--out", tmp_path / "p.csv",
    )
    assert result.exit_code == 1


def test_ill_conditioned_projection_exits_with_numerical_error(workdir, tmp_path):
    result = _invoke(
        workdir / "config.yaml",
        "project", "--basis", workdir / "basis.json", "--bad", "0", "--threshold", 1.5,
        "--in", workdir / "frames.csv", "--out", tmp_path / "p.csv",
    )
    assert result.exit_code == 3


def test_unknown_command_exits_with_usage_error(monkeypatch):
    monkeypatch.setattr(sys, "argv", ["pod-eit", "no-such-command"])
    with pytest.raises(SystemExit) as excinfo:
        commands.main()
    assert excinfo.value.code == 1


def test_init_and_validate_config(tmp_path):
    config = tmp_path / "config.yaml"
    assert _invoke(config, "init-config").exit_code == 0
    assert yaml.safe_load(config.read_text())["placement"]["slots"] == 16
    assert _invoke(config, "init-config").exit_code == 1
    assert _invoke(config, "init-config", "--force").exit_code == 0
    assert _invoke(config, "validate").exit_code == 0

    config.write_text("projection:\n  condition_threshold: 0.5\n", encoding="utf-8")
    assert _invoke(config, "validate").exit_code == 2
    assert _invoke(config, "mesh", "--out", tmp_path / "mesh.json").exit_code == 2


def test_invalid_override_is_a_usage_error(workdir):
    result = _invoke(
        workdir / "config.yaml",
        "place", "--mesh", workdir / "mesh.json", "--basis", workdir / "basis.json", "--select", 9,
    )
    assert result.exit_code == 1


def test_frames_round_trip_through_fault_file(workdir, tmp_path):
    result = _invoke(
        workdir / "config.yaml",
        "fault", "--in", workdir / "frames.csv", "--bad", "1", "--model", "saturate", "--out", tmp_path / "sat.csv",
    )
    assert result.exit_code == 0, result.output
    rows, header = read_frames(tmp_path / "sat.csv")
    assert header["fault"] == "saturate"
    assert np.count_nonzero(rows[0] == 10.0) == 20


def test_unknown_log_level_exits_with_usage_error(monkeypatch, capsys):
    monkeypatch.setattr(sys, "argv", ["pod-eit", "--log-level", "LOUD", "validate"])
    with pytest.raises(SystemExit) as excinfo:
        commands.main()
    assert excinfo.value.code == 1
    assert "Traceback" not in capsys.readouterr().err


def test_unwritable_output_exits_with_data_error(workdir):
    result = _invoke(
        workdir / "config.yaml",
        "pod", "--in", workdir / "frames.csv", "--out", workdir / "frames.csv" / "basis.json",
    )
    assert result.exit_code == 2
    assert "Traceback" not in result.output


@pytest.mark.parametrize(
    "args",
    [
        ("mesh", "--density", 0),
        ("pod", "--max-modes", 0),
        ("project", "--bad", "0", "--threshold", 0),
        ("project", "--bad", "0", "--modes", 0),
    ],
)
def test_zero_overrides_are_validated(workdir, tmp_path, args):
    inputs = {
        "mesh": (),
        "pod": ("--in", workdir / "frames.csv"),
        "project": ("--basis", workdir / "basis.json", "--in", workdir / "frames.csv"),
    }[args[0]]
    result = _invoke(workdir / "config.yaml", *args, *inputs, "--out", tmp_path / "out")
    assert result.exit_code == 1
    assert not (tmp_path / "out").exists()


def test_square_projection_uses_every_valid_measurement(workdir, tmp_path):
    result = _invoke(
        workdir / "config.yaml",
        "project", "--basis", workdir / "basis.json", "--bad", "0", "--square", "--threshold", 1e15,
        "--in", workdir / "frames.csv", "--out", tmp_path / "square.csv",
    )
    assert result.exit_code == 0, result.output
    _, header = read_frames(tmp_path / "square.csv")
    assert header["method"] == "inverse"
    assert header["modes"] == "20"


def test_ablation_residual_uses_held_out_frames(workdir, tmp_path):
    config = workdir / "config.yaml"
    args = ("ablation", "--basis", workdir / "basis.json", "--truth", workdir / "frames_truth.csv")
    assert _invoke(config, *args, "--out", tmp_path / "span.json").exit_code == 0
    result = _invoke(config, *args, "--frames", workdir / "frames.csv", "--out", tmp_path / "held.json")
    assert result.exit_code == 0, result.output
    span = json.loads((tmp_path / "span.json").read_text())["rows"]
    held = json.loads((tmp_path / "held.json").read_text())["rows"]
    assert all(row["residual"] < 1e-8 for row in span)
    assert all(row["residual"] > 1e-8 for row in held)
