# PEP-8
from io import StringIO

import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from flight.harness.reports import load_report, read_summary
from flight.policy import AUX_PREFIXES, load_checkpoint
from flight.sim import load_scene, read_pgm


def run_command(name, *args):
    out = StringIO()
    call_command(name, *args, stdout=out)
    return out.getvalue()


@pytest.fixture
def trained(micro_config, tmp_path):
    out_dir = tmp_path / "train"
    run_command("train", "--config", str(micro_config), "--seed", "3", "--out-dir", str(out_dir),
                "--iterations", "2")
    return out_dir / "policy.gnav"


def test_render_test_writes_image_and_scene(tmp_path):
    output = run_command("render_test", "--scene-seed", "3", "--out-dir", str(tmp_path))
    assert "depth 32x24" in output
    image = read_pgm(tmp_path / "depth.pgm")
    assert (image.width, image.height) == (32, 24)
    assert len(load_scene(tmp_path / "scene.txt").poses) == 1


def test_gradcheck_command(tmp_path):
    output = run_command("gradcheck", "--seed", "0", "--steps", "2", "--rollouts", "2", "--out-dir", str(tmp_path))
    assert "max relative error" in output
    summary = read_summary(tmp_path / "gradcheck_summary.txt")
    assert summary["passed"] == "1"
    assert summary["rollouts"] == "2"
    assert summary["worst_seed"] in {"0", "1"}


def test_gradcheck_needs_a_rollout(tmp_path):
    with pytest.raises(CommandError) as info:
        call_command("gradcheck", "--seed", "0", "--rollouts", "0", "--out-dir", str(tmp_path))
    assert info.value.returncode == 1


def test_train_command(trained):
    assert trained.is_file()
    summary = read_summary(trained.parent / "train_summary.txt")
    assert summary["iterations"] == "2"
    assert (trained.parent / "train_log.csv").is_file()
    assert (trained.parent / "manifest.json").is_file()


def test_train_aux_command(trained, micro_config, tmp_path):
    out_dir = tmp_path / "aux"
    run_command("train_aux", "--config", str(micro_config), "--seed", "3", "--policy", str(trained),
                "--out-dir", str(out_dir), "--iterations", "1")
    aux = load_checkpoint(out_dir / "aux.gnav")
    assert aux.digest() == load_checkpoint(trained).digest()
    assert aux.digest(AUX_PREFIXES) != load_checkpoint(trained).digest(AUX_PREFIXES)


def test_eval_single_command(trained, micro_config, tmp_path):
    output = run_command("eval_single", "--config", str(micro_config), "--seed", "1", "--policy", str(trained),
                         "--out-dir", str(tmp_path), "--trials", "2", "--tilt-range=-20:20")
    assert output.startswith("success rate")
    report = load_report(tmp_path / "single_gap_trials.csv", tmp_path / "single_gap_summary.txt")
    assert len(report.trials) == 2
    assert all(-20.0 <= t.tilt_deg <= 20.0 for t in report.trials)


def test_eval_multi_command(trained, micro_config, tmp_path):
    run_command("eval_multi", "--config", str(micro_config), "--seed", "1", "--policy", str(trained),
                "--out-dir", str(tmp_path), "--trials", "1", "--n-gaps", "2", "--reset-mode", "oracle-plane")
    report = load_report(tmp_path / "multi_gap_trials.csv", tmp_path / "multi_gap_summary.txt")
    assert report.meta["reset_mode"] == "oracle-plane"
    assert len(report.trials[0].gaps) == 2


def test_eval_noise_command(trained, micro_config, tmp_path):
    output = run_command("eval_noise", "--config", str(micro_config), "--seed", "1", "--policy", str(trained),
                         "--out-dir", str(tmp_path), "--trials", "1", "--levels", "0", "1")
    assert "noise 0 m" in output
    assert "noise 1 m" in output
    assert (tmp_path / "noise_paths.csv").is_file()


def test_bench_render_command(micro_config, tmp_path):
    run_command("bench_render", "--config", str(micro_config), "--seed", "0", "--frames", "2",
                "--out-dir", str(tmp_path))
    assert read_summary(tmp_path / "bench_summary.txt")["mismatches"] == "0"


def test_missing_config_is_a_usage_error(tmp_path):
    with pytest.raises(CommandError) as info:
        call_command("train", "--config", str(tmp_path / "absent.json"), "--seed", "1",
                     "--out-dir", str(tmp_path))
    assert info.value.returncode == 1


def test_missing_checkpoint_is_a_runtime_error(micro_config, tmp_path):
    with pytest.raises(CommandError) as info:
        call_command("eval_single", "--config", str(micro_config), "--seed", "1",
                     "--policy", str(tmp_path / "absent.gnav"), "--out-dir", str(tmp_path))
    assert info.value.returncode == 2
