# PEP-8
import json

import numpy as np
import pytest

from flight.config import config_hash, with_overrides
from flight.policy import PolicyParams, read_checkpoint
from flight.training.optim import AdamW, clip_grad_norm, global_norm
from flight.training.trainer import LOG_COLUMNS, STREAM_INIT, read_log, train_policy


def without_wall_time(rows):
    return [{k: v for k, v in row.items() if k != "wall_time"} for row in rows]


def test_adamw_first_step_moves_by_lr():
    opt = AdamW(lr=0.1, weight_decay=0.0)
    updated = opt.step({"w": np.array([1.0, -1.0])}, {"w": np.array([2.0, -0.5])})
    np.testing.assert_allclose(updated["w"], [0.9, -0.9], rtol=1e-7)
    assert opt.t == 1


def test_adamw_decay_is_decoupled():
    opt = AdamW(lr=0.1, weight_decay=0.5)
    updated = opt.step({"w": np.array([2.0])}, {"w": np.array([0.0])})
    np.testing.assert_allclose(updated["w"], [2.0 - 0.1 * 0.5 * 2.0])


def test_adamw_returns_copies():
    params = {"w": np.ones(3)}
    AdamW(lr=0.1).step(params, {"w": np.ones(3)})
    np.testing.assert_array_equal(params["w"], np.ones(3))


def test_adamw_state_round_trip():
    opt = AdamW(lr=0.1)
    opt.step({"w": np.ones(2)}, {"w": np.array([0.3, -0.2])})
    restored = AdamW(lr=0.1)
    restored.load_state(opt.t, opt.state_arrays())
    a = opt.step({"w": np.ones(2)}, {"w": np.array([0.1, 0.1])})
    b = restored.step({"w": np.ones(2)}, {"w": np.array([0.1, 0.1])})
    np.testing.assert_array_equal(a["w"], b["w"])


def test_invalid_optimizer_settings():
    with pytest.raises(ValueError):
        AdamW(lr=-1.0)
    with pytest.raises(ValueError):
        AdamW(betas=(1.0, 0.999))


def test_clipping_scales_all_gradients_together():
    grads = {"a": np.array([3.0, 0.0]), "b": np.array([4.0])}
    assert global_norm(grads) == 5.0
    clipped, total = clip_grad_norm(grads, 1.0)
    assert total == 5.0
    np.testing.assert_allclose(clipped["a"], [0.6, 0.0])
    np.testing.assert_allclose(clipped["b"], [0.8])


def test_small_gradients_are_not_clipped():
    grads = {"a": np.array([0.1])}
    clipped, total = clip_grad_norm(grads, 1.0)
    assert clipped is grads
    assert total == pytest.approx(0.1)


def test_zero_learning_rate_keeps_parameters(micro_run, tmp_path):
    run = with_overrides(micro_run, {"train.lr": 0.0})
    result = train_policy(run, tmp_path)
    initial = PolicyParams.init(run.policy, [run.seed, STREAM_INIT])
    assert result.params.digest(None) == initial.digest(None)
    assert len(result.history) == 3


def test_training_writes_log_checkpoint_and_manifest(micro_run, tmp_path):
    result = train_policy(micro_run, tmp_path)
    rows = read_log(result.log)
    assert [r["iteration"] for r in rows] == [0.0, 1.0, 2.0]
    assert tuple(rows[0]) == LOG_COLUMNS
    assert all(np.isfinite(r["total"]) for r in rows)

    checkpoint = read_checkpoint(result.checkpoint, micro_run.policy)
    assert checkpoint.meta["iteration"] == 3
    assert checkpoint.meta["policy_digest"] == result.params.digest()
    assert checkpoint.params.digest() != PolicyParams.init(micro_run.policy, [3, STREAM_INIT]).digest()

    manifest = json.loads(result.manifest.read_text(encoding="utf-8"))
    assert manifest["kind"] == "train"
    assert manifest["config_hash"] == config_hash(micro_run)
    assert manifest["seed_streams"]["train"] == [3, 1, "iteration", "env"]


def test_training_is_reproducible(micro_run, tmp_path):
    a = train_policy(micro_run, tmp_path / "a")
    b = train_policy(micro_run, tmp_path / "b")
    assert a.params.digest() == b.params.digest()
    assert without_wall_time(read_log(a.log)) == without_wall_time(read_log(b.log))


def test_resume_reproduces_the_uninterrupted_run(micro_run, tmp_path):
    full = train_policy(micro_run, tmp_path / "full")

    short = with_overrides(micro_run, {"train.iterations": 2})
    partial = train_policy(short, tmp_path / "resumed")
    resumed = train_policy(micro_run, tmp_path / "resumed", resume=partial.checkpoint)

    assert resumed.params.digest() == full.params.digest()
    assert without_wall_time(read_log(resumed.log)) == without_wall_time(read_log(full.log))


def test_single_worker_matches_parallel(micro_run, tmp_path):
    serial = train_policy(with_overrides(micro_run, {"workers": 1}), tmp_path / "serial")
    parallel = train_policy(micro_run, tmp_path / "parallel")
    assert serial.params.digest() == parallel.params.digest()
