# PEP-8
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

import gapnav
from flight.config import RunConfig, config_dict, config_hash
from flight.diffcore import Tape, backward
from flight.policy import Policy, PolicyParams, read_checkpoint, save_checkpoint
from flight.sim import GapConfig, GapPose, generate_gap, randomize_params
from utils.log import logger

from .bimodal import HOVER_ONLY, sample_initial_state
from .errors import RolloutDivergedError, TrainingHaltedError
from .optim import AdamW, clip_grad_norm
from .rollout import RolloutEnv, RolloutRecord, RolloutSettings, rollout


# Second word of every seed sequence, so the random streams never overlap.
STREAM_INIT = 0
STREAM_TRAIN = 1
STREAM_AUX = 2
STREAM_EVAL = 3

LOSS_COLUMNS = ("L_p", "L_r", "L_v", "L_f", "L_a", "L_j", "total")
LOG_COLUMNS = ("iteration", *LOSS_COLUMNS, "grad_norm", "wall_time")


def aim_point(pose: GapPose, noise: float, rng: np.random.Generator) -> np.ndarray:
    """Gap center displaced in the gap plane by uniform offsets within +-noise."""
    offset = rng.uniform(-noise, noise, size=2)
    return pose.to_world([0.0, offset[0], offset[1]])


def target_velocity(start: np.ndarray, aim: np.ndarray, speed: float) -> np.ndarray:
    direction = aim - start
    return speed * direction / np.linalg.norm(direction)


def sample_env(
    run: RunConfig,
    seed,
    gap: GapConfig | None = None,
    use_bimodal: bool | None = None,
) -> RolloutEnv:
    """Scene, randomized dynamics, target speed and initial state for one environment."""
    rng = np.random.default_rng(seed)
    gap = gap or run.gap
    scene = generate_gap(rng, gap)
    dynamics = randomize_params(run.dynamics, rng, run.randomization.param_scale_range)
    speed = float(rng.uniform(*run.train.speed_range))
    start = np.asarray(gap.start_position, dtype=np.float64)
    v_target = target_velocity(start, aim_point(scene.pose, run.train.aim_noise, rng), speed)
    use_bimodal = run.train.use_bimodal if use_bimodal is None else use_bimodal
    initial = sample_initial_state(
        run.bimodal if use_bimodal else HOVER_ONLY,
        speed,
        rng,
        dynamics,
        position=start,
        forward=v_target,
    )
    return RolloutEnv(scene, dynamics, initial, speed, v_target, tuple(np.atleast_1d(seed).tolist()))


@dataclass
class EnvOutcome:
    losses: dict[str, float] = field(default_factory=dict)
    grads: dict[str, np.ndarray] = field(default_factory=dict)
    record: RolloutRecord | None = None
    error: RolloutDivergedError | None = None


def env_gradients(
    params: PolicyParams,
    env: RolloutEnv,
    settings: RolloutSettings,
    iteration: int = 0,
) -> EnvOutcome:
    """One rollout on its own tape, then backward; the tape is dropped on return."""
    tape = Tape()
    policy = Policy(params, tape)
    try:
        result = rollout(policy, env, settings, iteration=iteration)
    except RolloutDivergedError as e:
        return EnvOutcome(error=e)
    grads = backward(tape, result.losses.total)
    return EnvOutcome(
        losses=result.losses.values(),
        grads={name: grads.grad(leaf) for name, leaf in policy.leaves().items()},
        record=result.record,
    )


def reduce_outcomes(outcomes: list[EnvOutcome]) -> tuple[dict[str, float], dict[str, np.ndarray]]:
    """Average losses and gradients in environment order."""
    n = len(outcomes)
    losses = {k: sum(o.losses[k] for o in outcomes) / n for k in LOSS_COLUMNS}
    grads = {}
    for name in outcomes[0].grads:
        total = np.zeros_like(outcomes[0].grads[name])
        for o in outcomes:
            total = total + o.grads[name]
        grads[name] = total / n
    return losses, grads


def all_finite(grads: dict[str, np.ndarray]) -> bool:
    return all(np.all(np.isfinite(g)) for g in grads.values())


class TrainingLog:
    """CSV log, one row per iteration."""

    def __init__(self, path: Path, resume_from: int = 0) -> None:
        self.path = path
        rows = []
        if resume_from and path.is_file():
            with path.open(newline="", encoding="utf-8") as f:
                rows = [r for r in csv.DictReader(f) if int(r["iteration"]) < resume_from]
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=LOG_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)

    def append(self, row: dict) -> None:
        with self.path.open("a", newline="", encoding="utf-8") as f:
            csv.DictWriter(f, fieldnames=LOG_COLUMNS).writerow(
                {k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in row.items()}
            )


def read_log(path: str | Path) -> list[dict[str, float]]:
    with Path(path).open(newline="", encoding="utf-8") as f:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(f)]


def write_manifest(path: Path, run: RunConfig, **extra) -> Path:
    manifest = {
        "version": gapnav.__version__,
        "config": config_dict(run),
        "config_hash": config_hash(run),
        "seed": run.seed,
        "workers": run.workers,
        "seed_streams": {
            "init": [run.seed, STREAM_INIT],
            "train": [run.seed, STREAM_TRAIN, "iteration", "env"],
            "aux": [run.seed, STREAM_AUX, "iteration", "env"],
            "eval": [run.seed, STREAM_EVAL, "trial"],
        },
        "written_at": datetime.now(timezone.utc).isoformat(),
        **extra,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return path


@dataclass
class TrainResult:
    params: PolicyParams
    checkpoint: Path
    log: Path
    manifest: Path
    history: list[dict[str, float]] = field(default_factory=list)
    skipped: int = 0


def train_policy(
    run: RunConfig,
    out_dir: str | Path,
    resume: str | Path | None = None,
    initial: PolicyParams | None = None,
) -> TrainResult:
    cfg = run.train
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint_path = out_dir / "policy.gnav"
    settings = run.rollout_settings(cfg.horizon)

    params = initial or PolicyParams.init(run.policy, [run.seed, STREAM_INIT])
    optimizer = AdamW(cfg.lr, cfg.betas, cfg.eps, cfg.weight_decay)
    start, streak, skipped_total = 0, 0, 0
    if resume is not None:
        state = read_checkpoint(resume, run.policy)
        params = state.params
        start = int(state.meta.get("iteration", 0))
        streak = int(state.meta.get("skip_streak", 0))
        skipped_total = int(state.meta.get("skipped", 0))
        optimizer.load_state(int(state.meta.get("optimizer_step", 0)), state.extra)
        logger.info(f"Resuming training from iteration {start} ({resume})")

    log = TrainingLog(out_dir / "train_log.csv", resume_from=start)
    history: list[dict[str, float]] = []

    def save(iteration: int) -> None:
        save_checkpoint(
            params,
            checkpoint_path,
            meta={
                "kind": "policy",
                "iteration": iteration,
                "optimizer_step": optimizer.t,
                "skip_streak": streak,
                "skipped": skipped_total,
                "config_hash": config_hash(run),
                "policy_digest": params.digest(),
            },
            extra=optimizer.state_arrays(),
        )

    logger.info(
        "Training policy: %d iterations, batch %d, horizon %d, %d workers",
        cfg.iterations, cfg.batch, cfg.horizon, run.workers,
    )
    with ThreadPoolExecutor(max_workers=run.workers) as pool:
        for iteration in range(start, cfg.iterations):
            started = time.perf_counter()
            envs = [sample_env(run, [run.seed, STREAM_TRAIN, iteration, e]) for e in range(cfg.batch)]
            current = params
            outcomes = list(pool.map(lambda env: env_gradients(current, env, settings, iteration), envs))

            diverged = [o.error for o in outcomes if o.error is not None]
            if diverged:
                for e in diverged:
                    logger.warning(f"Skipping step: {e}")
                losses, grads, grad_norm = {k: math.nan for k in LOSS_COLUMNS}, {}, math.nan
            else:
                losses, grads = reduce_outcomes(outcomes)
                grads, grad_norm = clip_grad_norm(grads, cfg.grad_clip)

            if diverged or not all_finite(grads):
                streak += 1
                skipped_total += 1
                logger.warning(f"Non-finite gradient at iteration {iteration}, step skipped ({streak} in a row)")
                if streak >= cfg.max_nan_skips:
                    save(iteration)
                    raise TrainingHaltedError(iteration, streak)
            else:
                streak = 0
                params = params.replaced(optimizer.step(params.arrays, grads))

            row = {"iteration": iteration, **losses, "grad_norm": grad_norm,
                   "wall_time": time.perf_counter() - started}
            log.append(row)
            history.append(row)
            if iteration % cfg.log_every == 0:
                logger.info(
                    "iter %d total=%.5f L_p=%.4f L_r=%.4f grad=%.3e",
                    iteration, losses["total"], losses["L_p"], losses["L_r"], grad_norm,
                )
            if (iteration + 1) % cfg.checkpoint_every == 0:
                save(iteration + 1)

    save(max(cfg.iterations, start))
    manifest = write_manifest(
        out_dir / "manifest.json",
        run,
        kind="train",
        iterations=cfg.iterations,
        resumed_from=start if resume is not None else None,
        skipped_steps=skipped_total,
        policy_digest=params.digest(),
        checkpoint=checkpoint_path.name,
    )
    logger.info(f"Training finished, checkpoint {checkpoint_path}")
    return TrainResult(params, checkpoint_path, log.path, manifest, history, skipped_total)
