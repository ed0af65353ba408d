# PEP-8
from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from flight.config import RunConfig
from flight.diffcore import Tape, Tensor, backward, mul, softplus, sub, sum_
from flight.policy import (
    AUX_PREFIXES,
    Policy,
    PolicyArch,
    PolicyParams,
    check_architecture,
    read_checkpoint,
    save_checkpoint,
)
from utils.log import logger

from .errors import FrozenWeightsError, RolloutDivergedError
from .optim import AdamW, clip_grad_norm
from .rollout import RolloutRecord, RolloutSettings, rollout
from .trainer import STREAM_AUX, STREAM_INIT, sample_env, write_manifest


AUX_COLUMNS = ("iteration", "L_cross", "L_trav", "cross_accuracy", "trav_positive",
               "trav_balance", "samples", "grad_norm", "wall_time")


@dataclass(frozen=True)
class TrajectoryLabels:
    """Per-step crossing labels and the trajectory's traversability label.

    ``pre_crossing`` selects the steps that carry the traversability label.
    """

    crossing: np.ndarray
    traversable: bool
    pre_crossing: np.ndarray


def label_trajectory(record: RolloutRecord, safety_margin: float) -> TrajectoryLabels:
    flags = np.asarray(record.flags, dtype=np.float64)
    crossing = (flags == 0.0).astype(np.float64)
    traversable = record.collided_at is None and record.min_clearance > safety_margin
    return TrajectoryLabels(crossing, bool(traversable), flags == 1.0)


def class_weights(labels: np.ndarray, imbalance_limit: float = 9.0) -> np.ndarray:
    """Per-sample weights giving both classes equal total weight."""
    labels = np.asarray(labels, dtype=np.float64)
    n = labels.size
    n_pos = float(labels.sum())
    n_neg = n - n_pos
    if n == 0:
        return np.zeros(0)
    if n_pos == 0 or n_neg == 0:
        logger.warning(f"Only one class among {n} labels, samples left unweighted")
        return np.ones(n)
    ratio = max(n_pos, n_neg) / min(n_pos, n_neg)
    if ratio > imbalance_limit:
        logger.warning(f"Label imbalance {ratio:.1f}:1 exceeds {imbalance_limit:g}:1, reweighting")
    return np.where(labels == 1.0, n / (2.0 * n_pos), n / (2.0 * n_neg))


def weighted_positive_fraction(labels: np.ndarray, weights: np.ndarray) -> float:
    total = float(weights.sum())
    return float((weights * labels).sum()) / total if total > 0 else float("nan")


@dataclass
class AuxBatch:
    hidden: np.ndarray
    crossing: np.ndarray
    trav_hidden: np.ndarray
    traversable: np.ndarray
    scales: list[float] = field(default_factory=list)
    trajectories: int = 0


def collect_batch(
    params: PolicyParams,
    run: RunConfig,
    iteration: int,
    settings: RolloutSettings,
    pool: ThreadPoolExecutor,
) -> AuxBatch:
    """Forward-only rollouts of the frozen policy, labelled from ground truth."""
    cfg = run.aux
    gap = replace(run.gap, scale_range=cfg.scale_range)
    envs = [sample_env(run, [run.seed, STREAM_AUX, iteration, e], gap=gap) for e in range(cfg.batch)]

    def fly(env):
        try:
            return env, rollout(Policy(params), env, settings, iteration=iteration).record
        except RolloutDivergedError as e:
            logger.warning(f"Dropping auxiliary trajectory: {e}")
            return env, None

    hidden, crossing, trav_hidden, traversable, scales = [], [], [], [], []
    for env, record in pool.map(fly, envs):
        if record is None or not record.hidden:
            continue
        labels = label_trajectory(record, cfg.safety_margin)
        states = np.asarray(record.hidden)
        hidden.append(states)
        crossing.append(labels.crossing)
        pre = states[labels.pre_crossing]
        trav_hidden.append(pre)
        traversable.append(np.full(len(pre), float(labels.traversable)))
        scales.append(env.scene.scale)

    embed = params.arch.embed
    return AuxBatch(
        hidden=np.concatenate(hidden) if hidden else np.zeros((0, embed)),
        crossing=np.concatenate(crossing) if crossing else np.zeros(0),
        trav_hidden=np.concatenate(trav_hidden) if trav_hidden else np.zeros((0, embed)),
        traversable=np.concatenate(traversable) if traversable else np.zeros(0),
        scales=scales,
        trajectories=len(scales),
    )


def bce_with_logits(logits: Tensor, labels: np.ndarray, weights: np.ndarray) -> Tensor:
    """Weighted mean of softplus(z) - y z, the logit form of binary cross-entropy."""
    per_sample = sub(softplus(logits), mul(logits, labels))
    return sum_(mul(per_sample, weights)) * (1.0 / len(labels))


def head_loss(policy: Policy, head: str, hidden: np.ndarray, labels: np.ndarray, weights: np.ndarray) -> Tensor:
    if len(labels) == 0:
        return Tensor(0.0)
    return bce_with_logits(policy.aux_logits(head, Tensor(hidden)), labels, weights)


def policy_for_aux(path: str | Path, arch: PolicyArch, seed: int) -> PolicyParams:
    """Policy weights from ``path`` with auxiliary heads of the configured width.

    Heads of another width are replaced by freshly initialized ones; any other
    architecture difference is an error.
    """
    params = read_checkpoint(path).params
    check_architecture(replace(params.arch, aux_hidden=arch.aux_hidden), arch)
    if params.arch.aux_hidden == arch.aux_hidden:
        return params
    logger.info(f"Re-initializing auxiliary heads at width {arch.aux_hidden} (checkpoint has {params.arch.aux_hidden})")
    fresh = PolicyParams.init(arch, [seed, STREAM_INIT, 1])
    kept = {name: params[name] for name in params.names() if name not in fresh.names(AUX_PREFIXES)}
    return fresh.replaced(kept)


@dataclass
class AuxResult:
    params: PolicyParams
    checkpoint: Path
    log: Path
    manifest: Path
    history: list[dict[str, float]] = field(default_factory=list)
    scales: list[float] = field(default_factory=list)


def train_auxiliary(run: RunConfig, policy_checkpoint: str | Path, out_dir: str | Path) -> AuxResult:
    """Fit the crossing and traversability heads on hidden states of a frozen policy."""
    cfg = run.aux
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = policy_for_aux(policy_checkpoint, run.policy, run.seed)
    frozen = params.digest()
    settings = run.rollout_settings(cfg.horizon)
    optimizer = AdamW(cfg.lr, run.train.betas, run.train.eps, cfg.weight_decay)
    checkpoint_path = out_dir / "aux.gnav"
    log_path = out_dir / "aux_log.csv"
    history: list[dict[str, float]] = []
    scales: list[float] = []

    def save(iteration: int) -> None:
        save_checkpoint(
            params,
            checkpoint_path,
            meta={
                "kind": "aux",
                "iteration": iteration,
                "optimizer_step": optimizer.t,
                "policy_digest": frozen,
                "aux_digest": params.digest(AUX_PREFIXES),
            },
        )

    with log_path.open("w", newline="", encoding="utf-8") as f:
        csv.DictWriter(f, fieldnames=AUX_COLUMNS).writeheader()

    logger.info(f"Training auxiliary heads on {policy_checkpoint}: {cfg.iterations} iterations, batch {cfg.batch}")
    with ThreadPoolExecutor(max_workers=run.workers) as pool:
        for iteration in range(cfg.iterations):
            started = time.perf_counter()
            batch = collect_batch(params, run, iteration, settings, pool)
            scales.extend(batch.scales)
            if batch.trajectories == 0:
                logger.warning(f"No usable trajectories at auxiliary iteration {iteration}")
                continue

            tape = Tape()
            policy = Policy(params, tape, trainable=AUX_PREFIXES)
            cross_weights = class_weights(batch.crossing, cfg.imbalance_limit)
            trav_weights = class_weights(batch.traversable, cfg.imbalance_limit)
            l_cross = head_loss(policy, "crossing", batch.hidden, batch.crossing, cross_weights)
            l_trav = head_loss(policy, "traversability", batch.trav_hidden, batch.traversable, trav_weights)
            grads_store = backward(tape, l_cross + l_trav)
            grads = {name: grads_store.grad(leaf) for name, leaf in policy.leaves().items()}
            grads, grad_norm = clip_grad_norm(grads, cfg.grad_clip)
            params = params.replaced(optimizer.step(params.arrays, grads))

            predicted = Policy(params).aux_logits("crossing", Tensor(batch.hidden)).value > 0.0
            row = {
                "iteration": iteration,
                "L_cross": float(l_cross.value),
                "L_trav": float(l_trav.value),
                "cross_accuracy": float(np.mean(predicted == (batch.crossing == 1.0))),
                "trav_positive": float(batch.traversable.mean()) if len(batch.traversable) else float("nan"),
                "trav_balance": weighted_positive_fraction(batch.traversable, trav_weights),
                "samples": len(batch.crossing),
                "grad_norm": grad_norm,
                "wall_time": time.perf_counter() - started,
            }
            with log_path.open("a", newline="", encoding="utf-8") as f:
                csv.DictWriter(f, fieldnames=AUX_COLUMNS).writerow(row)
            history.append(row)
            if iteration % cfg.log_every == 0:
                logger.info(
                    "aux iter %d L_cross=%.4f L_trav=%.4f acc=%.3f",
                    iteration, row["L_cross"], row["L_trav"], row["cross_accuracy"],
                )
            if (iteration + 1) % cfg.checkpoint_every == 0:
                save(iteration + 1)

    after = params.digest()
    if after != frozen:
        raise FrozenWeightsError(frozen, after)
    save(cfg.iterations)
    manifest = write_manifest(
        out_dir / "aux_manifest.json",
        run,
        kind="train-aux",
        iterations=cfg.iterations,
        policy_checkpoint=str(policy_checkpoint),
        policy_digest=frozen,
        aux_digest=params.digest(AUX_PREFIXES),
        checkpoint=checkpoint_path.name,
    )
    logger.info(f"Auxiliary training finished, checkpoint {checkpoint_path}")
    return AuxResult(params, checkpoint_path, log_path, manifest, history, scales)
