# PEP-8
from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from flight.config import RunConfig
from flight.diffcore import Tensor
from flight.policy import ObservationState, Policy, PolicyParams, probability
from flight.sim import (
    CameraModel,
    GapCourse,
    QuadState,
    check_collision,
    generate_course,
    preprocess,
    render_depth,
    stabilize,
    step,
)
from flight.training.auxiliary import label_trajectory
from flight.training.errors import RolloutDivergedError
from flight.training.rollout import rollout
from flight.training.trainer import STREAM_EVAL, sample_env
from utils.log import logger

from .controllers import Controller, PolicyController
from .errors import DegenerateDatasetError
from .metrics import PRCurve, crossing_errors, precision_recall
from .reports import EvalReport, GapRecord, TrialRecord
from .settings import ResetMode


# Third word of evaluation seeds.
COURSE_STREAM = 0
AIM_STREAM = 1
TRAV_STREAM = 2

ControllerFactory = Callable[[], Controller]


def _factory(source: PolicyParams | ControllerFactory) -> ControllerFactory:
    if isinstance(source, PolicyParams):
        return lambda: PolicyController(source)
    return source


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def timeout_steps(course: GapCourse, start, speed: float, dt: float, factor: float = 3.0) -> int:
    """``factor`` times the nominal flight time along the gap centers, in whole steps."""
    points = [np.asarray(start, dtype=np.float64)] + [g.pose.position for g in course.gaps]
    length = sum(float(np.linalg.norm(b - a)) for a, b in zip(points, points[1:]))
    return math.ceil(factor * length / speed / dt)


@dataclass
class Flight:
    gaps: list[GapRecord]
    steps: int
    outcome: str
    min_clearance: float
    positions: list[np.ndarray] = field(default_factory=list)


def fly_course(
    controller: Controller,
    course: GapCourse,
    run: RunConfig,
    speed: float,
    reset_mode: ResetMode = ResetMode.NONE,
    aims: Sequence[np.ndarray] | None = None,
    max_steps: int | None = None,
) -> Flight:
    """Fly from hover through the gaps in order until the last is crossed, a collision, or timeout.

    Crossings are measured on the true gap planes. The target direction moves
    to the next gap on a reset event in classifier mode and on the true
    crossing otherwise; the hidden state is reset only in the two reset modes.
    """
    dyn = run.dynamics
    radius = run.train.collision_radius
    threshold = run.eval.crossing_threshold
    start = np.asarray(run.gap.start_position, dtype=np.float64)
    gaps = course.gaps
    n = len(gaps)
    aims = list(aims) if aims is not None else [g.pose.position for g in gaps]
    if max_steps is None:
        max_steps = timeout_steps(course, start, speed, dyn.dt, run.eval.timeout_factor)

    controller.reset()
    state = QuadState.hover(dyn, start)
    v_target = speed * _unit(aims[0] - start)
    current = target = 0
    running = math.inf
    records: list[GapRecord | None] = [None] * n
    reset_steps = [-1] * n
    positions = [start.copy()]
    outcome = "timeout"
    k = 0

    for k in range(max_steps):
        camera = CameraModel.from_state(run.camera, state)
        depth = preprocess(render_depth(course.mesh, camera))
        obs = ObservationState.from_state(state, Tensor(v_target))
        cmd = controller.act(depth, obs, dyn)
        new = stabilize(step(state, cmd, dyn), k + 1, run.train.reortho_interval)
        positions.append(new.position.value.copy())

        contact = check_collision(new.position, course.mesh, radius)
        running = min(running, contact.distance - radius)

        pose = gaps[current].pose
        if -pose.to_local(state.position.value)[0] > 0 >= -pose.to_local(new.position.value)[0]:
            errors = crossing_errors(
                pose, state.position.value, state.rotation.value, new.position.value, new.rotation.value,
            )
            records[current] = GapRecord(
                gap=current,
                tilt_deg=math.degrees(gaps[current].tilt),
                crossed=True,
                success=running > 0,
                position_error=errors.position_error,
                attitude_error=errors.attitude_error_deg,
                clearance=running,
                crossing_step=k,
            )
            current += 1
            if reset_mode is not ResetMode.CLASSIFIER and target < current:
                if reset_mode is ResetMode.ORACLE_PLANE:
                    controller.reset_hidden()
                    reset_steps[current - 1] = k
                target = current
                if target < n:
                    v_target = speed * _unit(aims[target] - new.position.value)

        if reset_mode is ResetMode.CLASSIFIER and target < n:
            p = controller.crossing_probability()
            if p is not None and p > threshold:
                controller.reset_hidden()
                reset_steps[target] = k
                target += 1
                if target < n:
                    v_target = speed * _unit(aims[target] - new.position.value)

        state = new
        if contact.collided:
            outcome = "collision"
            break
        if current == n:
            outcome = "crossed"
            break
    steps = k + 1 if max_steps else 0

    gap_records = []
    for i, gap in enumerate(gaps):
        record = records[i] or GapRecord(
            gap=i, tilt_deg=math.degrees(gap.tilt), crossed=False, success=False, clearance=running,
        )
        gap_records.append(replace(record, reset_step=reset_steps[i]))
    return Flight(gap_records, steps, outcome, running, positions)


def course_seed(seed: int, trial: int) -> list[int]:
    return [seed, STREAM_EVAL, COURSE_STREAM, trial]


def aim_directions(seed: int, trial: int, n_gaps: int) -> np.ndarray:
    """Unit-box offsets per gap, shared by every noise level of a sweep."""
    rng = np.random.default_rng([seed, STREAM_EVAL, AIM_STREAM, trial])
    return rng.uniform(-1.0, 1.0, size=(n_gaps, 2))


def evaluate(
    source: PolicyParams | ControllerFactory,
    run: RunConfig,
    seed: int,
    kind: str,
    trials: int,
    n_gaps: int = 1,
    tilt_range: tuple[float, float] | None = None,
    spacing: tuple[float, float] | None = None,
    reset_mode: ResetMode = ResetMode.NONE,
    aim_noise: float = 0.0,
    keep_paths: bool = False,
) -> tuple[EvalReport, list[Flight]]:
    """Run ``trials`` seeded courses in parallel; records come back in trial order."""
    make = _factory(source)
    gap_config = replace(run.gap, tilt_range_deg=tuple(tilt_range or run.eval.tilt_range_deg))
    spacing = tuple(spacing or run.eval.course_spacing)
    speed = run.eval.speed

    def trial(index: int) -> tuple[TrialRecord, Flight]:
        words = course_seed(seed, index)
        course = generate_course(words, n_gaps, gap_config, spacing)
        offsets = aim_noise * aim_directions(seed, index, n_gaps)
        aims = [g.pose.to_world([0.0, dy, dz]) for g, (dy, dz) in zip(course.gaps, offsets)]
        flight = fly_course(make(), course, run, speed, reset_mode, aims)
        record = TrialRecord(
            trial=index,
            seed="-".join(str(w) for w in words),
            success=all(g.success for g in flight.gaps),
            min_clearance=flight.min_clearance,
            steps=flight.steps,
            outcome=flight.outcome,
            gaps=tuple(flight.gaps),
        )
        if not keep_paths:
            flight.positions = []
        return record, flight

    logger.info(f"Evaluating {kind}: {trials} trials, {n_gaps} gap(s), reset {reset_mode.value}")
    with ThreadPoolExecutor(max_workers=run.workers) as pool:
        results = list(pool.map(trial, range(trials)))
    report = EvalReport.build(
        kind,
        [r for r, _ in results],
        seed=seed,
        n_gaps=n_gaps,
        reset_mode=reset_mode.value,
        aim_noise=aim_noise,
        tilt_range=f"{gap_config.tilt_range_deg[0]:g}:{gap_config.tilt_range_deg[1]:g}",
    )
    logger.info(f"{kind}: success rate {report.success_rate:.3f}")
    return report, [f for _, f in results]


def eval_single_gap(
    source: PolicyParams | ControllerFactory,
    run: RunConfig,
    seed: int,
    trials: int | None = None,
    tilt_range: tuple[float, float] | None = None,
) -> EvalReport:
    report, _ = evaluate(
        source, run, seed, "single-gap",
        trials=trials or run.eval.trials,
        tilt_range=tilt_range or run.eval.tilt_range_deg,
    )
    return report


def eval_multi_gap(
    source: PolicyParams | ControllerFactory,
    run: RunConfig,
    seed: int,
    n_gaps: int | None = None,
    spacing: tuple[float, float] | None = None,
    reset_mode: ResetMode | None = None,
    trials: int | None = None,
    tilt_range: tuple[float, float] | None = None,
) -> EvalReport:
    report, _ = evaluate(
        source, run, seed, "multi-gap",
        trials=trials or run.eval.trials,
        n_gaps=n_gaps or run.eval.n_gaps,
        tilt_range=tilt_range or run.eval.course_tilt_deg,
        spacing=spacing or run.eval.course_spacing,
        reset_mode=reset_mode or run.eval.reset_mode,
    )
    return report


@dataclass
class NoiseSweep:
    levels: tuple[float, ...]
    reports: dict[float, EvalReport]
    paths: dict[float, list[list[np.ndarray]]]

    def success_rates(self) -> dict[float, float]:
        return {level: self.reports[level].success_rate for level in self.levels}

    def rows(self) -> list[dict]:
        return [
            {"noise": level, "success_rate": report.success_rate, "trials": len(report.trials)}
            for level, report in self.reports.items()
        ]

    def path_rows(self) -> list[dict]:
        return [
            {"noise": level, "trial": trial, "step": i, "x": p[0], "y": p[1], "z": p[2]}
            for level, paths in self.paths.items()
            for trial, path in enumerate(paths)
            for i, p in enumerate(path)
        ]


def eval_target_noise(
    source: PolicyParams | ControllerFactory,
    run: RunConfig,
    seed: int,
    levels: Sequence[float] | None = None,
    trials: int | None = None,
    keep_paths: bool = True,
) -> NoiseSweep:
    """Single-gap success per aim-noise level, with the same scenes and offset draws at every level."""
    levels = tuple(float(level) for level in (levels if levels is not None else run.eval.noise_levels))
    if any(level < 0 for level in levels):
        raise ValueError(f"noise levels must be >= 0, got {levels}")
    reports, paths = {}, {}
    for level in levels:
        report, flights = evaluate(
            source, run, seed, "target-noise",
            trials=trials or run.eval.trials,
            aim_noise=level,
            keep_paths=keep_paths,
        )
        reports[level] = report
        paths[level] = [f.positions for f in flights]
    return NoiseSweep(levels, reports, paths)


@dataclass
class TraversabilityResult:
    curve: PRCurve
    scores: np.ndarray
    labels: np.ndarray
    scales: np.ndarray

    def rows(self) -> list[dict]:
        return [
            {"trajectory": i, "scale": float(s), "label": int(y), "score": float(p)}
            for i, (s, y, p) in enumerate(zip(self.scales, self.labels, self.scores))
        ]


def trajectory_score(policy: Policy, hidden: np.ndarray, pre_crossing: np.ndarray) -> float:
    """Mean traversability probability over the steps before the plane."""
    states = hidden[pre_crossing] if pre_crossing.any() else hidden[:1]
    logits = policy.aux_logits("traversability", Tensor(states)).value
    return float(np.mean(probability(logits)))


def eval_traversability(
    params: PolicyParams,
    run: RunConfig,
    seed: int,
    n_trajectories: int | None = None,
    scale_range: tuple[float, float] | None = None,
) -> TraversabilityResult:
    n_trajectories = n_trajectories or run.eval.trav_trajectories
    gap = replace(run.gap, scale_range=tuple(scale_range or run.eval.trav_scale_range))
    settings = run.rollout_settings(run.aux.horizon)
    policy = Policy(params)

    def trajectory(index: int):
        env = sample_env(run, [seed, STREAM_EVAL, TRAV_STREAM, index], gap=gap)
        try:
            record = rollout(Policy(params), env, settings).record
        except RolloutDivergedError as e:
            logger.warning(f"Dropping trajectory {index}: {e}")
            return None
        if not record.hidden:
            return None
        labels = label_trajectory(record, run.aux.safety_margin)
        score = trajectory_score(policy, np.asarray(record.hidden), labels.pre_crossing)
        return env.scene.scale, float(labels.traversable), score

    with ThreadPoolExecutor(max_workers=run.workers) as pool:
        results = [r for r in pool.map(trajectory, range(n_trajectories)) if r is not None]
    if not results:
        raise DegenerateDatasetError(0, 0)
    scales, labels, scores = (np.array(column) for column in zip(*results))
    curve = precision_recall(labels, scores)
    logger.info(
        f"Traversability AP {curve.average_precision:.3f} over {len(labels)} trajectories "
        f"({int(labels.sum())} traversable)"
    )
    return TraversabilityResult(curve, scores, labels, scales)
