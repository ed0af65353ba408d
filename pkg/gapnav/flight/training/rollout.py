# PEP-8
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from flight.diffcore import NonFiniteError, Tape, Tensor, identity, mark_step_boundary
from flight.policy import HiddenState, ObservationState, Policy, PolicyError
from flight.sim import (
    CameraIntrinsics,
    CameraModel,
    DepthNoise,
    DynamicsParams,
    GapScene,
    QuadState,
    check_collision,
    gap_relative,
    preprocess,
    render_depth,
    stabilize,
    step,
)

from .errors import RolloutDivergedError
from .losses import (
    LossBreakdown,
    LossSettings,
    StepTerms,
    action_loss,
    alignment_loss,
    jerk_loss,
    position_loss,
    rotation_loss,
    total_loss,
    velocity_loss,
)


@dataclass(frozen=True)
class RolloutSettings:
    horizon: int = 80
    decay_alpha: float = 0.0
    collision_radius: float = 0.1
    reortho_interval: int = 100
    losses: LossSettings = field(default_factory=LossSettings)
    camera: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    noise: DepthNoise = field(default_factory=DepthNoise)

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.decay_alpha < 0:
            raise ValueError("decay alpha must be >= 0")


@dataclass(frozen=True, eq=False)
class RolloutEnv:
    """One environment of a batch: scene, randomized dynamics, start state and targets."""

    scene: GapScene
    dynamics: DynamicsParams
    initial: QuadState
    speed: float
    v_target: np.ndarray
    seed: tuple[int, ...] = ()

    @property
    def v_ref(self) -> np.ndarray:
        return self.speed * self.scene.pose.normal


@dataclass
class RolloutRecord:
    """Per-step values of one rollout as plain arrays; appended to, never rewritten."""

    positions: list[np.ndarray] = field(default_factory=list)
    rotations: list[np.ndarray] = field(default_factory=list)
    velocities: list[np.ndarray] = field(default_factory=list)
    commands: list[np.ndarray] = field(default_factory=list)
    observations: list[np.ndarray] = field(default_factory=list)
    hidden: list[np.ndarray] = field(default_factory=list)
    distances: list[float] = field(default_factory=list)
    flags: list[float] = field(default_factory=list)
    clearances: list[float] = field(default_factory=list)
    step_losses: list[dict[str, float]] = field(default_factory=list)
    collided_at: int | None = None

    def append_state(self, state: QuadState) -> None:
        self.positions.append(state.position.value.copy())
        self.rotations.append(state.rotation.value.copy())
        self.velocities.append(state.velocity.value.copy())

    @property
    def crossed_at(self) -> int | None:
        for i, flag in enumerate(self.flags):
            if flag == 0.0:
                return i
        return None

    @property
    def min_clearance(self) -> float:
        return min(self.clearances) if self.clearances else float("inf")


@dataclass
class RolloutResult:
    record: RolloutRecord
    losses: LossBreakdown
    final_state: QuadState
    final_hidden: HiddenState


def boundary(state: QuadState, tape: Tape | None, alpha: float, dt: float) -> QuadState:
    """Pass the state through identity nodes and mark them for gradient decay."""
    if tape is None:
        return state
    crossed = QuadState(*(identity(t) for t in state.tensors()))
    mark_step_boundary(tape, crossed.tensors(), alpha, dt)
    return crossed


def rollout(
    policy: Policy,
    env: RolloutEnv,
    settings: RolloutSettings,
    observations: Sequence[Tensor] | None = None,
    iteration: int = 0,
) -> RolloutResult:
    """Fly one horizon and build the loss on the policy's tape.

    ``observations`` replays preprocessed depth frames instead of rendering.
    After a collision the state is frozen and the last step's terms repeat.
    """
    tape = policy.tape
    dyn = env.dynamics
    pose = env.scene.pose
    use_sg = settings.losses.use_stop_gradient
    noise_rng = np.random.default_rng(list(env.seed) + [7]) if settings.noise.enabled else None

    state = env.initial
    hidden = policy.reset_hidden()
    v_target = Tensor(env.v_target)
    v_ref = env.v_ref
    flag = 1.0

    record = RolloutRecord()
    record.append_state(state)
    terms: list[StepTerms] = []
    commands: list[Tensor] = []
    frozen = False

    for t in range(settings.horizon):
        if frozen:
            terms.append(terms[-1])
            commands.append(commands[-1])
            record.commands.append(record.commands[-1])
            record.step_losses.append(record.step_losses[-1])
            continue
        try:
            if observations is not None:
                depth = observations[t]
            else:
                camera = CameraModel.from_state(settings.camera, state)
                image = render_depth(env.scene, camera)
                if noise_rng is not None:
                    image = settings.noise.apply(image, noise_rng, settings.camera.near_clip)
                depth = preprocess(image)
            obs = ObservationState.from_state(state, v_target)
            cmd, hidden = policy.forward(depth, obs, hidden, dyn)
            state = stabilize(step(state, cmd, dyn), t + 1, settings.reortho_interval)

            rel = gap_relative(state.position, pose).latched(flag)
            flag = rel.before_plane
            term = StepTerms(
                position=position_loss(rel, use_sg),
                rotation=rotation_loss(state.rotation, pose.rotation, rel, use_sg),
                velocity=velocity_loss(state.velocity, v_ref, rel),
                alignment=alignment_loss(state.position, pose.position, state.rotation, rel),
            )
            command = cmd.normalized(dyn)
        except (NonFiniteError, PolicyError) as e:
            raise RolloutDivergedError(iteration, t, str(e)) from e

        terms.append(term)
        commands.append(command)
        record.append_state(state)
        record.commands.append(command.value.copy())
        record.observations.append(depth.value[0].copy())
        record.hidden.append(hidden.h.value.copy())
        record.distances.append(float(rel.distance.value))
        record.flags.append(flag)
        record.step_losses.append({
            "L_p": float(term.position.value),
            "L_r": float(term.rotation.value),
            "L_v": float(term.velocity.value),
            "L_f": float(term.alignment.value),
        })

        clearance = check_collision(state.position, env.scene.mesh, settings.collision_radius)
        record.clearances.append(clearance.distance)
        if clearance.collided:
            record.collided_at = t
            frozen = True

        state = boundary(state, tape, settings.decay_alpha, dyn.dt)

    action = action_loss(commands)
    jerk = jerk_loss(commands, dyn.dt) if len(commands) >= 2 else Tensor(0.0)
    losses = total_loss(terms, settings.losses.weights, action, jerk)
    return RolloutResult(record, losses, state, hidden)
