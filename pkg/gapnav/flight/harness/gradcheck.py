# PEP-8
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from flight.diffcore import Tape, Tensor, backward
from flight.policy import POLICY_PREFIXES, Policy, PolicyArch, PolicyParams
from flight.sim import CameraIntrinsics, DynamicsParams, GapConfig, QuadState, generate_gap
from flight.training.losses import LossSettings
from flight.training.rollout import RolloutEnv, RolloutSettings, rollout
from utils.log import logger


MICRO_ARCH = PolicyArch(
    input_height=4,
    input_width=4,
    channels=(2, 2, 2),
    kernels=(2, 3, 3),
    strides=(2, 1, 1),
    embed=4,
    aux_hidden=2,
)
MICRO_CAMERA = CameraIntrinsics(width=8, height=8)
MICRO_GAP = GapConfig(jitter=0.05, tilt_range_deg=(-30.0, 30.0))
TOLERANCE = 1e-4


@dataclass
class GradCheckResult:
    max_rel_error: float
    worst: str
    errors: dict[str, float] = field(default_factory=dict)
    checked: int = 0

    @property
    def passed(self) -> bool:
        return self.max_rel_error < TOLERANCE


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-4) -> np.ndarray:
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def micro_problem(seed: int, steps: int = 5):
    """Tiny policy in front of a gap, with the depth frames of one rollout kept for replay.

    The loss gates are differentiated here (no stop-gradient) so that finite
    differences see the same function as the tape.
    """
    params = PolicyParams.init(MICRO_ARCH, [seed, 0])
    scene = generate_gap([seed, 1], MICRO_GAP)
    pose = scene.pose
    dynamics = DynamicsParams()
    initial = QuadState.from_arrays(
        pose.to_world([-0.6, 0.05, 0.03]),
        velocity=0.5 * pose.normal,
        thrust=dynamics.hover_thrust,
    )
    env = RolloutEnv(scene, dynamics, initial, speed=1.0, v_target=pose.normal.copy(), seed=(seed,))
    settings = RolloutSettings(
        horizon=steps,
        camera=MICRO_CAMERA,
        losses=LossSettings(use_stop_gradient=False),
    )
    record = rollout(Policy(params), env, settings).record
    observations = [Tensor(frame[None]) for frame in record.observations]
    return params, env, settings, observations


def gradient_check(seed: int, steps: int = 5, h: float = 1e-5) -> GradCheckResult:
    """Compare BPTT gradients of every policy parameter against central differences."""
    params, env, settings, observations = micro_problem(seed, steps)

    def loss(p: PolicyParams) -> float:
        return float(rollout(Policy(p), env, settings, observations).losses.total.value)

    tape = Tape()
    policy = Policy(params, tape)
    result = rollout(policy, env, settings, observations)
    store = backward(tape, result.losses.total)
    analytic = {name: store.grad(leaf) for name, leaf in policy.leaves().items()}

    errors: dict[str, float] = {}
    checked = 0
    for name in params.names(POLICY_PREFIXES):
        base = params[name]
        numeric = np.zeros_like(base)
        for index in np.ndindex(base.shape):
            plus, minus = base.copy(), base.copy()
            plus[index] += h
            minus[index] -= h
            numeric[index] = (loss(params.replaced({name: plus})) - loss(params.replaced({name: minus}))) / (2 * h)
            checked += 1
        errors[name] = float(relative_error(analytic[name], numeric).max())

    worst = max(errors, key=errors.get)
    logger.info(f"Gradient check seed {seed}: max relative error {errors[worst]:.3e} in {worst}")
    return GradCheckResult(errors[worst], worst, errors, checked)
