# PEP-8
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field, fields

import numpy as np

from flight.diffcore import (
    Tensor,
    abs_,
    arccos,
    dot,
    maximum,
    norm,
    stack,
    stop_gradient,
    sum_,
    transpose,
)
from flight.sim.dynamics import GapRelativeState

from .errors import LossError


GATE_WINDOW = 1.0
MIN_BEARING_DISTANCE = 1e-6


@dataclass(frozen=True)
class LossWeights:
    lambda_p: float = 10.0
    lambda_r: float = 10.0
    lambda_v: float = 0.1
    lambda_f: float = 1.0
    lambda_a: float = 0.01
    lambda_j: float = 0.0001

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"loss weight {f.name} must be non-negative")


@dataclass(frozen=True)
class LossSettings:
    weights: LossWeights = field(default_factory=LossWeights)
    use_stop_gradient: bool = True


@dataclass(frozen=True)
class StepTerms:
    position: Tensor
    rotation: Tensor
    velocity: Tensor
    alignment: Tensor


@dataclass(frozen=True)
class LossBreakdown:
    L_p: Tensor
    L_r: Tensor
    L_v: Tensor
    L_f: Tensor
    L_a: Tensor
    L_j: Tensor
    total: Tensor

    def values(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name).value) for f in fields(self)}


def _zero() -> Tensor:
    return Tensor(0.0)


def gate_weight(rel: GapRelativeState, use_stop_gradient: bool = True) -> Tensor:
    """max(1 - |d|, 0): active within one metre either side of the gap plane."""
    gate = maximum(GATE_WINDOW - abs_(rel.distance), 0.0)
    return stop_gradient(gate) if use_stop_gradient else gate


def position_loss(rel: GapRelativeState, use_stop_gradient: bool = True) -> Tensor:
    return norm(rel.projected) * gate_weight(rel, use_stop_gradient)


def rotation_loss(
    rotation: Tensor,
    gap_rotation,
    rel: GapRelativeState,
    use_stop_gradient: bool = True,
) -> Tensor:
    r_g = gap_rotation.value if isinstance(gap_rotation, Tensor) else np.asarray(gap_rotation)
    skew = r_g.T @ rotation - transpose(rotation) @ r_g
    error = stack([skew[2, 1], skew[0, 2], skew[1, 0]]) * 0.5
    return norm(error) * gate_weight(rel, use_stop_gradient)


def velocity_loss(velocity: Tensor, v_ref, rel: GapRelativeState) -> Tensor:
    return norm(velocity - v_ref) * rel.before_plane


def alignment_loss(position: Tensor, gap_position, rotation: Tensor, rel: GapRelativeState) -> Tensor:
    """Angle between the body x-axis and the bearing to the gap center."""
    offset = gap_position - position
    if not isinstance(offset, Tensor):
        offset = Tensor(offset)
    if np.linalg.norm(offset.value) < MIN_BEARING_DISTANCE:
        return _zero()
    bearing = offset / norm(offset)
    return arccos(dot(bearing, rotation[:, 0])) * rel.before_plane


def action_loss(commands: Sequence[Tensor]) -> Tensor:
    """Mean squared norm of the normalized commands."""
    if not commands:
        raise LossError("action loss needs at least one command")
    total = sum_(stack(list(commands)) ** 2)
    return total * (1.0 / len(commands))


def jerk_loss(commands: Sequence[Tensor], dt: float) -> Tensor:
    if len(commands) < 2:
        raise LossError(f"jerk loss needs at least 2 commands, got {len(commands)}")
    u = stack(list(commands))
    diff = (u[:-1] - u[1:]) * (1.0 / dt)
    return sum_(diff ** 2) * (1.0 / (len(commands) - 1))


def smoothness_losses(commands: Sequence[Tensor], dt: float) -> tuple[Tensor, Tensor]:
    return action_loss(commands), jerk_loss(commands, dt)


def total_loss(
    steps: Sequence[StepTerms],
    weights: LossWeights,
    action: Tensor | None = None,
    jerk: Tensor | None = None,
) -> LossBreakdown:
    """Horizon-averaged task terms plus the smoothness terms, weighted."""
    if not steps:
        raise LossError("no step terms to combine")
    scale = 1.0 / len(steps)

    def averaged(name: str) -> Tensor:
        return sum_(stack([getattr(s, name) for s in steps])) * scale

    l_p = averaged("position")
    l_r = averaged("rotation")
    l_v = averaged("velocity")
    l_f = averaged("alignment")
    l_a = action if action is not None else _zero()
    l_j = jerk if jerk is not None else _zero()
    total = (
        l_p * weights.lambda_p
        + l_r * weights.lambda_r
        + l_v * weights.lambda_v
        + l_f * weights.lambda_f
        + l_a * weights.lambda_a
        + l_j * weights.lambda_j
    )
    return LossBreakdown(l_p, l_r, l_v, l_f, l_a, l_j, total)
