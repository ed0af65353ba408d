# PEP-8
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from flight.sim import DynamicsParams, QuadState
from flight.sim.geometry import E1, E3


@dataclass(frozen=True)
class BimodalInit:
    """Mixture of a near-hover mode and an aggressive post-traversal mode."""

    hover_weight: float = 0.5
    aggressive_weight: float = 0.5
    hover_velocity_std: float = 0.1
    hover_attitude_deg: float = 5.0
    speed_std: float = 0.5
    cone_deg: float = 30.0
    tilt_deg: float = 45.0
    omega_std: float = 0.5
    accel_range_g: tuple[float, float] = (1.0, 2.0)

    def __post_init__(self):
        if self.hover_weight < 0 or self.aggressive_weight < 0:
            raise ValueError("mode weights must be non-negative")
        if abs(self.hover_weight + self.aggressive_weight - 1.0) > 1e-9:
            raise ValueError("mode weights must sum to 1")
        spreads = (
            self.hover_velocity_std, self.hover_attitude_deg, self.speed_std,
            self.cone_deg, self.tilt_deg, self.omega_std,
        )
        if min(spreads) <= 0:
            raise ValueError("spreads must be positive")
        low, high = self.accel_range_g
        if not 0 < low <= high:
            raise ValueError(f"invalid acceleration range {self.accel_range_g}")


HOVER_ONLY = BimodalInit(hover_weight=1.0, aggressive_weight=0.0)


def _heading(forward: np.ndarray) -> float:
    return math.atan2(forward[1], forward[0])


def _cone_direction(rng: np.random.Generator, forward: np.ndarray, half_angle: float) -> np.ndarray:
    """Uniform over the spherical cap of ``half_angle`` around ``forward``."""
    cos_t = rng.uniform(math.cos(half_angle), 1.0)
    sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
    phi = rng.uniform(0.0, 2.0 * math.pi)
    local = np.array([cos_t, sin_t * math.cos(phi), sin_t * math.sin(phi)])
    return _rotation_from_x(forward).apply(local)


def _rotation_from_x(forward: np.ndarray) -> Rotation:
    axis = np.cross(E1, forward)
    sin_a = np.linalg.norm(axis)
    if sin_a < 1e-12:
        return Rotation.identity() if forward[0] > 0 else Rotation.from_rotvec([0.0, 0.0, math.pi])
    angle = math.atan2(sin_a, float(forward @ E1))
    return Rotation.from_rotvec(axis / sin_a * angle)


def _thrust_for_accel(rotation, velocity, target: float, params: DynamicsParams) -> float:
    """Collective thrust giving |a| = target, clipped to the actuator range."""
    z_body = rotation[:, 2]
    w = -params.gravity * E3 - params.drag * velocity
    zw = float(z_body @ w)
    disc = zw * zw - float(w @ w) + target * target
    s = -zw + math.sqrt(disc) if disc >= 0 else -zw
    return float(np.clip(params.mass * s, 0.0, params.thrust_max))


def sample_initial_state(
    bimodal: BimodalInit,
    target_speed: float,
    seed,
    params: DynamicsParams | None = None,
    position=(0.0, 0.0, 1.5),
    forward=E1,
) -> QuadState:
    params = params or DynamicsParams()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    forward = np.asarray(forward, dtype=np.float64)
    forward = forward / np.linalg.norm(forward)
    heading = _heading(forward)

    if rng.random() < bimodal.hover_weight:
        velocity = rng.normal(0.0, bimodal.hover_velocity_std, size=3)
        roll, pitch, yaw = np.radians(rng.uniform(-bimodal.hover_attitude_deg, bimodal.hover_attitude_deg, 3))
        rotation = Rotation.from_euler("ZYX", [heading + yaw, pitch, roll]).as_matrix()
        return QuadState.from_arrays(
            position,
            rotation=rotation,
            velocity=velocity,
            thrust=params.hover_thrust,
        )

    speed = max(0.0, rng.normal(target_speed, bimodal.speed_std))
    velocity = speed * _cone_direction(rng, forward, math.radians(bimodal.cone_deg))
    roll, pitch = np.radians(rng.uniform(-bimodal.tilt_deg, bimodal.tilt_deg, 2))
    yaw = math.radians(rng.uniform(-bimodal.cone_deg, bimodal.cone_deg))
    rotation = Rotation.from_euler("ZYX", [heading + yaw, pitch, roll]).as_matrix()
    omega = rng.normal(0.0, bimodal.omega_std, size=3)
    target_accel = rng.uniform(*bimodal.accel_range_g) * params.gravity
    thrust = _thrust_for_accel(rotation, velocity, target_accel, params)
    acceleration = rotation[:, 2] * thrust / params.mass - params.gravity * E3 - params.drag * velocity
    return QuadState.from_arrays(
        position,
        rotation=rotation,
        velocity=velocity,
        acceleration=acceleration,
        omega=omega,
        thrust=thrust,
    )
