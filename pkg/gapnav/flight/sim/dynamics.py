# PEP-8
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from flight.diffcore import Tensor, concat, expm_skew, matvec, reshape, tanh
from utils.log import logger

from .errors import InvalidStateError
from .geometry import E3, GapPose, nearest_rotation, orthonormality_drift


@dataclass(frozen=True)
class CommandLimits:
    omega_max: float = 8.0
    thrust_max_ratio: float = 3.0

    def __post_init__(self):
        if self.omega_max <= 0 or self.thrust_max_ratio <= 0:
            raise ValueError(f"command limits must be positive: {self}")


@dataclass(frozen=True)
class DynamicsParams:
    mass: float = 0.462
    gravity: float = 9.81
    drag: float = 0.1
    tau_omega: float = 0.03
    tau_thrust: float = 0.05
    dt: float = 1.0 / 30.0
    limits: CommandLimits = field(default_factory=CommandLimits)

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float | int) and not value > 0:
                raise ValueError(f"dynamics parameter {f.name} must be positive, got {value}")

    @property
    def hover_thrust(self) -> float:
        return self.mass * self.gravity

    @property
    def thrust_max(self) -> float:
        return self.limits.thrust_max_ratio * self.mass * self.gravity

    @property
    def alpha_omega(self) -> float:
        return math.exp(-self.dt / self.tau_omega)

    @property
    def alpha_thrust(self) -> float:
        return math.exp(-self.dt / self.tau_thrust)

    def check(self) -> bool:
        if self.dt >= min(self.tau_omega, self.tau_thrust):
            logger.warning(
                "dt=%.4f s is not below the filter time constants "
                "(tau_omega=%.4f s, tau_thrust=%.4f s)",
                self.dt, self.tau_omega, self.tau_thrust,
            )
            return False
        return True


@dataclass(frozen=True)
class QuadState:
    """Rigid-body state plus the filtered rate and thrust carried between steps."""

    position: Tensor
    rotation: Tensor
    velocity: Tensor
    acceleration: Tensor
    omega: Tensor
    thrust: Tensor

    @classmethod
    def from_arrays(
        cls,
        position,
        rotation=None,
        velocity=None,
        acceleration=None,
        omega=None,
        thrust=0.0,
    ) -> QuadState:
        zeros = np.zeros(3)
        state = cls(
            position=Tensor(position),
            rotation=Tensor(np.eye(3) if rotation is None else rotation),
            velocity=Tensor(zeros if velocity is None else velocity),
            acceleration=Tensor(zeros if acceleration is None else acceleration),
            omega=Tensor(zeros if omega is None else omega),
            thrust=Tensor(thrust),
        )
        state.validate()
        return state

    @classmethod
    def hover(cls, params: DynamicsParams, position) -> QuadState:
        return cls.from_arrays(position, thrust=params.hover_thrust)

    def tensors(self) -> tuple[Tensor, ...]:
        return (
            self.position, self.rotation, self.velocity,
            self.acceleration, self.omega, self.thrust,
        )

    def validate(self) -> None:
        shapes = {
            "position": (3,), "rotation": (3, 3), "velocity": (3,),
            "acceleration": (3,), "omega": (3,), "thrust": (),
        }
        for name, shape in shapes.items():
            if getattr(self, name).shape != shape:
                raise InvalidStateError(f"{name} has shape {getattr(self, name).shape}", name)
        if np.linalg.det(self.rotation.value) <= 0:
            raise InvalidStateError("rotation has non-positive determinant", "rotation")

    def as_dict(self) -> dict[str, list]:
        return {
            "position": self.position.value.tolist(),
            "rotation": self.rotation.value.tolist(),
            "velocity": self.velocity.value.tolist(),
            "acceleration": self.acceleration.value.tolist(),
            "omega": self.omega.value.tolist(),
            "thrust": float(self.thrust.value),
        }


@dataclass(frozen=True)
class ControlCommand:
    omega_c: Tensor
    thrust_c: Tensor

    @classmethod
    def from_arrays(cls, omega_c, thrust_c: float) -> ControlCommand:
        return cls(Tensor(omega_c), Tensor(thrust_c))

    def normalized(self, params: DynamicsParams) -> Tensor:
        """[omega_x, omega_y, omega_z, c / (m g)], the commensurate form used by smoothness losses."""
        thrust = reshape(self.thrust_c * (1.0 / params.hover_thrust), (1,))
        return concat([self.omega_c, thrust])

    def within(self, params: DynamicsParams, tol: float = 1e-9) -> bool:
        omega_ok = np.all(np.abs(self.omega_c.value) <= params.limits.omega_max + tol)
        thrust = float(self.thrust_c.value)
        return bool(omega_ok and -tol <= thrust <= params.thrust_max + tol)


@dataclass(frozen=True)
class GapRelativeState:
    distance: Tensor
    projected: Tensor
    before_plane: float

    def latched(self, previous: float) -> GapRelativeState:
        """The flag only ever drops from 1 to 0 along a rollout."""
        return replace(self, before_plane=min(previous, self.before_plane))


def command_from_raw(raw: Tensor, params: DynamicsParams) -> ControlCommand:
    """Map raw head outputs to commands with tanh soft limits."""
    omega = tanh(raw[0:3]) * params.limits.omega_max
    thrust = (tanh(raw[3]) + 1.0) * (0.5 * params.thrust_max)
    return ControlCommand(omega, thrust)


def exp_so3(omega_dt) -> Tensor:
    return expm_skew(omega_dt)


def step(state: QuadState, cmd: ControlCommand, params: DynamicsParams) -> QuadState:
    if np.linalg.det(state.rotation.value) <= 0:
        raise InvalidStateError("rotation has non-positive determinant", "rotation")

    a_w = params.alpha_omega
    a_c = params.alpha_thrust
    dt = params.dt

    omega = state.omega * a_w + cmd.omega_c * (1.0 - a_w)
    thrust = state.thrust * a_c + cmd.thrust_c * (1.0 - a_c)

    body_z = state.rotation[:, 2]
    acceleration = (
        body_z * (thrust * (1.0 / params.mass))
        - params.gravity * E3
        - state.velocity * params.drag
    )
    rotation = state.rotation @ exp_so3(omega * dt)
    velocity = state.velocity + acceleration * dt
    position = state.position + state.velocity * dt + acceleration * (0.5 * dt * dt)

    return QuadState(position, rotation, velocity, acceleration, omega, thrust)


def reorthonormalize(rotation: Tensor) -> Tensor:
    """Snap to the nearest rotation; the correction is a constant on the tape."""
    target = nearest_rotation(rotation.value)
    return rotation + Tensor(target - rotation.value)


def stabilize(
    state: QuadState,
    step_index: int,
    interval: int = 100,
    tol: float = 1e-9,
) -> QuadState:
    periodic = interval > 0 and step_index > 0 and step_index % interval == 0
    if not periodic and orthonormality_drift(state.rotation.value) <= tol:
        return state
    return replace(state, rotation=reorthonormalize(state.rotation))


def randomize_params(
    base: DynamicsParams,
    seed,
    scale_range: tuple[float, float] = (0.9, 1.1),
) -> DynamicsParams:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    low, high = scale_range
    if low > high or low <= 0:
        raise ValueError(f"invalid scale range {scale_range}")
    s_omega, s_thrust, s_drag = rng.uniform(low, high, size=3)
    return replace(
        base,
        tau_omega=base.tau_omega * float(s_omega),
        tau_thrust=base.tau_thrust * float(s_thrust),
        drag=base.drag * float(s_drag),
    )


def gap_relative(position: Tensor, pose: GapPose) -> GapRelativeState:
    local = matvec(pose.rotation.T, position - pose.position)
    distance = -local[0]
    flag = 1.0 if distance.value > 0 else 0.0
    return GapRelativeState(distance, local[1:3], flag)
