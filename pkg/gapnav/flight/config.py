# PEP-8
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from enum import Enum
from pathlib import Path

from dacite import Config, DaciteError, from_dict

from flight.harness.settings import EvalConfig
from flight.policy.network import PolicyArch
from flight.sim.camera import CameraIntrinsics
from flight.sim.dynamics import DynamicsParams
from flight.sim.renderer import DepthNoise
from flight.sim.scene import GapConfig
from flight.training.bimodal import BimodalInit
from flight.training.losses import LossSettings
from flight.training.rollout import RolloutSettings
from flight.training.settings import AuxConfig, TrainConfig
from utils.log import logger


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RandomizationConfig:
    param_scale_range: tuple[float, float] = (0.9, 1.1)
    depth_noise: DepthNoise = field(default_factory=DepthNoise)

    def __post_init__(self):
        low, high = self.param_scale_range
        if not 0 < low <= high:
            raise ValueError(f"invalid parameter scale range {self.param_scale_range}")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    workers: int = 1
    dynamics: DynamicsParams = field(default_factory=DynamicsParams)
    randomization: RandomizationConfig = field(default_factory=RandomizationConfig)
    camera: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    gap: GapConfig = field(default_factory=GapConfig)
    losses: LossSettings = field(default_factory=LossSettings)
    bimodal: BimodalInit = field(default_factory=BimodalInit)
    policy: PolicyArch = field(default_factory=PolicyArch)
    train: TrainConfig = field(default_factory=TrainConfig)
    aux: AuxConfig = field(default_factory=AuxConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        expected = (self.camera.height // 2, self.camera.width // 2)
        if (self.policy.input_height, self.policy.input_width) != expected:
            raise ValueError(
                f"policy input {self.policy.input_height}x{self.policy.input_width} does not "
                f"match the pooled {self.camera.width}x{self.camera.height} camera image"
            )

    def rollout_settings(self, horizon: int | None = None) -> RolloutSettings:
        return RolloutSettings(
            horizon=horizon or self.train.horizon,
            decay_alpha=self.train.decay_alpha,
            collision_radius=self.train.collision_radius,
            reortho_interval=self.train.reortho_interval,
            losses=self.losses,
            camera=self.camera,
            noise=self.randomization.depth_noise,
        )


DACITE_CONFIG = Config(strict=True, cast=[tuple, Enum], type_hooks={float: float})


def config_from_dict(data: dict) -> RunConfig:
    try:
        run = from_dict(RunConfig, data, DACITE_CONFIG)
    except (DaciteError, ValueError, TypeError) as e:
        raise ConfigError(f"invalid run config: {e}") from e
    run.dynamics.check()
    return run


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    logger.info(f"Loaded run config {path}")
    return config_from_dict(data)


def _plain(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_plain(v) for v in value]
    return value


def config_dict(run: RunConfig) -> dict:
    return _plain(asdict(run))


def config_hash(run: RunConfig) -> str:
    canonical = json.dumps(config_dict(run), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def with_overrides(run: RunConfig, overrides: dict[str, object]) -> RunConfig:
    """Apply dotted-path overrides such as {"train.iterations": 10}; None values are skipped."""
    for dotted, value in overrides.items():
        if value is None:
            continue
        run = _replace_path(run, dotted.split("."), value, dotted)
    return run


def _replace_path(obj, parts: list[str], value, dotted: str):
    name = parts[0]
    if not is_dataclass(obj) or name not in {f.name for f in fields(obj)}:
        raise ConfigError(f"unknown config key {dotted!r}")
    if len(parts) > 1:
        value = _replace_path(getattr(obj, name), parts[1:], value, dotted)
    try:
        return replace(obj, **{name: value})
    except (ValueError, TypeError) as e:
        raise ConfigError(f"invalid value for {dotted!r}: {e}") from e

