# PEP-8
from dataclasses import dataclass


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 50000
    batch: int = 64
    horizon: int = 80
    lr: float = 1e-3
    weight_decay: float = 1e-4
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    decay_alpha: float = 0.0
    speed_range: tuple[float, float] = (2.0, 4.0)
    aim_noise: float = 2.0
    grad_clip: float = 1.0
    use_bimodal: bool = True
    collision_radius: float = 0.1
    reortho_interval: int = 100
    checkpoint_every: int = 1000
    log_every: int = 10
    max_nan_skips: int = 10

    def __post_init__(self):
        if self.iterations < 0 or self.batch < 1:
            raise ValueError("iterations must be >= 0 and batch >= 1")
        if self.horizon < 2:
            raise ValueError(f"training horizon must be >= 2, got {self.horizon}")
        if self.lr < 0 or self.weight_decay < 0 or self.decay_alpha < 0:
            raise ValueError("lr, weight decay and decay alpha must be >= 0")
        low, high = self.speed_range
        if not 0 < low <= high:
            raise ValueError(f"invalid speed range {self.speed_range}")
        if self.aim_noise < 0 or self.collision_radius <= 0:
            raise ValueError("aim noise must be >= 0 and collision radius > 0")
        if self.checkpoint_every < 1 or self.log_every < 1 or self.max_nan_skips < 1:
            raise ValueError("checkpoint_every, log_every and max_nan_skips must be >= 1")


@dataclass(frozen=True)
class AuxConfig:
    iterations: int = 2000
    batch: int = 16
    horizon: int = 70
    lr: float = 1e-3
    weight_decay: float = 1e-4
    grad_clip: float = 1.0
    scale_range: tuple[float, float] = (0.625, 1.0)
    safety_margin: float = 0.1
    imbalance_limit: float = 9.0
    checkpoint_every: int = 500
    log_every: int = 10

    def __post_init__(self):
        if self.iterations < 0 or self.batch < 1 or self.horizon < 1:
            raise ValueError("iterations must be >= 0, batch and horizon >= 1")
        low, high = self.scale_range
        if not 0 < low <= high:
            raise ValueError(f"invalid gap scale range {self.scale_range}")
        if self.safety_margin <= 0 or self.imbalance_limit < 1:
            raise ValueError("safety margin must be > 0 and imbalance limit >= 1")
        if self.checkpoint_every < 1 or self.log_every < 1:
            raise ValueError("checkpoint_every and log_every must be >= 1")
