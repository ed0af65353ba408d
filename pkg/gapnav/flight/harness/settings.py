# PEP-8
from dataclasses import dataclass
from enum import Enum


class ResetMode(str, Enum):
    CLASSIFIER = "classifier"
    ORACLE_PLANE = "oracle-plane"
    NONE = "none"


@dataclass(frozen=True)
class EvalConfig:
    trials: int = 100
    speed: float = 3.0
    tilt_range_deg: tuple[float, float] = (-80.0, 80.0)
    timeout_factor: float = 3.0
    n_gaps: int = 3
    course_spacing: tuple[float, float] = (3.0, 5.0)
    course_tilt_deg: tuple[float, float] = (-50.0, 50.0)
    reset_mode: ResetMode = ResetMode.CLASSIFIER
    crossing_threshold: float = 0.5
    noise_levels: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0, 3.0)
    trav_trajectories: int = 500
    trav_scale_range: tuple[float, float] = (0.5, 1.0)

    def __post_init__(self):
        if self.trials < 1 or self.n_gaps < 1 or self.trav_trajectories < 1:
            raise ValueError("trial, gap and trajectory counts must be >= 1")
        if self.speed <= 0 or self.timeout_factor <= 0:
            raise ValueError("speed and timeout factor must be positive")
        if not 0.0 < self.crossing_threshold < 1.0:
            raise ValueError("crossing threshold must lie in (0, 1)")
        if any(level < 0 for level in self.noise_levels):
            raise ValueError("noise levels must be >= 0")
