# PEP-8
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from utils.multiton_meta import MultitonMeta


# Columns are the optical x (right), y (down) and z (forward) axes in the body frame.
BODY_FROM_OPTICAL = np.array([
    [0.0, 0.0, 1.0],
    [-1.0, 0.0, 0.0],
    [0.0, -1.0, 0.0],
])


@dataclass(frozen=True)
class CameraIntrinsics:
    width: int = 32
    height: int = 24
    hfov_deg: float = 87.0
    vfov_deg: float = 58.0
    d_max: float = 20.0
    near_clip: float = 0.05
    mount_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")
        if not 0 < self.hfov_deg < 180 or not 0 < self.vfov_deg < 180:
            raise ValueError("field of view must lie in (0, 180) degrees")
        if not 0 < self.near_clip < self.d_max:
            raise ValueError("need 0 < near_clip < d_max")

    @property
    def fx(self) -> float:
        return (self.width / 2.0) / math.tan(math.radians(self.hfov_deg) / 2.0)

    @property
    def fy(self) -> float:
        return (self.height / 2.0) / math.tan(math.radians(self.vfov_deg) / 2.0)

    @property
    def cx(self) -> float:
        return self.width / 2.0

    @property
    def cy(self) -> float:
        return self.height / 2.0


class RayBundle(metaclass=MultitonMeta):
    """Per-pixel ray directions in the body frame, shared by all cameras with the same intrinsics.

    Directions have unit forward component, so the ray parameter of a hit is its z-depth.
    """

    def __init__(self, intrinsics: CameraIntrinsics) -> None:
        self.intrinsics = intrinsics
        rows, cols = np.meshgrid(
            np.arange(intrinsics.height, dtype=np.float64),
            np.arange(intrinsics.width, dtype=np.float64),
            indexing="ij",
        )
        optical = np.stack([
            (cols + 0.5 - intrinsics.cx) / intrinsics.fx,
            (rows + 0.5 - intrinsics.cy) / intrinsics.fy,
            np.ones_like(rows),
        ], axis=-1).reshape(-1, 3)
        self.directions = optical @ BODY_FROM_OPTICAL.T
        self.directions.setflags(write=False)


@dataclass(frozen=True, eq=False)
class CameraModel:
    intrinsics: CameraIntrinsics
    origin: np.ndarray
    rotation: np.ndarray

    @classmethod
    def from_pose(cls, intrinsics: CameraIntrinsics, position, rotation) -> CameraModel:
        rotation = np.asarray(rotation, dtype=np.float64)
        origin = np.asarray(position, dtype=np.float64) + rotation @ np.asarray(intrinsics.mount_offset)
        return cls(intrinsics, origin, rotation)

    @classmethod
    def from_state(cls, intrinsics: CameraIntrinsics, state) -> CameraModel:
        return cls.from_pose(intrinsics, state.position.value, state.rotation.value)

    def rays(self) -> np.ndarray:
        """World-frame ray directions, one row per pixel in row-major order."""
        return RayBundle(self.intrinsics).directions @ self.rotation.T
