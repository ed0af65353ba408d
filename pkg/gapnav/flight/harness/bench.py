# PEP-8
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from flight.config import RunConfig
from flight.sim import CameraModel, generate_gap, render_depth, render_depth_bruteforce
from utils.log import logger


@dataclass
class BenchResult:
    frames: int
    culled_seconds: float
    brute_seconds: float
    mismatches: int

    @property
    def speedup(self) -> float:
        return self.brute_seconds / self.culled_seconds if self.culled_seconds > 0 else float("inf")

    def as_dict(self) -> dict[str, float]:
        return {
            "frames": self.frames,
            "culled_seconds": self.culled_seconds,
            "brute_seconds": self.brute_seconds,
            "speedup": self.speedup,
            "mismatches": self.mismatches,
        }


def bench_render(run: RunConfig, seed: int, frames: int = 100) -> BenchResult:
    """Time both renderers on random gaps and camera poses and count differing images."""
    rng = np.random.default_rng([seed, 4])
    start = np.asarray(run.gap.start_position, dtype=np.float64)
    culled = brute = 0.0
    mismatches = 0
    for i in range(frames):
        scene = generate_gap([seed, 4, i], run.gap)
        position = start + rng.normal(0.0, 0.3, size=3)
        rotation = Rotation.from_euler("ZYX", rng.uniform(-0.3, 0.3, size=3)).as_matrix()
        camera = CameraModel.from_pose(run.camera, position, rotation)

        began = time.perf_counter()
        fast = render_depth(scene, camera)
        culled += time.perf_counter() - began
        began = time.perf_counter()
        reference = render_depth_bruteforce(scene.mesh, camera)
        brute += time.perf_counter() - began

        if not np.array_equal(fast.values, reference.values):
            mismatches += 1
            logger.warning(f"Renderer mismatch on frame {i}")
    result = BenchResult(frames, culled, brute, mismatches)
    logger.info(f"Rendered {frames} frames, speedup {result.speedup:.2f}x, {mismatches} mismatches")
    return result
