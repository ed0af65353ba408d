# PEP-8
from dataclasses import dataclass

import numpy as np
from scipy.linalg import polar


E1 = np.array([1.0, 0.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def skew(w) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    return np.array([
        [0.0, -w[2], w[1]],
        [w[2], 0.0, -w[0]],
        [-w[1], w[0], 0.0],
    ])


def vee(m: np.ndarray) -> np.ndarray:
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def nearest_rotation(m: np.ndarray) -> np.ndarray:
    """Orthonormal factor of the polar decomposition."""
    u, _ = polar(m)
    return u


def orthonormality_drift(r: np.ndarray) -> float:
    return float(np.max(np.abs(r.T @ r - np.eye(3))))


def geodesic_angle(ra: np.ndarray, rb: np.ndarray) -> float:
    """Angle of the relative rotation ra^T rb, in radians."""
    cos = (np.trace(ra.T @ rb) - 1.0) / 2.0
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))


@dataclass(frozen=True, eq=False)
class GapPose:
    """Gap frame: x is the plane normal in the direction of travel."""

    position: np.ndarray
    rotation: np.ndarray

    @property
    def normal(self) -> np.ndarray:
        return self.rotation[:, 0]

    def to_local(self, point) -> np.ndarray:
        return self.rotation.T @ (np.asarray(point, dtype=np.float64) - self.position)

    def to_world(self, local) -> np.ndarray:
        return self.position + self.rotation @ np.asarray(local, dtype=np.float64)
