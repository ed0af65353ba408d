# PEP-8
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from flight.diffcore import Tensor

from .camera import CameraModel
from .errors import PreprocessError
from .scene import TriMesh


BARYCENTRIC_EPS = 1e-9
PARALLEL_EPS = 1e-12
TIE_EPS = 1e-12
CONTACT_EPS = 1e-6
PGM_MAX = 65535


@dataclass(frozen=True, eq=False)
class DepthImage:
    values: np.ndarray
    d_max: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"depth image must be 2-D, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def center(self) -> float:
        """Mean of the central 2x2 pixels (the exact center for even sizes)."""
        r, c = self.height // 2, self.width // 2
        return float(self.values[r - 1:r + 1, c - 1:c + 1].mean())


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack([
        a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
        a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
        a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
    ], axis=-1)


def intersect(origin, directions, v0, e1, e2) -> np.ndarray:
    """Moller-Trumbore over matching rows; misses and parallel pairs give +inf.

    Every row is computed independently, so the result for a pair does not
    depend on which other pairs are evaluated with it.
    """
    pvec = _cross(directions, e2)
    det = _dot(e1, pvec)
    parallel = np.abs(det) < PARALLEL_EPS
    inv = 1.0 / np.where(parallel, 1.0, det)
    tvec = origin - v0
    u = _dot(tvec, pvec) * inv
    qvec = _cross(tvec, e1)
    v = _dot(directions, qvec) * inv
    t = _dot(e2, qvec) * inv
    hit = (
        ~parallel
        & (u >= -BARYCENTRIC_EPS)
        & (v >= -BARYCENTRIC_EPS)
        & (u + v <= 1.0 + BARYCENTRIC_EPS)
        & (t >= -CONTACT_EPS)
    )
    return np.where(hit, t, np.inf)


def _edges(mesh: TriMesh):
    a, b, c = mesh.corners()
    return a, b - a, c - a


def _resolve(t: np.ndarray, camera: CameraModel) -> np.ndarray:
    """Nearest hit per ray; ties within TIE_EPS go to the lowest triangle index.

    Intersections farther than d_max count as misses, so raising d_max never
    changes a pixel that was already a hit.
    """
    intr = camera.intrinsics
    depth = np.full(t.shape[0], intr.d_max)
    if t.shape[1] == 0:
        return depth
    t = np.where(t > intr.d_max, np.inf, t)
    tmin = t.min(axis=1)
    hit = np.isfinite(tmin)
    winner = np.argmax(t <= (tmin + TIE_EPS)[:, None], axis=1)
    chosen = t[np.arange(t.shape[0]), winner]
    depth[hit] = chosen[hit]
    depth[hit & (np.abs(chosen) <= CONTACT_EPS)] = intr.near_clip
    return depth


def _image(depth: np.ndarray, camera: CameraModel) -> DepthImage:
    intr = camera.intrinsics
    return DepthImage(depth.reshape(intr.height, intr.width), intr.d_max)


def render_depth_bruteforce(mesh: TriMesh, camera: CameraModel) -> DepthImage:
    """Every ray against every triangle."""
    rays = camera.rays()
    v0, e1, e2 = _edges(mesh)
    t = intersect(camera.origin, rays[:, None, :], v0[None], e1[None], e2[None])
    return _image(_resolve(t.reshape(len(rays), len(mesh)), camera), camera)


def render_depth(scene, camera: CameraModel) -> DepthImage:
    """Render a TriMesh, or anything carrying one as ``.mesh``.

    Ray/triangle pairs whose bounding sphere misses the ray line are culled
    before the exact test; the surviving pairs go through the same routine as
    the brute-force renderer, so both give identical images.
    """
    mesh = scene if isinstance(scene, TriMesh) else scene.mesh
    rays = camera.rays()
    n_rays, n_tris = len(rays), len(mesh)
    t = np.full((n_rays, n_tris), np.inf)
    if n_tris == 0:
        return _image(_resolve(t, camera), camera)

    v0, e1, e2 = _edges(mesh)
    centers = v0 + (e1 + e2) / 3.0
    radius = np.max(np.linalg.norm(mesh.vertices[mesh.triangles] - centers[:, None, :], axis=2), axis=1)
    margin = radius * (1.0 + 1e-6) + 1e-6

    to_center = centers - camera.origin
    unit = rays / np.linalg.norm(rays, axis=1, keepdims=True)
    along = unit @ to_center.T
    dist_sq = np.sum(to_center * to_center, axis=1)[None, :] - along * along
    candidates = (dist_sq <= (margin * margin)[None, :]) & (along >= -margin[None, :])

    ray_idx, tri_idx = np.nonzero(candidates)
    if ray_idx.size:
        t[ray_idx, tri_idx] = intersect(
            camera.origin, rays[ray_idx], v0[tri_idx], e1[tri_idx], e2[tri_idx],
        )
    return _image(_resolve(t, camera), camera)


def preprocess(depth: DepthImage) -> Tensor:
    """Inverse depth, 2x2 max-pooled, as a constant (1, H/2, W/2) tensor."""
    values = depth.values
    if np.any(~np.isfinite(values)) or np.any(values <= 0):
        raise PreprocessError("depth values must be finite and positive")
    h, w = values.shape
    if h % 2 or w % 2:
        raise PreprocessError(f"depth image {w}x{h} cannot be pooled 2x2")
    inverse = 1.0 / values
    pooled = inverse.reshape(h // 2, 2, w // 2, 2).max(axis=(1, 3))
    return Tensor(pooled[None])


class CollisionResult(NamedTuple):
    collided: bool
    distance: float


def _point_segment_distance(p, a, b) -> np.ndarray:
    ab = b - a
    denom = np.maximum(np.sum(ab * ab, axis=1), 1e-300)
    s = np.clip(np.sum((p - a) * ab, axis=1) / denom, 0.0, 1.0)
    closest = a + s[:, None] * ab
    return np.linalg.norm(p - closest, axis=1)


def point_triangle_distances(point, mesh: TriMesh) -> np.ndarray:
    p = np.asarray(point, dtype=np.float64)
    if not len(mesh):
        return np.zeros(0)
    a, b, c = mesh.corners()
    normal = np.cross(b - a, c - a)
    normal /= np.linalg.norm(normal, axis=1, keepdims=True)
    height = np.sum((p - a) * normal, axis=1)
    projected = p - height[:, None] * normal

    # Inside test on the projection: same side of all three edges.
    inside = np.ones(len(a), dtype=bool)
    for u, v in ((a, b), (b, c), (c, a)):
        inside &= np.sum(np.cross(v - u, projected - u) * normal, axis=1) >= 0.0

    edge = np.minimum.reduce([
        _point_segment_distance(p, a, b),
        _point_segment_distance(p, b, c),
        _point_segment_distance(p, c, a),
    ])
    return np.where(inside, np.abs(height), edge)


def check_collision(position, mesh: TriMesh, radius: float = 0.1) -> CollisionResult:
    if radius <= 0:
        raise ValueError(f"collision radius must be positive, got {radius}")
    if isinstance(position, Tensor):
        position = position.value
    distances = point_triangle_distances(position, mesh)
    distance = float(distances.min()) if distances.size else float("inf")
    return CollisionResult(distance < radius, distance)


@dataclass(frozen=True)
class DepthNoise:
    """Multiplicative Gaussian noise plus square dropout patches set to the background."""

    enabled: bool = False
    sigma: float = 0.02
    dropout: float = 0.0
    patch: int = 2

    def apply(self, depth: DepthImage, rng: np.random.Generator, near_clip: float = 0.05) -> DepthImage:
        if not self.enabled:
            return depth
        values = depth.values * (1.0 + self.sigma * rng.standard_normal(depth.values.shape))
        values = np.clip(values, near_clip, depth.d_max)
        if self.dropout > 0:
            rows = -(-depth.height // self.patch)
            cols = -(-depth.width // self.patch)
            mask = rng.random((rows, cols)) < self.dropout
            mask = np.kron(mask, np.ones((self.patch, self.patch), dtype=bool))
            values[mask[:depth.height, :depth.width]] = depth.d_max
        return DepthImage(values, depth.d_max)


def write_pgm(path: str | Path, depth: DepthImage) -> None:
    """16-bit binary PGM, depth in millimetres."""
    mm = np.clip(np.rint(depth.values * 1000.0), 0, PGM_MAX).astype(">u2")
    header = f"P5\n{depth.width} {depth.height}\n{PGM_MAX}\n".encode("ascii")
    Path(path).write_bytes(header + mm.tobytes())


def read_pgm(path: str | Path, d_max: float = 20.0) -> DepthImage:
    data = Path(path).read_bytes()
    tokens: list[bytes] = []
    offset = 0
    while len(tokens) < 4:
        while data[offset:offset + 1].isspace():
            offset += 1
        end = offset
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[offset:end])
        offset = end
    offset += 1
    if tokens[0] != b"P5" or int(tokens[3]) != PGM_MAX:
        raise PreprocessError(f"{path} is not a 16-bit binary PGM")
    width, height = int(tokens[1]), int(tokens[2])
    mm = np.frombuffer(data, dtype=">u2", count=width * height, offset=offset)
    return DepthImage(mm.reshape(height, width).astype(np.float64) / 1000.0, d_max)

