# PEP-8
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GapGenerationError, MeshError
from .geometry import GapPose, rot_x


MIN_TRIANGLE_AREA = 1e-10
SCENE_FORMAT_VERSION = 1

# Gap template, in-plane (y, z) coordinates:
#   0-3   inner aperture corners, counter-clockwise from (-w/2, -h/2)
#   4-7   midpoints of the inner sides, 4+k between corners k and k+1
#   8-11  outer frame corners, 8+k behind inner corner k
# Each side k is the fan (8+k, 8+k1, 4+k), (8+k, 4+k, k), (8+k1, k1, 4+k).
GAP_TRIANGLES = np.array(
    [
        tri
        for k in range(4)
        for tri in (
            (8 + k, 8 + (k + 1) % 4, 4 + k),
            (8 + k, 4 + k, k),
            (8 + (k + 1) % 4, (k + 1) % 4, 4 + k),
        )
    ],
    dtype=np.int64,
)
APERTURE_LOOP = (0, 4, 1, 5, 2, 6, 3, 7)


@dataclass(frozen=True, eq=False)
class TriMesh:
    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise MeshError(f"triangle index out of range for {len(vertices)} vertices")
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)
        small = np.flatnonzero(self.areas() <= MIN_TRIANGLE_AREA)
        if small.size:
            raise MeshError(f"degenerate triangles {small.tolist()}")

    def __len__(self) -> int:
        return len(self.triangles)

    def corners(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        v = self.vertices[self.triangles]
        return v[:, 0], v[:, 1], v[:, 2]

    def areas(self) -> np.ndarray:
        if not len(self.triangles):
            return np.zeros(0)
        a, b, c = self.corners()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def translated(self, offset) -> TriMesh:
        return TriMesh(self.vertices + np.asarray(offset, dtype=np.float64), self.triangles)


@dataclass(frozen=True)
class GapConfig:
    aperture: tuple[float, float] = (0.8, 0.4)
    frame_width: float = 0.4
    jitter: float = 0.1
    distance_range: tuple[float, float] = (3.0, 5.0)
    lateral_range: tuple[float, float] = (-1.0, 1.0)
    height_range: tuple[float, float] = (1.0, 2.0)
    tilt_range_deg: tuple[float, float] = (-80.0, 80.0)
    scale_range: tuple[float, float] = (1.0, 1.0)
    start_position: tuple[float, float, float] = (0.0, 0.0, 1.5)
    max_retries: int = 20

    def __post_init__(self):
        if min(self.aperture) <= 0 or self.frame_width <= 0 or self.jitter < 0:
            raise ValueError(f"invalid gap geometry: {self}")
        low, high = self.tilt_range_deg
        if not -80.0 <= low <= high <= 80.0:
            raise ValueError(f"tilt range must lie within [-80, 80] deg, got {self.tilt_range_deg}")
        for name in ("distance_range", "lateral_range", "height_range", "scale_range"):
            low, high = getattr(self, name)
            if low > high:
                raise ValueError(f"{name} is empty: {(low, high)}")
        if self.scale_range[0] <= 0:
            raise ValueError("gap scale must be positive")


@dataclass(frozen=True, eq=False)
class GapScene:
    mesh: TriMesh
    pose: GapPose
    aperture: tuple[float, float]
    tilt: float
    vertex_jitter: np.ndarray
    scale: float = 1.0
    seed: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class GapCourse:
    """Gaps in flight order sharing one merged mesh."""

    gaps: tuple[GapScene, ...]
    mesh: TriMesh = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "mesh", merge_meshes([g.mesh for g in self.gaps]))

    def __len__(self) -> int:
        return len(self.gaps)


def template(aperture: tuple[float, float], frame_width: float) -> np.ndarray:
    w, h = aperture[0] / 2.0, aperture[1] / 2.0
    outer_w, outer_h = w + frame_width, h + frame_width
    return np.array([
        (-w, -h), (w, -h), (w, h), (-w, h),
        (0.0, -h), (w, 0.0), (0.0, h), (-w, 0.0),
        (-outer_w, -outer_h), (outer_w, -outer_h), (outer_w, outer_h), (-outer_w, outer_h),
    ])


def _signed_areas(points: np.ndarray) -> np.ndarray:
    a, b, c = (points[GAP_TRIANGLES[:, i]] for i in range(3))
    ab, ac = b - a, c - a
    return 0.5 * (ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0])


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


def is_simple_polygon(loop: np.ndarray) -> bool:
    n = len(loop)
    edges = [(loop[i], loop[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(*edges[i], *edges[j]):
                return False
    return True


def valid_gap_outline(points: np.ndarray) -> bool:
    if np.any(_signed_areas(points) <= MIN_TRIANGLE_AREA):
        return False
    return is_simple_polygon(points[list(APERTURE_LOOP)])


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def generate_gap(
    seed,
    config: GapConfig | None = None,
    anchor_x: float | None = None,
    distance_range: tuple[float, float] | None = None,
) -> GapScene:
    config = config or GapConfig()
    rng = _rng(seed)
    start = np.asarray(config.start_position, dtype=np.float64)
    anchor_x = start[0] if anchor_x is None else anchor_x

    distance = rng.uniform(*(distance_range or config.distance_range))
    lateral = rng.uniform(*config.lateral_range)
    height = rng.uniform(*config.height_range)
    tilt = math.radians(rng.uniform(*config.tilt_range_deg))
    scale = rng.uniform(*config.scale_range)

    aperture = (config.aperture[0] * scale, config.aperture[1] * scale)
    base = template(aperture, config.frame_width)
    for _ in range(config.max_retries):
        offsets = rng.uniform(-config.jitter, config.jitter, size=base.shape)
        points = base + offsets
        if valid_gap_outline(points):
            break
    else:
        raise GapGenerationError(seed, config.max_retries)

    rotation = rot_x(tilt)
    position = np.array([anchor_x + distance, start[1] + lateral, height])
    local = np.column_stack([np.zeros(len(points)), points])
    vertices = position + local @ rotation.T
    seed_key = tuple(np.atleast_1d(seed).tolist()) if not isinstance(seed, np.random.Generator) else ()
    return GapScene(
        mesh=TriMesh(vertices, GAP_TRIANGLES),
        pose=GapPose(position, rotation),
        aperture=aperture,
        tilt=tilt,
        vertex_jitter=offsets,
        scale=float(scale),
        seed=seed_key,
    )


def generate_course(
    seed,
    n_gaps: int,
    config: GapConfig | None = None,
    spacing_range: tuple[float, float] = (3.0, 5.0),
) -> GapCourse:
    """Gap i is drawn from seed [*seed, i]; the first sits ``distance_range`` ahead of the start."""
    if n_gaps < 1:
        raise ValueError(f"a course needs at least one gap, got {n_gaps}")
    config = config or GapConfig()
    gaps: list[GapScene] = []
    anchor = config.start_position[0]
    for i in range(n_gaps):
        gap = generate_gap(
            [*np.atleast_1d(seed).tolist(), i],
            config,
            anchor_x=anchor,
            distance_range=None if i == 0 else spacing_range,
        )
        gaps.append(gap)
        anchor = float(gap.pose.position[0])
    return GapCourse(tuple(gaps))


def merge_meshes(meshes: Sequence[TriMesh]) -> TriMesh:
    vertices, triangles, offset = [], [], 0
    for mesh in meshes:
        vertices.append(mesh.vertices)
        triangles.append(mesh.triangles + offset)
        offset += len(mesh.vertices)
    if not vertices:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    return TriMesh(np.vstack(vertices), np.vstack(triangles))


def wall(distance: float, half_width: float = 5.0, half_height: float = 5.0, z: float = 0.0) -> TriMesh:
    """Two triangles in the plane x = distance, facing the origin."""
    vertices = np.array([
        (distance, -half_width, z - half_height),
        (distance, half_width, z - half_height),
        (distance, half_width, z + half_height),
        (distance, -half_width, z + half_height),
    ])
    return TriMesh(vertices, np.array([(0, 1, 2), (0, 2, 3)]))


# Scene text format, one record per line:
#   scene <version>
#   gap <px> <py> <pz> <tilt rad> <aperture w> <aperture h> <scale>
#   rotation <r00> <r01> ... <r22>
#   v <x> <y> <z>
#   f <i> <j> <k>
# Floats are written with 17 significant digits so a dump reloads bit-exactly.

def _fmt(values) -> str:
    return " ".join(f"{float(v):.17g}" for v in values)


def dump_scene(path: str | Path, scenes: GapScene | GapCourse) -> None:
    gaps = scenes.gaps if isinstance(scenes, GapCourse) else (scenes,)
    mesh = scenes.mesh
    lines = [f"scene {SCENE_FORMAT_VERSION}"]
    for gap in gaps:
        lines.append(f"gap {_fmt(gap.pose.position)} {_fmt([gap.tilt, *gap.aperture, gap.scale])}")
        lines.append(f"rotation {_fmt(gap.pose.rotation.reshape(-1))}")
    lines.extend(f"v {_fmt(v)}" for v in mesh.vertices)
    lines.extend("f {} {} {}".format(*t) for t in mesh.triangles)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True, eq=False)
class SceneDump:
    mesh: TriMesh
    poses: list[GapPose]
    tilts: list[float]
    apertures: list[tuple[float, float]]


def load_scene(path: str | Path) -> SceneDump:
    vertices, triangles, poses, tilts, apertures = [], [], [], [], []
    pending = None
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        kind, *fields_ = line.split()
        match kind:
            case "scene":
                if int(fields_[0]) != SCENE_FORMAT_VERSION:
                    raise MeshError(f"unsupported scene format version {fields_[0]}")
            case "gap":
                values = [float(x) for x in fields_]
                pending = np.array(values[:3])
                tilts.append(values[3])
                apertures.append((values[4], values[5]))
            case "rotation":
                if pending is None:
                    raise MeshError(f"line {number}: rotation without a gap record")
                poses.append(GapPose(pending, np.array([float(x) for x in fields_]).reshape(3, 3)))
                pending = None
            case "v":
                vertices.append([float(x) for x in fields_])
            case "f":
                triangles.append([int(x) for x in fields_])
            case _:
                raise MeshError(f"line {number}: unknown record {kind!r}")
    return SceneDump(
        mesh=TriMesh(np.array(vertices).reshape(-1, 3), np.array(triangles).reshape(-1, 3)),
        poses=poses,
        tilts=tilts,
        apertures=apertures,
    )
