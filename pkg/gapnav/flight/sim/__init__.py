from .camera import CameraIntrinsics, CameraModel, RayBundle
from .dynamics import (
    CommandLimits,
    ControlCommand,
    DynamicsParams,
    GapRelativeState,
    QuadState,
    command_from_raw,
    exp_so3,
    gap_relative,
    randomize_params,
    reorthonormalize,
    stabilize,
    step,
)
from .errors import (
    GapGenerationError,
    InvalidStateError,
    MeshError,
    PreprocessError,
    SimulationError,
)
from .geometry import GapPose, geodesic_angle, rot_x, rot_z
from .renderer import (
    CollisionResult,
    DepthImage,
    DepthNoise,
    check_collision,
    preprocess,
    read_pgm,
    render_depth,
    render_depth_bruteforce,
    write_pgm,
)
from .scene import (
    GapConfig,
    GapCourse,
    GapScene,
    TriMesh,
    dump_scene,
    generate_course,
    generate_gap,
    load_scene,
    merge_meshes,
)
