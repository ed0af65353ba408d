# PEP-8
import json

import pytest

from flight.config import config_from_dict
from utils.log import logger


# 8x8 camera, 4x4 policy input and a gap a metre or so ahead: every rollout
# step costs well under a millisecond.
MICRO_CONFIG = {
    "seed": 3,
    "workers": 2,
    "dynamics": {"tau_omega": 0.04, "tau_thrust": 0.05},
    "camera": {"width": 8, "height": 8},
    "policy": {
        "input_height": 4,
        "input_width": 4,
        "channels": [2, 2, 2],
        "kernels": [2, 3, 3],
        "strides": [2, 1, 1],
        "embed": 4,
        "aux_hidden": 3,
    },
    "gap": {
        "jitter": 0.0,
        "tilt_range_deg": [-30.0, 30.0],
        "distance_range": [1.0, 1.5],
        "lateral_range": [-0.2, 0.2],
        "height_range": [1.4, 1.6],
    },
    "train": {
        "iterations": 3,
        "batch": 2,
        "horizon": 4,
        "checkpoint_every": 2,
        "log_every": 1,
        "aim_noise": 0.2,
    },
    "aux": {"iterations": 2, "batch": 3, "horizon": 6, "checkpoint_every": 1, "log_every": 1},
    "eval": {
        "trials": 3,
        "tilt_range_deg": [-30.0, 30.0],
        "course_tilt_deg": [-30.0, 30.0],
        "n_gaps": 2,
        "course_spacing": [1.0, 1.5],
        "trav_trajectories": 6,
        "noise_levels": [0.0, 0.5],
    },
}


@pytest.fixture
def micro_run():
    return config_from_dict(MICRO_CONFIG)


@pytest.fixture
def micro_config(tmp_path):
    path = tmp_path / "micro.json"
    path.write_text(json.dumps(MICRO_CONFIG), encoding="utf-8")
    return path


@pytest.fixture
def captured(caplog):
    """caplog wired to the project logger, which does not propagate."""
    logger.addHandler(caplog.handler)
    yield caplog
    logger.removeHandler(caplog.handler)
