# PEP-8
import json

import pytest
from django.conf import settings

from flight.config import (
    ConfigError,
    RunConfig,
    config_dict,
    config_from_dict,
    config_hash,
    load_config,
    with_overrides,
)
from flight.harness.settings import ResetMode

from .conftest import MICRO_CONFIG


def test_no_path_gives_the_defaults():
    assert load_config(None) == RunConfig()


def test_shipped_configs_load(captured):
    default = load_config(settings.CONFIG_DIR / "default.json")
    assert default.camera.width == 32
    assert default.policy.flat_dim == 6144
    assert "not below the filter time constants" in captured.text

    desk = load_config(settings.CONFIG_DIR / "desk.json")
    assert desk.workers == 8
    assert desk.gap.aperture == (0.9, 0.4)
    assert desk.eval.tilt_range_deg == (-30.0, 30.0)


def test_settings_carry_only_offline_tooling():
    for name in ("LOGGING", "CONFIG_DIR", "DEFAULT_CONFIG", "INSTALLED_APPS"):
        assert settings.is_overridden(name)
    for name in ("SECRET_KEY", "USE_TZ", "TIME_ZONE"):
        assert not settings.is_overridden(name)


def test_nested_sections_become_dataclasses(micro_run):
    assert micro_run.policy.channels == (2, 2, 2)
    assert micro_run.train.horizon == 4
    assert micro_run.eval.noise_levels == (0.0, 0.5)
    assert micro_run.eval.reset_mode is ResetMode.CLASSIFIER


def test_enum_values_are_parsed():
    run = config_from_dict({**MICRO_CONFIG, "eval": {**MICRO_CONFIG["eval"], "reset_mode": "oracle-plane"}})
    assert run.eval.reset_mode is ResetMode.ORACLE_PLANE


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.json")


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{seed: 1", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)


@pytest.mark.parametrize("data", [
    {"sed": 1},
    {"train": {"horizon": 1}},
    {"camera": {"width": 16, "height": 12}},
    {"workers": 0},
    {"gap": {"tilt_range_deg": [-85.0, 0.0]}},
])
def test_invalid_configs_are_rejected(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_overrides_follow_dotted_paths(micro_run):
    run = with_overrides(micro_run, {"train.iterations": 10, "seed": None, "policy.aux_hidden": 7})
    assert run.train.iterations == 10
    assert run.seed == micro_run.seed
    assert run.policy.aux_hidden == 7
    assert run.train.horizon == micro_run.train.horizon


def test_bad_overrides(micro_run):
    with pytest.raises(ConfigError, match="unknown config key"):
        with_overrides(micro_run, {"train.iters": 3})
    with pytest.raises(ConfigError):
        with_overrides(micro_run, {"train.horizon": 1})


def test_config_hash_is_stable(micro_run, micro_config):
    again = load_config(micro_config)
    assert config_hash(again) == config_hash(micro_run)
    assert config_hash(with_overrides(micro_run, {"seed": 4})) != config_hash(micro_run)


def test_config_dict_is_json(micro_run):
    data = json.loads(json.dumps(config_dict(micro_run)))
    assert data["eval"]["reset_mode"] == "classifier"
    assert config_from_dict(data) == micro_run
