from pathlib import Path

import pytest
import yaml

from rkhsdagma.config import load_config, deep_merge, validate, read_yaml, save_config, get_default_config
from rkhsdagma.errors import ConfigError
from rkhsdagma.optimizer import DagmaConfig

from . import isolated_config


def test_defaults_validate(isolated_config):
    config = load_config()
    assert config["dagma"]["T"] == 6
    assert config["kernel"]["materialize"] == "auto"
    assert isinstance(config["dagma"]["tau"], float)
    cfg = DagmaConfig.from_config(config)
    assert cfg.lambda_ == pytest.approx(1e-3) and cfg.adam.max_iter == 3000


def test_deep_merge():
    base = {"a": {"b": 1, "c": [1, 2]}, "d": 2}
    merged = deep_merge(base, {"a": {"c": [3]}, "e": {"f": 1}})
    assert merged == {"a": {"b": 1, "c": [3]}, "d": 2, "e": {"f": 1}}
    assert base == {"a": {"b": 1, "c": [1, 2]}, "d": 2}


def test_precedence(isolated_config):
    user_file = get_default_config()["user"]
    assert Path(user_file).parent == isolated_config / "home"
    with user_file.open("w") as f:
        yaml.safe_dump({"dagma": {"T": 4, "omega": 0.2}}, f)

    assert load_config()["dagma"]["T"] == 4
    assert load_config(use_user_config=False)["dagma"]["T"] == 6

    instance_file = isolated_config / "instance.yaml"
    save_config({"dagma": {"T": 3}}, instance_file)
    config = load_config([instance_file, {"dagma": {"omega": 0.3}}])
    assert config["dagma"]["T"] == 3
    assert config["dagma"]["omega"] == 0.3
    assert config["dagma"]["mu0"] == 1.0


def test_invalid_configurations(isolated_config):
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(isolated_config / "missing.yaml")
    with pytest.raises(ConfigError):
        load_config({"dagma": {"T": 0}})
    with pytest.raises(ConfigError):
        load_config({"kernel": {"materialize": "sometimes"}})
    with pytest.raises(ConfigError):
        load_config({"slurm": {"time": "one hour"}})
    with pytest.raises(ConfigError):
        load_config(12)

    broken = isolated_config / "broken.yaml"
    broken.write_text("dagma: [unclosed\n")
    with pytest.raises(ConfigError, match="not valid YAML"):
        read_yaml(broken)
    broken.write_text("- a list\n")
    with pytest.raises(ConfigError, match="mapping"):
        read_yaml(broken)


def test_validate_default_file_after_round_trip(isolated_config):
    config = load_config()
    path = isolated_config / "saved.yaml"
    save_config(config, path)
    assert read_yaml(path) == config
    validate(read_yaml(path))
