"""
Layered YAML configuration. Levels, in increasing precedence: the application defaults
shipped in configs/, the user file ~/.rkhsdagma_user_config.yaml, then the instance
configurations (paths or mappings) given by the caller.
"""
import copy
import logging
from pathlib import Path
import typing

import yaml
from pykwalify.core import Core
from pykwalify.errors import PyKwalifyException

from .errors import ConfigError

logger = logging.getLogger(__name__)
logging.getLogger("pykwalify").setLevel(logging.CRITICAL)

ConfigArg = typing.Union[None, str, Path, dict, typing.List[typing.Union[str, Path, dict]]]


def get_default_config():
    return {
        "application": Path(__file__).parent.parent / "configs" / "app_default_config.yaml",
        "user": Path.home() / ".rkhsdagma_user_config.yaml"
    }


def get_default_schema():
    return Path(__file__).parent.parent / "schemas" / "app_default_schema.yaml"


def read_yaml(path):
    path = Path(path)
    try:
        with path.open("r") as f:
            content = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError("The configuration file {} is not valid YAML: {}".format(path, e))
    if content is None:
        return {}
    if not isinstance(content, dict):
        raise ConfigError("The configuration file {} must contain a mapping at its root.".format(path))
    return content


def deep_merge(base: dict, update: dict):
    """Merge update into a copy of base; nested mappings merge key by key, other values are replaced."""
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def validate(config: dict, schema_path=None):
    if schema_path is None:
        schema_path = get_default_schema()
    core = Core(source_data=config, schema_data=read_yaml(schema_path))
    try:
        core.validate(raise_exception=True)
    except PyKwalifyException as e:
        errors = core.validation_errors or [getattr(e, "msg", str(e))]
        raise ConfigError("Invalid configuration:\n  " + "\n  ".join(str(error) for error in errors))


def load_config(config: ConfigArg = None, use_user_config=True, validate_schema=True):
    """
    :param config: Instance level configuration: a path to a YAML file, a mapping, or a list of
                   those, applied in order.
    :param use_user_config: Whether ~/.rkhsdagma_user_config.yaml is merged when it exists.
    :return: The merged configuration mapping.
    """
    default_config = get_default_config()
    merged = read_yaml(default_config["application"])

    if use_user_config and default_config["user"].exists():
        logger.info("Using the user configuration %s.", default_config["user"])
        merged = deep_merge(merged, read_yaml(default_config["user"]))

    if config is None:
        config = []
    if not isinstance(config, list):
        config = [config]
    for level_config in config:
        if isinstance(level_config, (str, Path)):
            if not Path(level_config).exists():
                raise ConfigError("The configuration file {} does not exist.".format(level_config))
            level_config = read_yaml(level_config)
        if not isinstance(level_config, dict):
            raise ConfigError("Configurations must be mappings or paths to YAML files. Received type: {}"
                              .format(type(level_config)))
        merged = deep_merge(merged, level_config)

    if validate_schema:
        validate(merged)
    return merged


def save_config(config: dict, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        yaml.safe_dump(config, f, default_flow_style=False, sort_keys=False)
