"""
File parsing utilities for KP Torus Lab.

Experiment files are YAML documents with two sections:

    run:
      command: probe
      seed: 7
      threads: 1
      output: reports

    parameters:
      case: bil
      budget: 200
      sizes: [4, 8, 16]
      override.s1: 0.2
"""

import logging
import os
import typing
from typing import Any, Dict, Type

import yaml

from src.config import COMMAND_PARAMS, COMMANDS, _Params

logger = logging.getLogger(__name__)

SECTIONS = ("run", "parameters")
RUN_KEYS = ("command", "seed", "threads", "output")
OVERRIDE_PREFIX = "override."


def coerce_value(text: str) -> Any:
    """
    Convert one text value into bool, int, float, list or str.

    Comma-separated values become lists of coerced items.
    """
    text = text.strip()
    if "," in text:
        return [coerce_value(part) for part in text.split(",") if part.strip()]
    lowered = text.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _is_list_field(model: Type[_Params], name: str) -> bool:
    field = model.model_fields.get(name)
    return field is not None and typing.get_origin(field.annotation) in (list, typing.List)


def normalise_parameters(command: str, raw: Dict[str, Any]) -> Dict[str, Any]:
    """
    Shape raw key/value pairs for the command's parameter model.

    Keys of the form `override.<name>` are collected into the `overrides`
    map; scalars given for list-valued fields are wrapped in a list.
    Unknown keys pass through so the model can reject and name them.

    Args:
        command: The experiment command
        raw: Parameter values as parsed

    Returns:
        Dict[str, Any]: Parameters ready for validation
    """
    model = COMMAND_PARAMS[command]
    out: Dict[str, Any] = {}
    overrides: Dict[str, Any] = dict(raw.get("overrides", {}))
    for key, value in raw.items():
        if key == "overrides":
            continue
        if key.startswith(OVERRIDE_PREFIX):
            overrides[key[len(OVERRIDE_PREFIX):]] = value
            continue
        if _is_list_field(model, key) and not isinstance(value, list):
            value = [value]
        out[key] = value
    if overrides:
        out["overrides"] = overrides
    return out


def _section(document: Dict[str, Any], name: str) -> Dict[str, Any]:
    section = document.get(name) or {}
    if not isinstance(section, dict):
        raise ValueError(f"section '{name}' must be a mapping")
    return {str(key): value for key, value in section.items()}


def _plain_value(value: Any) -> Any:
    # YAML leaves exponent floats without a dot (1e-3) and comma lists as strings
    if isinstance(value, str):
        return coerce_value(value)
    if isinstance(value, list):
        return [_plain_value(item) for item in value]
    return value


def parse_config_file(file_path: str) -> Dict[str, Any]:
    """
    Parse an experiment file into ExperimentConfig keyword arguments.

    Args:
        file_path: Path to the YAML experiment file

    Returns:
        Dict[str, Any]: command, parameters and any of seed, threads, output

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: On malformed YAML, a missing or unknown command, section or run key
    """
    if not os.path.exists(file_path):
        raise FileNotFoundError(f"File not found: {file_path}")

    try:
        with open(file_path, mode="r", encoding="utf-8") as f:
            document = yaml.safe_load(f)
    except yaml.YAMLError as e:
        logger.error(f"Error parsing file {file_path}: {str(e)}")
        raise ValueError(f"malformed experiment file {file_path}: {e}") from e

    if not isinstance(document, dict):
        raise ValueError(f"experiment file {file_path} must hold 'run' and 'parameters' sections")
    for name in document:
        if name not in SECTIONS:
            raise ValueError(f"unknown section '{name}' in {file_path}")

    run = _section(document, "run")
    for key in run:
        if key not in RUN_KEYS:
            raise ValueError(f"unknown key '{key}' in run")
    command = str(run.get("command") or "").strip()
    if not command:
        raise ValueError("missing key 'command' in run")
    if command not in COMMANDS:
        raise ValueError(f"unknown command '{command}'")

    result: Dict[str, Any] = {"command": command}
    for key in ("seed", "threads"):
        if key in run:
            result[key] = _plain_value(run[key])
    if "output" in run:
        result["output"] = str(run["output"]).strip()

    raw = {key: _plain_value(value) for key, value in _section(document, "parameters").items()}
    result["parameters"] = normalise_parameters(command, raw)
    logger.debug(f"Parsed {file_path}: {result}")
    return result
