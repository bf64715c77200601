"""
Reporter module for KP Torus Lab.

This module writes experiment results to CSV, JSON and Markdown files. Every
file embeds the configuration hash and no timestamps, so re-running a
configuration reproduces the files byte for byte.
"""

import csv
import json
import logging
import math
import os
from typing import Any, Dict, Iterable, List, Sequence

from src.config import ExperimentConfig
from src.field_io import Field, save_field

logger = logging.getLogger(__name__)


def ensure_directory_exists(directory: str) -> None:
    """
    Ensure that the directory exists, create it if it doesn't.

    Args:
        directory: Directory path to check/create
    """
    os.makedirs(directory, exist_ok=True)
    logger.debug(f"Ensured directory exists: {directory}")


def generate_report_directory(config: ExperimentConfig) -> str:
    """
    Generate the directory for one experiment's reports.

    The name is `<command>-<first 12 hex digits of the config hash>` so the
    same configuration always lands in the same place.

    Args:
        config: The resolved experiment configuration

    Returns:
        str: Path to the report directory
    """
    report_dir = os.path.join(config.output, f"{config.command}-{config.config_hash()[:12]}")
    ensure_directory_exists(report_dir)
    return report_dir


def _plain(value: Any) -> Any:
    """JSON-ready form of report values: complex as [re, im], non-finite floats as strings."""
    if isinstance(value, complex):
        return [_plain(value.real), _plain(value.imag)]
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, "model_dump"):
        return _plain(value.model_dump(mode="python"))
    if hasattr(value, "tolist"):
        return _plain(value.tolist())
    if hasattr(value, "item"):
        return _plain(value.item())
    return value


def _format_cell(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def write_csv(
    report_dir: str, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]], config: ExperimentConfig
) -> str:
    """
    Save rows as an RFC-4180 CSV with config_hash as the last column.

    Args:
        report_dir: Directory to save the file
        name: File name without extension
        header: Column names
        rows: Data rows
        config: Configuration whose hash is appended to every row

    Returns:
        str: Path to the saved file
    """
    ensure_directory_exists(report_dir)
    path = os.path.join(report_dir, f"{name}.csv")
    config_hash = config.config_hash()
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\r\n")
        writer.writerow(list(header) + ["config_hash"])
        for row in rows:
            writer.writerow([_format_cell(v) for v in row] + [config_hash])
            count += 1
    logger.info(f"Saved {count} rows to {path}")
    return path


def write_json(report_dir: str, name: str, payload: Dict[str, Any], config: ExperimentConfig) -> str:
    """
    Save a result dictionary as JSON with the resolved config and its hash.

    Args:
        report_dir: Directory to save the file
        name: File name without extension
        payload: Result entries
        config: The experiment configuration

    Returns:
        str: Path to the saved file
    """
    ensure_directory_exists(report_dir)
    path = os.path.join(report_dir, f"{name}.json")
    document = {**_plain(payload), "config": config.canonical(), "config_hash": config.config_hash()}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Saved report to {path}")
    return path


def write_summary_markdown(
    report_dir: str, title: str, header: Sequence[str], rows: Sequence[Sequence[Any]], config: ExperimentConfig,
    notes: Sequence[str] = (),
) -> str:
    """
    Save a Markdown summary table.

    Args:
        report_dir: Directory to save the file
        title: Heading of the summary
        header: Column names
        rows: Table rows
        config: The experiment configuration
        notes: Lines printed under the table

    Returns:
        str: Path to the saved summary file
    """
    ensure_directory_exists(report_dir)
    path = os.path.join(report_dir, "summary.md")

    lines: List[str] = [f"# {title}", "", f"Config hash: `{config.config_hash()}`", ""]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("| " + " | ".join("---" for _ in header) + " |")
    for row in rows:
        cells = [f"{v:.6g}" if isinstance(v, float) else _format_cell(v) for v in row]
        lines.append("| " + " | ".join(cells) + " |")
    if notes:
        lines.append("")
        lines.extend(f"- {note}" for note in notes)

    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")

    logger.info(f"Saved summary report to {path}")
    return path


def save_checkpoints(report_dir: str, states: Sequence[Field], times: Sequence[float]) -> List[str]:
    """
    Save solver states in the field binary format, one file per saved time.

    Returns:
        List[str]: Paths of the saved files, in time order
    """
    directory = os.path.join(report_dir, "checkpoints")
    ensure_directory_exists(directory)
    paths = [
        save_field(state, os.path.join(directory, f"state-{i:05d}.kptf"))
        for i, (state, _) in enumerate(zip(states, times))
    ]
    logger.info(f"Saved {len(paths)} checkpoints to {directory}")
    return paths
