"""
Tests for report files.
"""

import json
import os

from src.field_io import load_field
from src.kp_solver import cosine_data
from src.reporter import (
    generate_report_directory,
    save_checkpoints,
    write_csv,
    write_json,
    write_summary_markdown,
)


class TestReportFiles:
    """Directory naming and file formats."""

    def test_directory_is_named_by_the_hash(self, make_config):
        config = make_config("count")
        path = generate_report_directory(config)
        assert os.path.basename(path) == f"count-{config.config_hash()[:12]}"
        assert os.path.isdir(path)

    def test_csv_uses_crlf_and_appends_the_hash(self, make_config, tmp_path):
        config = make_config("count")
        path = write_csv(str(tmp_path), "counts", ["r", "count"], [(0, 1), (1, 4.5), (2, None)], config)
        with open(path, "rb") as f:
            lines = f.read().split(b"\r\n")
        assert lines[0] == b"r,count,config_hash"
        assert lines[2] == f"1,4.5,{config.config_hash()}".encode()
        assert lines[3] == f"2,,{config.config_hash()}".encode()
        assert lines[-1] == b""

    def test_json_is_sorted_and_carries_the_config(self, make_config, tmp_path):
        config = make_config("count")
        path = write_json(str(tmp_path), "summary", {"z": float("inf"), "a": 1j, "m": (1, 2)}, config)
        with open(path, encoding="utf-8") as f:
            text = f.read()
        document = json.loads(text)
        assert document["a"] == [0.0, 1.0]
        assert document["z"] == "inf"
        assert document["m"] == [1, 2]
        assert document["config_hash"] == config.config_hash()
        assert document["config"]["command"] == "count"
        assert text.index('"a"') < text.index('"config"') < text.index('"z"')

    def test_files_are_reproducible(self, make_config, tmp_path):
        config = make_config("count")
        first = open(write_json(str(tmp_path / "a"), "summary", {"x": 0.1}, config), "rb").read()
        second = open(write_json(str(tmp_path / "b"), "summary", {"x": 0.1}, config), "rb").read()
        assert first == second

    def test_summary_markdown(self, make_config, tmp_path):
        config = make_config("sweep")
        path = write_summary_markdown(str(tmp_path), "Sweep", ["N", "ratio"], [(4, 0.123456789)], config, ["slope 0.1"])
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
        assert lines[0] == "# Sweep"
        assert "| 4 | 0.123457 |" in lines
        assert lines[-1] == "- slope 0.1"

    def test_checkpoints(self, tmp_path):
        states = [cosine_data(2, 2, 0.1), cosine_data(2, 2, 0.2)]
        paths = save_checkpoints(str(tmp_path), states, [0.0, 0.5])
        assert [os.path.basename(p) for p in paths] == ["state-00000.kptf", "state-00001.kptf"]
        assert load_field(paths[1]).mode(1, (0, 0)) == 0.1
