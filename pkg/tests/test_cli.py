import json
import os

from click.testing import CliRunner

from dualnav.cli import main


def test_help_lists_commands():
    result = CliRunner().invoke(main, ["--help"])
    assert result.exit_code == 0
    for cmd in ("bench-map2d", "bench-flight3d", "bench-optimizer",
                "run", "export"):
        assert cmd in result.output


def test_bench_optimizer_command(tmp_path):
    result = CliRunner().invoke(
        main, ["bench-optimizer", "--instances", "20",
               "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    payload = json.loads((tmp_path / "bench_optimizer.json").read_text())
    assert payload["instances"] == 20


def test_run_empty_world_command(tmp_path):
    result = CliRunner().invoke(
        main, ["run", "--world", "empty", "--seed", "1",
               "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "episode_000_trajectory.csv").exists()
    assert (tmp_path / "manifest.json").exists()
    assert '"status"' in result.output


def test_bench_map2d_command(tmp_path):
    result = CliRunner().invoke(
        main, ["bench-map2d", "--trials", "1", "--map-size", "200",
               "--local-size", "100", "--min-dist", "120",
               "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    payload = json.loads((tmp_path / "bench_map2d.json").read_text())
    assert payload["trials"] == 1
    assert len(payload["rows"]) == 1
