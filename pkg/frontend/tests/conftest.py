"""Shared artifact fixtures: generated through the simulator CLI only."""

import json
import subprocess
import sys
from pathlib import Path

import pytest


def run_cli(*args: str) -> None:
    proc = subprocess.run(
        [sys.executable, "-m", "preftrack.cli", *args],
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise RuntimeError(f"simulator CLI failed: {proc.stderr}\n{proc.stdout}")


@pytest.fixture(scope="session")
def artifacts(tmp_path_factory):
    """CSV artifact tree for all figure kinds (one small benchmark sweep)."""
    root = tmp_path_factory.mktemp("artifacts")
    cfg = {
        "steps": 420,
        "runs": 2,
        "seed": 3,
        "omega": 0.4,
        "oracle": {"grid_points": 101, "polish_steps": 15},
        "output": {
            "directory": str(root / "w04"),
            "gp_dump": True,
            "checkpoints": [25, 100, 400],
            "dump_points": 101,
            "workers": 1,
        },
    }
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(cfg))
    run_cli("run", "--config", str(cfg_path))
    run_cli("run", "--config", str(cfg_path), "--omega", "0", "--out", str(root / "w00"))
    run_cli(
        "run", "--config", str(cfg_path), "--algorithm", "synthetic", "--out", str(root / "syn")
    )
    run_cli("run", "--config", str(cfg_path), "--algorithm", "zero2", "--out", str(root / "zero2"))
    return {
        "w04": root / "w04",
        "w00": root / "w00",
        "syn": root / "syn",
        "zero2": root / "zero2",
        "out": root / "figures",
    }
