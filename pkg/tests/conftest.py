from pathlib import Path

import pytest
import yaml

from lagro.generators import gen_counterexample, gen_restart_example

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def instances_dir() -> Path:
    return ROOT / "instances"


@pytest.fixture
def counterexample():
    return gen_counterexample()


@pytest.fixture
def restart_example():
    return gen_restart_example()


@pytest.fixture
def config_file(tmp_path, monkeypatch):
    """Write a solver.yaml override and point LAGRO_CONFIG at it."""

    def write(settings: dict) -> Path:
        path = tmp_path / "solver.yaml"
        path.write_text(yaml.safe_dump(settings), encoding="utf-8")
        monkeypatch.setenv("LAGRO_CONFIG", str(path))
        return path

    return write
