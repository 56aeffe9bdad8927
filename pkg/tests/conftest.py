import json
from pathlib import Path

import pytest

from processes.noise import NoiseKind, NoiseModel


@pytest.fixture
def gaussian() -> NoiseModel:
    return NoiseModel(kind=NoiseKind.GAUSSIAN_ISO)


@pytest.fixture
def laplace() -> NoiseModel:
    return NoiseModel(kind=NoiseKind.LAPLACE)


@pytest.fixture
def rademacher() -> NoiseModel:
    return NoiseModel(kind=NoiseKind.RADEMACHER)


@pytest.fixture
def uniform() -> NoiseModel:
    return NoiseModel(kind=NoiseKind.UNIFORM_SYMMETRIC, halfwidth=2.0)


@pytest.fixture
def write_config(tmp_path: Path):
    def write(config: dict, name: str = "job.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(config), encoding="utf-8")
        return path

    return write
