import json
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from entroscope.optimize import OptimizerOptions


@pytest.fixture
def fast_options() -> OptimizerOptions:
    return OptimizerOptions(restarts=4, seed=0, threads=1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def write_json(tmp_path: Path):
    def write(name: str, data: Any) -> str:
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)

    return write
