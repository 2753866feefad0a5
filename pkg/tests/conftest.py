"""Shared fixtures."""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.autodiff import precision
from src.training import DataGenerator


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def f64():
    with precision("f64"):
        yield


@pytest.fixture
def synthetic_root(tmp_path):
    """Four 48x48 RGB pairs under tmp_path/data/{low,high}."""
    root = tmp_path / "data"
    DataGenerator(size=48, seed=7).generate_dataset(root, 4)
    return root


@pytest.fixture
def tiny_overrides(synthetic_root, tmp_path):
    """Config overrides for a few-step training run on the synthetic pairs."""
    return [
        f"data.root={synthetic_root}",
        f"io.checkpoint_dir={tmp_path / 'ckpt'}",
        "train.batch_size=2",
        "train.patch_size=16",
        "train.phase1_steps=10",
        "train.phase2_steps=4",
        "schedule.T=20",
        "io.log_interval=2",
        "io.checkpoint_interval=5",
    ]
