"""Synthetic paired data: smooth random scenes and their gamma-darkened inputs."""
import logging
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from tqdm import tqdm

from src.data import save_png
from src.data.dataset import HIGH_DIR, LOW_DIR

logger = logging.getLogger(__name__)


class DataGenerator:
    """
    Generates low/normal-light pairs whose degradation is invertible.

    The low-light image is a dim smooth scene in [0, max_low]; its partner is
    the gamma-brightened ``low ** gamma``.
    """

    def __init__(
        self,
        size: int = 48,
        channels: int = 3,
        gamma: float = 0.4,
        max_low: float = 0.35,
        num_blobs: int = 4,
        seed: int = 0,
    ):
        """
        Initialize data generator.

        Args:
            size: Side length of the square images
            channels: 1 or 3
            gamma: Brightening exponent in (0, 1)
            max_low: Brightest value of a low-light image
            num_blobs: Gaussian blobs per channel on top of a linear gradient
            seed: Seed of the scene generator
        """
        if not 0.0 < gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
        if channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {channels}")
        self.size = size
        self.channels = channels
        self.gamma = gamma
        self.max_low = max_low
        self.num_blobs = num_blobs
        self.rng = np.random.default_rng(seed)

    def _scene(self) -> np.ndarray:
        """One smooth channel-first scene in [0, 1]."""
        coords = np.linspace(-1.0, 1.0, self.size)
        yy, xx = np.meshgrid(coords, coords, indexing="ij")
        planes = []
        for _ in range(self.channels):
            a, b = self.rng.uniform(-1.0, 1.0, size=2)
            plane = a * xx + b * yy
            for _ in range(self.num_blobs):
                cy, cx = self.rng.uniform(-1.0, 1.0, size=2)
                width = self.rng.uniform(0.15, 0.6)
                weight = self.rng.uniform(-1.0, 1.0)
                plane = plane + weight * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * width ** 2))
            lo, hi = plane.min(), plane.max()
            planes.append((plane - lo) / (hi - lo) if hi > lo else np.zeros_like(plane))
        return np.stack(planes)

    def brighten(self, low: np.ndarray) -> np.ndarray:
        return np.clip(low, 0.0, 1.0) ** self.gamma

    def generate_pair(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Returns:
            (low, high), each [C, size, size] in [0, 1]
        """
        low = self.max_low * self._scene()
        return low, self.brighten(low)

    def generate_dataset(self, out_dir: Union[str, Path], count: int, verbose: bool = False) -> List[str]:
        """
        Write ``count`` pairs as ``out_dir/low/NNNN.png`` and ``out_dir/high/NNNN.png``.

        Returns:
            Written file names
        """
        out_dir = Path(out_dir)
        names = []
        for i in tqdm(range(count), desc="Generating pairs", disable=not verbose):
            low, high = self.generate_pair()
            name = f"{i:04d}.png"
            save_png(low, out_dir / LOW_DIR / name)
            save_png(high, out_dir / HIGH_DIR / name)
            names.append(name)
        logger.info("Wrote %d synthetic pairs to %s", count, out_dir)
        return names
