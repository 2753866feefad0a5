"""Classical enhancers used as reference points."""
from typing import Union

import numpy as np

from src.data import ImageBuffer

STRATEGIES = ("identity", "gamma", "autocontrast")


class BaselineEnhancer:
    """Training-free enhancers for comparison."""

    def __init__(self, strategy: str = "identity", gamma: float = 0.5):
        """
        Initialize baseline enhancer.

        Args:
            strategy: 'identity', 'gamma' (x ** gamma), or 'autocontrast'
                (per-channel min/max stretch)
            gamma: Exponent of the gamma strategy
        """
        if strategy not in STRATEGIES:
            raise ValueError(f"Unknown baseline '{strategy}', expected one of {STRATEGIES}")
        if gamma <= 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        self.strategy = strategy
        self.gamma = gamma

    def __call__(self, image: Union[ImageBuffer, np.ndarray]) -> np.ndarray:
        return self.enhance(image)

    def enhance(self, image: Union[ImageBuffer, np.ndarray]) -> np.ndarray:
        """
        Enhance a [C,H,W] image in [0, 1].

        Returns:
            New array in [0, 1] with the same shape
        """
        data = image.data if isinstance(image, ImageBuffer) else np.asarray(image, dtype=np.float64)
        if self.strategy == "identity":
            return np.array(data, dtype=np.float64)
        if self.strategy == "gamma":
            return np.clip(data, 0.0, 1.0) ** self.gamma
        return self._autocontrast(data)

    @staticmethod
    def _autocontrast(data: np.ndarray) -> np.ndarray:
        lo = data.min(axis=(-2, -1), keepdims=True)
        hi = data.max(axis=(-2, -1), keepdims=True)
        span = np.where(hi > lo, hi - lo, 1.0)
        return np.clip((data - lo) / span, 0.0, 1.0)
