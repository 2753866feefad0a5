"""Noise-level conditioning for the denoiser."""
import math
from typing import Union

import numpy as np

from src.autodiff import Module, Tensor
from .layers import Linear

# Noise levels in [0, 1] are stretched onto the usual integer-timestep range
ALPHA_BAR_SCALE = 1000.0


def sinusoidal_embedding(alpha_bar: Union[float, np.ndarray], dim: int) -> np.ndarray:
    """
    Sin/cos features of ᾱ_t.

    Args:
        alpha_bar: Scalar or [N] noise levels
        dim: Even embedding width

    Returns:
        Array of shape [N, dim]
    """
    if dim % 2:
        raise ValueError(f"Embedding width must be even, got {dim}")
    value = np.atleast_1d(np.asarray(alpha_bar, dtype=np.float64)) * ALPHA_BAR_SCALE
    half = dim // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half) / half)
    args = value[:, None] * freqs[None, :]
    return np.concatenate([np.sin(args), np.cos(args)], axis=1)


class TimeEmbedding(Module):
    """Sinusoidal features mapped through Linear -> SiLU -> Linear."""

    def __init__(self, dim: int, rng: np.random.Generator):
        self.dim = dim
        self.proj1 = Linear(dim, dim, rng)
        self.proj2 = Linear(dim, dim, rng)

    def forward(self, alpha_bar: Union[float, np.ndarray]) -> Tensor:
        features = Tensor(sinusoidal_embedding(alpha_bar, self.dim), dtype=self.proj1.weight.dtype)
        return self.proj2(self.proj1(features).silu())
