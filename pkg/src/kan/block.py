"""KAN-Block: KAN layers over per-pixel tokens interleaved with depthwise convolutions."""
from typing import List, Optional

import numpy as np

from src.autodiff import Module, Parameter, Tensor, as_tensor, depthwise_conv2d
from src.errors import ShapeError
from .layer import KanLayer
from .spline import SplineGrid


class TokenNorm(Module):
    """RMS normalization over the channel axis of [T, C] tokens with scale/shift."""

    def __init__(self, channels: int, eps: float = 1e-5):
        self.channels = channels
        self.eps = eps
        self.scale = Parameter(np.ones(channels))
        self.shift = Parameter(np.zeros(channels))

    def forward(self, tokens: Tensor) -> Tensor:
        rms = ((tokens * tokens).mean(axis=1, keepdims=True) + self.eps).sqrt()
        return tokens / rms * self.scale + self.shift


class KanBlock(Module):
    """
    Residual stack of N (TokenNorm -> KanLayer -> DwConv) stages.

    For input X the block computes I_0 = X, I_{i+1} = DwConv_i(Phi_i(I_i)) and
    returns I_N + X. KAN layers see the map as [H*W, C] tokens; the depthwise
    convolution sees the re-assembled [C, H, W] map.
    """

    def __init__(
        self,
        channels: int,
        num_layers: int = 3,
        grid: Optional[SplineGrid] = None,
        dwconv_kernel: int = 3,
        token_norm: bool = True,
        rng: Optional[np.random.Generator] = None,
    ):
        """
        Initialize block.

        Args:
            channels: Width C (preserved end-to-end)
            num_layers: Number of KAN layers N
            grid: Spline grid shared by every layer
            dwconv_kernel: Odd depthwise kernel size
            token_norm: Normalize tokens before each KAN layer
            rng: Generator for the initial weights
        """
        if dwconv_kernel % 2 == 0:
            raise ValueError(f"dwconv_kernel must be odd, got {dwconv_kernel}")
        rng = rng or np.random.default_rng()
        self.channels = channels
        self.grid = grid or SplineGrid()
        self.layers: List[KanLayer] = [
            KanLayer(channels, channels, self.grid, rng) for _ in range(num_layers)
        ]
        self.dwconvs: List[Parameter] = [
            Parameter(_delta_kernel(channels, dwconv_kernel, rng)) for _ in range(num_layers)
        ]
        self.norms: List[TokenNorm] = (
            [TokenNorm(channels) for _ in range(num_layers)] if token_norm else []
        )

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def forward(self, x: Tensor) -> Tensor:
        return kan_block_forward(self, x)


def _delta_kernel(channels: int, size: int, rng: np.random.Generator) -> np.ndarray:
    kernel = rng.normal(0.0, 0.01, size=(channels, size, size))
    kernel[:, size // 2, size // 2] += 1.0
    return kernel


def kan_block_forward(block: KanBlock, x: Tensor) -> Tensor:
    """
    Apply a KAN-Block to a [C,H,W] or [N,C,H,W] map.

    Raises:
        ShapeError: if the channel count differs from the block width
    """
    x = as_tensor(x)
    batched = x.ndim == 4
    xb = x if batched else x.reshape(1, *x.shape)
    if xb.ndim != 4 or xb.shape[1] != block.channels:
        raise ShapeError(
            f"KanBlock of width {block.channels} got input of shape {list(x.shape)}"
        )
    n, c, h, w = xb.shape

    out = xb
    for i, layer in enumerate(block.layers):
        tokens = out.transpose(0, 2, 3, 1).reshape(n * h * w, c)
        if block.norms:
            tokens = block.norms[i](tokens)
        tokens = layer(tokens)
        out = tokens.reshape(n, h, w, c).transpose(0, 3, 1, 2)
        out = depthwise_conv2d(out, block.dwconvs[i])
    out = out + xb
    return out if batched else out.reshape(c, h, w)
