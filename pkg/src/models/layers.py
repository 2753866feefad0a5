"""Convolutional building blocks for the denoiser U-Net."""
import math
from typing import List, Optional

import numpy as np

from src.autodiff import Module, Parameter, Tensor, conv2d, upsample_nearest2x


class Linear(Module):
    """Affine map over the last axis of [B, in] inputs."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, zero_init: bool = False):
        self.in_features = in_features
        self.out_features = out_features
        if zero_init:
            weight = np.zeros((out_features, in_features))
        else:
            weight = rng.normal(0.0, 1.0 / math.sqrt(in_features), size=(out_features, in_features))
        self.weight = Parameter(weight)
        self.bias = Parameter(np.zeros(out_features))

    def forward(self, x: Tensor) -> Tensor:
        return x @ self.weight.T + self.bias


class Conv2d(Module):
    """k×k convolution with edge-replicated padding."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        rng: np.random.Generator,
        kernel_size: int = 3,
        stride: int = 1,
        zero_init: bool = False,
    ):
        """
        Initialize convolution.

        Args:
            in_channels: Input channels
            out_channels: Output channels
            rng: Generator for the initial kernel
            kernel_size: Odd kernel size
            stride: 1 (shape-preserving) or 2 (downsampling)
            zero_init: Start from an all-zero kernel
        """
        self.stride = stride
        shape = (out_channels, in_channels, kernel_size, kernel_size)
        if zero_init:
            kernel = np.zeros(shape)
        else:
            fan_in = in_channels * kernel_size * kernel_size
            kernel = rng.normal(0.0, 1.0 / math.sqrt(fan_in), size=shape)
        self.kernel = Parameter(kernel)
        self.bias = Parameter(np.zeros(out_channels))

    @property
    def out_channels(self) -> int:
        return self.kernel.shape[0]

    def forward(self, x: Tensor) -> Tensor:
        return conv2d(x, self.kernel, stride=self.stride, bias=self.bias)


class GroupNorm(Module):
    """Group normalization over [N, C, H, W] maps."""

    def __init__(self, channels: int, groups: int = 8, eps: float = 1e-5):
        self.groups = math.gcd(groups, channels)
        self.channels = channels
        self.eps = eps
        self.scale = Parameter(np.ones(channels))
        self.shift = Parameter(np.zeros(channels))

    def forward(self, x: Tensor) -> Tensor:
        n, c, h, w = x.shape
        grouped = x.reshape(n, self.groups, (c // self.groups) * h * w)
        mean = grouped.mean(axis=2, keepdims=True)
        centered = grouped - mean
        var = (centered * centered).mean(axis=2, keepdims=True)
        normed = (centered / (var + self.eps).sqrt()).reshape(n, c, h, w)
        return normed * self.scale.reshape(1, c, 1, 1) + self.shift.reshape(1, c, 1, 1)


class ResBlock(Module):
    """
    Residual conv block with time conditioning.

    norm -> silu -> conv -> norm * (1 + scale) + shift -> silu -> conv, plus a
    1×1 projection of the input when the width changes.
    """

    def __init__(self, in_channels: int, out_channels: int, time_dim: int, groups: int, rng: np.random.Generator):
        self.norm1 = GroupNorm(in_channels, groups)
        self.conv1 = Conv2d(in_channels, out_channels, rng)
        self.time_proj = Linear(time_dim, 2 * out_channels, rng)
        self.norm2 = GroupNorm(out_channels, groups)
        self.conv2 = Conv2d(out_channels, out_channels, rng)
        self.skip: Optional[Conv2d] = (
            Conv2d(in_channels, out_channels, rng, kernel_size=1) if in_channels != out_channels else None
        )
        self.out_channels = out_channels

    def forward(self, x: Tensor, temb: Tensor) -> Tensor:
        c = self.out_channels
        h = self.conv1(self.norm1(x).silu())
        ts = self.time_proj(temb.silu())
        n = ts.shape[0]
        scale = ts[:, :c].reshape(n, c, 1, 1)
        shift = ts[:, c:].reshape(n, c, 1, 1)
        h = self.norm2(h) * (scale + 1.0) + shift
        h = self.conv2(h.silu())
        residual = x if self.skip is None else self.skip(x)
        return h + residual


class Downsample(Module):
    """Stride-2 3×3 convolution."""

    def __init__(self, channels: int, rng: np.random.Generator):
        self.conv = Conv2d(channels, channels, rng, stride=2)

    def forward(self, x: Tensor) -> Tensor:
        return self.conv(x)


class Upsample(Module):
    """Nearest-neighbour ×2 followed by a 3×3 convolution."""

    def __init__(self, channels: int, rng: np.random.Generator):
        self.conv = Conv2d(channels, channels, rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.conv(upsample_nearest2x(x))


class ConvBlock(Module):
    """Residual stack of norm -> silu -> 3×3 conv stages; the conv-only bottleneck."""

    def __init__(self, channels: int, num_layers: int, groups: int, rng: np.random.Generator):
        self.norms: List[GroupNorm] = [GroupNorm(channels, groups) for _ in range(num_layers)]
        self.convs: List[Conv2d] = [Conv2d(channels, channels, rng) for _ in range(num_layers)]

    def forward(self, x: Tensor) -> Tensor:
        h = x
        for norm, conv in zip(self.norms, self.convs):
            h = conv(norm(h).silu())
        return h + x
