"""2-D convolutions over [C,H,W] or [N,C,H,W] tensors."""
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.errors import ShapeError
from .ops import pad2d
from .tensor import Tensor, as_tensor


def _as_batched(x: Tensor):
    if x.ndim == 3:
        return x.reshape(1, *x.shape), True
    if x.ndim == 4:
        return x, False
    raise ShapeError(f"Expected [C,H,W] or [N,C,H,W] input, got {list(x.shape)}")


def conv2d(
    x: Tensor,
    kernel: Tensor,
    stride: int = 1,
    padding: Optional[int] = None,
    bias: Optional[Tensor] = None,
    pad_mode: str = "edge",
) -> Tensor:
    """
    Cross-correlation with a dense kernel.

    Args:
        x: Input of shape [C_in,H,W] or [N,C_in,H,W]
        kernel: Weights of shape [C_out,C_in,k,k], k odd
        stride: Step between output samples
        padding: Border width; None means k//2 (shape-preserving at stride 1)
        bias: Optional per-output-channel offset [C_out]
        pad_mode: 'edge' replicates the border, 'zeros' pads with zeros

    Returns:
        Output of shape [C_out,H',W'] (or batched), H' = (H + 2p - k)//stride + 1
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    xb, squeeze = _as_batched(x)
    if kernel.ndim != 4 or kernel.shape[2] != kernel.shape[3]:
        raise ShapeError(f"Kernel must be [C_out,C_in,k,k], got {list(kernel.shape)}")
    c_out, c_in, k, _ = kernel.shape
    if k % 2 == 0:
        raise ShapeError(f"Kernel size must be odd, got {k}")
    if xb.shape[1] != c_in:
        raise ShapeError(f"Input has {xb.shape[1]} channels, kernel expects {c_in}")
    p = k // 2 if padding is None else int(padding)
    h, w = xb.shape[2:]
    h_out = (h + 2 * p - k) // stride + 1
    w_out = (w + 2 * p - k) // stride + 1
    if h_out <= 0 or w_out <= 0:
        raise ShapeError(
            f"Non-positive output extent {h_out}x{w_out} for input {h}x{w}, kernel {k}, "
            f"stride {stride}, padding {p}"
        )

    out = _correlate(pad2d(xb, p, pad_mode), kernel, stride, h_out, w_out)
    if bias is not None:
        out = out + as_tensor(bias).reshape(1, c_out, 1, 1)
    if squeeze:
        out = out.reshape(out.shape[1:])
    return out


def _correlate(xp: Tensor, kernel: Tensor, stride: int, h_out: int, w_out: int) -> Tensor:
    k = kernel.shape[-1]
    xd, wd = xp.data, kernel.data
    windows = sliding_window_view(xd, (k, k), axis=(2, 3))[
        :, :, : (h_out - 1) * stride + 1 : stride, : (w_out - 1) * stride + 1 : stride
    ]
    # windows: [N, C_in, H', W', k, k]
    out = np.tensordot(windows, wd, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)

    def backward(g):
        g = np.ascontiguousarray(g)
        grad_w = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_x = np.zeros_like(xd)
        for i in range(k):
            for j in range(k):
                contrib = np.tensordot(g, wd[:, :, i, j], axes=([1], [0])).transpose(0, 3, 1, 2)
                grad_x[:, :, i : i + (h_out - 1) * stride + 1 : stride,
                       j : j + (w_out - 1) * stride + 1 : stride] += contrib
        return grad_x, grad_w

    return Tensor.from_op("conv2d", np.ascontiguousarray(out), (xp, kernel), backward)


def depthwise_conv2d(x: Tensor, kernel: Tensor, pad_mode: str = "edge") -> Tensor:
    """
    Shape-preserving per-channel convolution.

    Args:
        x: Input of shape [C,H,W] or [N,C,H,W]
        kernel: One k×k kernel per channel, shape [C,k,k]

    Returns:
        Tensor with the input's shape; channel c depends only on input channel c
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    xb, squeeze = _as_batched(x)
    if kernel.ndim != 3 or kernel.shape[1] != kernel.shape[2] or kernel.shape[1] % 2 == 0:
        raise ShapeError(f"Depthwise kernel must be [C,k,k] with odd k, got {list(kernel.shape)}")
    if kernel.shape[0] != xb.shape[1]:
        raise ShapeError(
            f"Depthwise kernel has {kernel.shape[0]} channels, input has {xb.shape[1]}"
        )
    k = kernel.shape[1]
    xp = pad2d(xb, k // 2, pad_mode)
    h, w = xb.shape[2:]
    xd, wd = xp.data, kernel.data
    windows = sliding_window_view(xd, (k, k), axis=(2, 3))
    out = np.einsum("nchwij,cij->nchw", windows, wd, optimize=True)

    def backward(g):
        grad_w = np.einsum("nchw,nchwij->cij", g, windows, optimize=True)
        grad_x = np.zeros_like(xd)
        for i in range(k):
            for j in range(k):
                grad_x[:, :, i : i + h, j : j + w] += g * wd[None, :, i, j, None, None]
        return grad_x, grad_w

    result = Tensor.from_op("depthwise_conv2d", out, (xp, kernel), backward)
    if squeeze:
        result = result.reshape(result.shape[1:])
    return result
