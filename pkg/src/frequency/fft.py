"""
2-D discrete Fourier transforms over the last two axes.

Power-of-two extents use an iterative radix-2 Cooley-Tukey transform with
bit-reversed input ordering; other extents fall back to a direct DFT matrix
product. Both are unnormalized in the forward direction; the inverse divides
by H·W.
"""
import logging
from functools import lru_cache

import numpy as np

from src.autodiff import Tensor, as_tensor
from src.errors import ShapeError

logger = logging.getLogger(__name__)

FFT_MODES = ("auto", "direct", "pad")


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n: int) -> int:
    return 1 << max(0, (int(n) - 1).bit_length())


@lru_cache(maxsize=32)
def _bit_reversal(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@lru_cache(maxsize=32)
def _dft_matrix(n: int, inverse: bool) -> np.ndarray:
    sign = 1.0 if inverse else -1.0
    k = np.arange(n)
    return np.exp(sign * 2j * np.pi * np.outer(k, k) / n)


def _radix2_last_axis(x: np.ndarray, inverse: bool) -> np.ndarray:
    n = x.shape[-1]
    sign = 1.0 if inverse else -1.0
    out = x[..., _bit_reversal(n)]
    lead = out.shape[:-1]
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(sign * 2j * np.pi * np.arange(half) / size)
        blocks = out.reshape(*lead, n // size, size)
        even = blocks[..., :half]
        odd = blocks[..., half:] * twiddle
        out = np.concatenate([even + odd, even - odd], axis=-1).reshape(*lead, n)
        size *= 2
    return out


def _transform_last_axis(x: np.ndarray, inverse: bool, mode: str) -> np.ndarray:
    n = x.shape[-1]
    if mode != "direct" and is_power_of_two(n):
        return _radix2_last_axis(x, inverse)
    return x @ _dft_matrix(n, inverse).T


def dft2(x: np.ndarray, inverse: bool = False, mode: str = "auto") -> np.ndarray:
    """
    Complex 2-D transform of the last two axes of a numpy array.

    Args:
        x: Real or complex array [..., H, W]
        inverse: Inverse transform (scaled by 1/(H·W))
        mode: 'auto' (radix-2 when possible), 'direct' (always the DFT matrix) or
            'pad' (zero-pad H and W to the next power of two first; forward only)

    Returns:
        Complex array [..., H', W']
    """
    if mode not in FFT_MODES:
        raise ValueError(f"Unknown FFT mode '{mode}', expected one of {FFT_MODES}")
    x = np.asarray(x)
    if x.ndim < 2 or x.shape[-1] == 0 or x.shape[-2] == 0:
        raise ShapeError(f"FFT needs a non-empty [..., H, W] input, got {list(x.shape)}")
    if mode == "pad" and not inverse:
        x = _zero_pad_pow2(x)
    x = x.astype(np.complex128)
    out = _transform_last_axis(x, inverse, mode)
    out = np.swapaxes(_transform_last_axis(np.swapaxes(out, -1, -2), inverse, mode), -1, -2)
    if inverse:
        out = out / (x.shape[-1] * x.shape[-2])
    return out


def _zero_pad_pow2(x: np.ndarray) -> np.ndarray:
    h, w = x.shape[-2:]
    widths = [(0, 0)] * (x.ndim - 2) + [(0, next_power_of_two(h) - h), (0, next_power_of_two(w) - w)]
    return np.pad(x, widths)


def fft2(x: Tensor, mode: str = "auto") -> Tensor:
    """
    Differentiable forward DFT of a real tensor.

    Args:
        x: Real tensor [..., H, W]
        mode: See dft2

    Returns:
        Tensor [2, ..., H', W'] holding the real plane at index 0 and the imaginary plane at 1
    """
    x = as_tensor(x)
    spec = dft2(x.data, mode=mode)
    h, w = x.shape[-2:]
    hp, wp = spec.shape[-2:]

    def backward(g):
        # Re(A^H G) with A the forward DFT, i.e. Re(H·W · ifft2(G))
        grad = dft2(g[0] + 1j * g[1], inverse=True, mode="direct" if mode == "direct" else "auto")
        grad = (grad * (hp * wp)).real
        return (grad[..., :h, :w],)

    data = np.stack([spec.real, spec.imag]).astype(x.dtype)
    return Tensor.from_op("fft2", data, (x,), backward)


def ifft2(re: Tensor, im: Tensor, mode: str = "auto") -> Tensor:
    """
    Differentiable inverse DFT.

    Returns:
        Tensor [2, ..., H, W] (real plane, imaginary plane)
    """
    re, im = as_tensor(re), as_tensor(im)
    if re.shape != im.shape:
        raise ShapeError(f"Real plane {list(re.shape)} and imaginary plane {list(im.shape)} differ")
    inner_mode = "direct" if mode == "direct" else "auto"
    out = dft2(re.data + 1j * im.data, inverse=True, mode=inner_mode)
    h, w = re.shape[-2:]

    def backward(g):
        grad = dft2(g[0] + 1j * g[1], mode=inner_mode) / (h * w)
        return grad.real, grad.imag

    data = np.stack([out.real, out.imag]).astype(re.dtype)
    return Tensor.from_op("ifft2", data, (re, im), backward)
