"""Functional operations on tensors."""
from typing import Sequence

import numpy as np

from src.errors import ShapeError
from .tensor import Tensor, as_tensor

BINARY_OPS = ("add", "sub", "mul", "div")
UNARY_OPS = ("neg", "exp", "log", "sqrt", "abs", "sin", "cos", "silu")

# Below this magnitude the phase of a complex bin is undefined
PHASE_EPS = 1e-8


def elementwise(op: str, a, b=None) -> Tensor:
    """
    Apply a tagged elementwise operation.

    Args:
        op: One of BINARY_OPS or UNARY_OPS
        a: First operand
        b: Second operand (binary ops only)

    Returns:
        Result with the broadcast shape of the operands
    """
    a = as_tensor(a)
    if op in BINARY_OPS:
        if b is None:
            raise ValueError(f"Operation '{op}' needs two operands")
        b = as_tensor(b, dtype=a.dtype)
        if op == "add":
            return a + b
        if op == "sub":
            return a - b
        if op == "mul":
            return a * b
        return a / b
    if op in UNARY_OPS:
        if b is not None:
            raise ValueError(f"Operation '{op}' takes a single operand")
        if op == "neg":
            return -a
        return getattr(a, op)()
    raise ValueError(f"Unknown elementwise operation: {op}")


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Join tensors along an existing axis."""
    tensors = [as_tensor(t) for t in tensors]
    ndim = tensors[0].ndim
    axis = axis % ndim
    for t in tensors[1:]:
        if t.ndim != ndim or any(
            t.shape[d] != tensors[0].shape[d] for d in range(ndim) if d != axis
        ):
            raise ShapeError(
                f"Cannot concatenate shapes {[list(x.shape) for x in tensors]} along axis {axis}"
            )
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    data = np.concatenate([t.data for t in tensors], axis=axis)
    return Tensor.from_op("concat", data, tensors, backward)


def pad2d(x: Tensor, padding: int, mode: str = "edge") -> Tensor:
    """
    Pad the last two axes.

    Args:
        x: Tensor of shape [..., H, W]
        padding: Border width on every side
        mode: 'edge' (replicate) or 'zeros'
    """
    x = as_tensor(x)
    p = int(padding)
    if p == 0:
        return x
    widths = [(0, 0)] * (x.ndim - 2) + [(p, p), (p, p)]
    if mode == "edge":
        data = np.pad(x.data, widths, mode="edge")
    elif mode == "zeros":
        data = np.pad(x.data, widths, mode="constant")
    else:
        raise ValueError(f"Unknown padding mode: {mode}")

    def backward(g):
        if mode == "zeros":
            return (g[..., p:-p, p:-p],)
        g = g.copy()
        g[..., p, :] += g[..., :p, :].sum(axis=-2)
        g[..., -p - 1, :] += g[..., -p:, :].sum(axis=-2)
        g = g[..., p:-p, :]
        g[..., :, p] += g[..., :, :p].sum(axis=-1)
        g[..., :, -p - 1] += g[..., :, -p:].sum(axis=-1)
        return (g[..., :, p:-p],)

    return Tensor.from_op("pad2d", data, (x,), backward)


def upsample_nearest2x(x: Tensor) -> Tensor:
    """Nearest-neighbour ×2 upsampling of the last two axes."""
    x = as_tensor(x)
    h, w = x.shape[-2:]
    lead = x.shape[:-2]
    data = np.repeat(np.repeat(x.data, 2, axis=-2), 2, axis=-1)

    def backward(g):
        return (g.reshape(*lead, h, 2, w, 2).sum(axis=(-3, -1)),)

    return Tensor.from_op("upsample2x", data, (x,), backward)


def atan2(y: Tensor, x: Tensor) -> Tensor:
    """
    Angle of (x, y) in (-pi, pi].

    The gradient is zeroed where the magnitude is below PHASE_EPS.
    """
    y, x = as_tensor(y), as_tensor(x)
    yd, xd = y.data, x.data
    angle = np.arctan2(yd, xd)
    angle = np.where(angle <= -np.pi, np.pi, angle)
    r2 = xd * xd + yd * yd
    defined = r2 >= PHASE_EPS * PHASE_EPS
    safe = np.where(defined, r2, 1.0)

    def backward(g):
        gy = np.where(defined, g * xd / safe, 0.0)
        gx = np.where(defined, -g * yd / safe, 0.0)
        return gy, gx

    return Tensor.from_op("atan2", angle, (y, x), backward)


def hypot(a: Tensor, b: Tensor) -> Tensor:
    """Euclidean magnitude sqrt(a² + b²) with a masked gradient at the origin."""
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    r = np.hypot(ad, bd)
    defined = r >= PHASE_EPS
    safe = np.where(defined, r, 1.0)

    def backward(g):
        return np.where(defined, g * ad / safe, 0.0), np.where(defined, g * bd / safe, 0.0)

    return Tensor.from_op("hypot", r, (a, b), backward)


def wrap_angle(x: Tensor) -> Tensor:
    """Map angles into [-pi, pi); locally the identity, so the gradient is 1."""
    x = as_tensor(x)
    data = np.mod(x.data + np.pi, 2.0 * np.pi) - np.pi
    return Tensor.from_op("wrap_angle", data, (x,), lambda g: (g,))

