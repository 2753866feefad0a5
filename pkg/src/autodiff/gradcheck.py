"""Central finite-difference gradient checks."""
from typing import Callable, Optional, Sequence

import numpy as np

from .tensor import Tensor, no_grad


def numerical_gradient(
    fn: Callable[[], Tensor],
    tensor: Tensor,
    h: float = 1e-5,
    indices: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """
    Estimate d fn() / d tensor by central differences.

    Args:
        fn: Closure returning a scalar tensor; re-evaluated for every perturbation
        tensor: Tensor whose entries are perturbed in place
        h: Step size
        indices: Flat indices to perturb (all entries when None)

    Returns:
        Array shaped like ``tensor`` (entries outside ``indices`` are zero)
    """
    flat = tensor.data.reshape(-1)
    grad = np.zeros(flat.shape, dtype=np.float64)
    entries = range(flat.size) if indices is None else indices
    with no_grad():
        for i in entries:
            original = flat[i]
            flat[i] = original + h
            plus = fn().item()
            flat[i] = original - h
            minus = fn().item()
            flat[i] = original
            grad[i] = (plus - minus) / (2.0 * h)
    return grad.reshape(tensor.shape)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Norm-wise relative error ||a - n|| / max(||a||, ||n||)."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


def check_gradients(
    fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    h: float = 1e-5,
    max_entries: Optional[int] = None,
    seed: int = 0,
) -> float:
    """
    Compare analytic and numerical gradients.

    Args:
        fn: Closure building a scalar loss from ``tensors``
        tensors: Leaves with ``requires_grad`` set
        h: Finite-difference step
        max_entries: Check at most this many random entries per tensor
        seed: Seed for the entry selection

    Returns:
        Worst relative error over all tensors
    """
    for t in tensors:
        t.grad = None
    fn().backward()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t in tensors:
        analytic = np.zeros(t.shape) if t.grad is None else np.asarray(t.grad, dtype=np.float64)
        if max_entries is not None and t.size > max_entries:
            idx = rng.choice(t.size, size=max_entries, replace=False)
            numeric = numerical_gradient(fn, t, h, idx).reshape(-1)[idx]
            analytic = analytic.reshape(-1)[idx]
        else:
            numeric = numerical_gradient(fn, t, h)
        worst = max(worst, relative_error(analytic, numeric))
    return worst
