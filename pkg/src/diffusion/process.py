"""Closed-form forward corruption and the reverse posterior-mean step."""
import numpy as np

from src.autodiff import Tensor, as_tensor
from src.errors import ShapeError
from .schedule import NoiseSchedule


def _per_sample(values: np.ndarray, like: Tensor) -> np.ndarray:
    """Broadcast scalar or per-batch coefficients against a [N,C,H,W] tensor."""
    values = np.asarray(values, dtype=like.dtype)
    if values.ndim == 0:
        return values
    if like.ndim != 4 or values.shape[0] != like.shape[0]:
        raise ShapeError(
            f"{values.shape[0]} timesteps do not match a batch of shape {list(like.shape)}"
        )
    return values.reshape(-1, 1, 1, 1)


def q_sample(x0: Tensor, t, eps: Tensor, sched: NoiseSchedule) -> Tensor:
    """
    x_t = sqrt(ᾱ_t) x0 + sqrt(1 - ᾱ_t) eps.

    Args:
        x0: Clean image
        t: Timestep in [0, T] (scalar, or one per batch element); t = 0 returns x0
        eps: Standard normal noise shaped like x0
        sched: Noise schedule

    Raises:
        ScheduleError: t outside [0, T]
        ShapeError: eps and x0 differ in shape
    """
    x0, eps = as_tensor(x0), as_tensor(eps)
    if x0.shape != eps.shape:
        raise ShapeError(f"Noise shape {list(eps.shape)} differs from image shape {list(x0.shape)}")
    alpha_bar = sched.alpha_bar(t)
    signal = _per_sample(np.sqrt(alpha_bar), x0)
    noise = _per_sample(np.sqrt(1.0 - alpha_bar), x0)
    return x0 * signal + eps * noise


def reverse_coefficients(t, sched: NoiseSchedule):
    """(1/sqrt(α_t), (1-α_t)/sqrt(1-ᾱ_t)); the second is 0 wherever α_t = 1."""
    alpha = sched.alpha(t)
    alpha_bar = sched.alpha_bar(t)
    one_minus = 1.0 - alpha_bar
    safe = np.where(one_minus > 0.0, one_minus, 1.0)
    noise_coef = np.where(alpha < 1.0, (1.0 - alpha) / np.sqrt(safe), 0.0)
    return 1.0 / np.sqrt(alpha), noise_coef


def reverse_mean_step(x_t: Tensor, eps_hat: Tensor, t, sched: NoiseSchedule) -> Tensor:
    """
    X_{t-1} = (x_t - (1-α_t)/sqrt(1-ᾱ_t) · eps_hat) / sqrt(α_t).

    Differentiable in both x_t and eps_hat.

    Args:
        x_t: Current sample
        eps_hat: Predicted noise shaped like x_t
        t: Timestep in [1, T] (scalar, or one per batch element)
        sched: Noise schedule
    """
    x_t, eps_hat = as_tensor(x_t), as_tensor(eps_hat)
    if x_t.shape != eps_hat.shape:
        raise ShapeError(f"Predicted noise {list(eps_hat.shape)} differs from x_t {list(x_t.shape)}")
    inv_sqrt_alpha, noise_coef = reverse_coefficients(t, sched)
    scale = _per_sample(inv_sqrt_alpha, x_t)
    eps_scale = _per_sample(inv_sqrt_alpha * noise_coef, x_t)
    return x_t * scale - eps_hat * eps_scale
