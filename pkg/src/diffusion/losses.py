"""
Training objectives for the two phases.

Phase 1 trains the noise predictor and the log-variance head jointly with a
heteroscedastic objective. Phase 2 keeps the uncertainty head frozen, uses its
output only as a fixed per-pixel weight, and adds the frequency loss between
the constructed X_{t-1} and the clean image.
"""
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from src.autodiff import Tensor, as_tensor
from src.errors import ContractError
from src.frequency import FreqLossConfig, freq_loss
from .process import q_sample, reverse_mean_step
from .rng import StepRng
from .schedule import NoiseSchedule

RngLike = Union[StepRng, np.random.Generator]


@dataclass
class LossTerms:
    """Total loss and its components (noise term, frequency term)."""
    total: Tensor
    noise: Tensor
    freq: Optional[Tensor] = None


def heteroscedastic_nll(eps: Tensor, eps_hat: Tensor, u: Tensor) -> Tensor:
    """mean(exp(-u) · (eps - eps_hat)² + u)."""
    diff = as_tensor(eps) - eps_hat
    return ((-u).exp() * diff * diff + u).mean()


def draw_noise(x0: Tensor, sched: NoiseSchedule, rng: RngLike):
    """Uniform t in [1, T] per batch element and standard normal noise."""
    rng = rng if isinstance(rng, StepRng) else StepRng.from_generator(rng)
    batch = x0.shape[0] if x0.ndim == 4 else None
    t = rng.timestep.integers(1, sched.T + 1, size=batch)
    eps = Tensor(rng.noise.standard_normal(x0.shape), dtype=x0.dtype)
    return t, eps


def _alpha_bar_arg(t, sched: NoiseSchedule):
    value = sched.alpha_bar(t)
    return float(value) if np.ndim(value) == 0 else value


def phase1_terms(net: Callable, x0: Tensor, y: Tensor, sched: NoiseSchedule, rng: RngLike) -> LossTerms:
    x0, y = as_tensor(x0), as_tensor(y)
    t, eps = draw_noise(x0, sched, rng)
    x_t = q_sample(x0, t, eps, sched)
    eps_hat, u = net(x_t, y, _alpha_bar_arg(t, sched))
    loss = heteroscedastic_nll(eps, eps_hat, u)
    return LossTerms(total=loss, noise=loss)


def phase1_loss(net: Callable, x0: Tensor, y: Tensor, sched: NoiseSchedule, rng: RngLike) -> Tensor:
    """
    Heteroscedastic noise-prediction loss.

    Args:
        net: Denoiser (x_t, y, ᾱ_t) -> (eps_hat, u)
        x0: Normal-light images, sym-normalized
        y: Low-light conditions, sym-normalized
        sched: Noise schedule
        rng: Step generators (or one generator for both draws)

    Returns:
        Scalar loss
    """
    return phase1_terms(net, x0, y, sched, rng).total


def phase2_terms(
    net: Callable,
    x0: Tensor,
    y: Tensor,
    sched: NoiseSchedule,
    freq_cfg: FreqLossConfig,
    rng: RngLike,
) -> LossTerms:
    if not getattr(net, "uncertainty_frozen", lambda: False)():
        raise ContractError("Phase-2 loss requires a frozen uncertainty head; call freeze_uncertainty first")
    x0, y = as_tensor(x0), as_tensor(y)
    t, eps = draw_noise(x0, sched, rng)
    x_t = q_sample(x0, t, eps, sched)
    eps_hat, u = net(x_t, y, _alpha_bar_arg(t, sched))
    diff = eps - eps_hat
    noise = ((-u.detach()).exp() * diff * diff).mean()

    if not freq_cfg.enabled or (freq_cfg.gamma_amp == 0 and freq_cfg.gamma_pha == 0):
        return LossTerms(total=noise, noise=noise)

    if freq_cfg.t_draw == "fixed":
        t_f = np.full_like(np.asarray(t), sched.check_timestep(freq_cfg.fixed_t))
        x_tf = q_sample(x0, t_f, eps, sched)
        eps_hat_f, _ = net(x_tf, y, _alpha_bar_arg(t_f, sched))
        x_prev = reverse_mean_step(x_tf, eps_hat_f, t_f, sched)
    else:
        x_prev = reverse_mean_step(x_t, eps_hat, t, sched)
    freq = freq_loss(x_prev, x0, freq_cfg)
    return LossTerms(total=noise + freq, noise=noise, freq=freq)


def phase2_loss(
    net: Callable,
    x0: Tensor,
    y: Tensor,
    sched: NoiseSchedule,
    freq_cfg: FreqLossConfig,
    rng: RngLike,
) -> Tensor:
    """
    Frozen-weight noise loss plus the frequency loss on X_{t-1}.

    Raises:
        ContractError: if the uncertainty head is not frozen
    """
    return phase2_terms(net, x0, y, sched, freq_cfg, rng).total
