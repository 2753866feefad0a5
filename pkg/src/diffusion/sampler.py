"""Ancestral sampling loop."""
import logging
from typing import Callable, Optional, Union

import numpy as np
from tqdm import tqdm

from src.autodiff import Tensor, as_tensor, no_grad
from .process import reverse_mean_step
from .rng import RngStreams
from .schedule import NoiseSchedule

logger = logging.getLogger(__name__)

StepFn = Callable[[Tensor, Tensor, int, NoiseSchedule], Tensor]


def sample(
    net: Callable,
    y: Tensor,
    sched: NoiseSchedule,
    seed: Union[int, np.random.Generator] = 0,
    stochastic: bool = False,
    x_init: Optional[Tensor] = None,
    step_fn: StepFn = reverse_mean_step,
    progress: bool = False,
) -> Tensor:
    """
    Iterate the reverse process from t = T down to 1.

    Args:
        net: Callable (x_t, y, ᾱ_t) -> (eps_hat, u)
        y: Normalized low-light condition, [C,H,W] or [N,C,H,W]
        sched: Noise schedule
        seed: Run seed (the 'sample' substream is used) or a generator
        stochastic: Add sqrt(β_t)·z for t > 1
        x_init: Starting x_T; drawn from N(0, I) when None
        step_fn: Reverse mean construction
        progress: Show a progress bar over timesteps

    Returns:
        x_0 estimate clipped to [-1, 1]
    """
    y = as_tensor(y)
    rng = seed if isinstance(seed, np.random.Generator) else RngStreams(seed).generator("sample")
    if x_init is None:
        x = Tensor(rng.standard_normal(y.shape), dtype=y.dtype)
    else:
        x = as_tensor(x_init).detach()

    with no_grad():
        steps = range(sched.T, 0, -1)
        for t in tqdm(steps, desc="Sampling", leave=False, disable=not progress):
            eps_hat, _ = net(x, y, float(sched.alpha_bar(t)))
            x = step_fn(x, eps_hat, t, sched)
            if stochastic and t > 1:
                z = rng.standard_normal(y.shape)
                x = x + np.sqrt(sched.beta(t)) * z.astype(x.dtype)
    return x.clamp(-1.0, 1.0)
