"""Frequency-domain perception loss."""
from dataclasses import dataclass
from typing import Optional

from src.autodiff import Tensor, as_tensor, wrap_angle
from src.errors import ShapeError
from .fft import FFT_MODES
from .spectrum import spectrum

T_DRAW_POLICIES = ("shared", "fixed")


@dataclass
class FreqLossConfig:
    """
    Weights and evaluation policy of the frequency term.

    Attributes:
        gamma_amp: Amplitude L1 weight
        gamma_pha: Wrapped phase L1 weight
        enabled: Add the term to the phase-2 loss
        fft_mode: 'auto', 'direct' or 'pad'
        t_draw: 'shared' reuses the noise-loss timestep, 'fixed' uses ``fixed_t``
        fixed_t: Timestep for the 'fixed' policy
    """
    gamma_amp: float = 0.01
    gamma_pha: float = 0.01
    enabled: bool = True
    fft_mode: str = "auto"
    t_draw: str = "shared"
    fixed_t: int = 1

    def __post_init__(self):
        if self.gamma_amp < 0 or self.gamma_pha < 0:
            raise ValueError(
                f"Frequency loss weights must be non-negative, got {self.gamma_amp}, {self.gamma_pha}"
            )
        if self.fft_mode not in FFT_MODES:
            raise ValueError(f"fft_mode must be one of {FFT_MODES}, got '{self.fft_mode}'")
        if self.t_draw not in T_DRAW_POLICIES:
            raise ValueError(f"t_draw must be one of {T_DRAW_POLICIES}, got '{self.t_draw}'")


def freq_loss(x_low: Tensor, x_high: Tensor, cfg: Optional[FreqLossConfig] = None) -> Tensor:
    """
    gamma_amp · mean|amp_low - amp_high| + gamma_pha · mean|wrap(pha_low - pha_high)|.

    Args:
        x_low: Constructed image (receives the gradient)
        x_high: Reference image (treated as a constant)
        cfg: Weights and FFT mode

    Returns:
        Scalar tensor
    """
    cfg = cfg or FreqLossConfig()
    x_low, x_high = as_tensor(x_low), as_tensor(x_high)
    if x_low.shape != x_high.shape:
        raise ShapeError(f"freq_loss inputs differ in shape: {list(x_low.shape)} vs {list(x_high.shape)}")
    low = spectrum(x_low, cfg.fft_mode)
    high = spectrum(x_high.detach(), cfg.fft_mode)
    amp_term = (low.amp - high.amp).abs().mean()
    pha_term = wrap_angle(low.pha - high.pha).abs().mean()
    return amp_term * cfg.gamma_amp + pha_term * cfg.gamma_pha
