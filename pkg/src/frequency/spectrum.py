"""Amplitude/phase decomposition of the 2-D spectrum."""
from dataclasses import dataclass

import numpy as np

from src.autodiff import Tensor, atan2, hypot
from .fft import dft2, fft2


@dataclass
class Spectrum:
    """Polar form amp · exp(j·pha) of a DFT; amp >= 0, pha in (-pi, pi]."""
    amp: Tensor
    pha: Tensor


def spectrum(x: Tensor, mode: str = "auto") -> Spectrum:
    """
    Amplitude and phase planes of fft2(x).

    The phase gradient is zeroed at bins whose magnitude is below 1e-8.
    """
    planes = fft2(x, mode=mode)
    re, im = planes[0], planes[1]
    return Spectrum(amp=hypot(re, im), pha=atan2(im, re))


def inverse_spectrum(spec: Spectrum) -> np.ndarray:
    """Real part of the inverse DFT of amp · exp(j·pha)."""
    planes = spec.amp.data * np.exp(1j * spec.pha.data)
    return dft2(planes, inverse=True).real
