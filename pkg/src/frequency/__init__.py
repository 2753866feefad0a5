from .fft import FFT_MODES, dft2, fft2, ifft2, is_power_of_two, next_power_of_two
from .spectrum import Spectrum, spectrum, inverse_spectrum
from .loss import FreqLossConfig, freq_loss

__all__ = [
    'FFT_MODES', 'dft2', 'fft2', 'ifft2', 'is_power_of_two', 'next_power_of_two',
    'Spectrum', 'spectrum', 'inverse_spectrum', 'FreqLossConfig', 'freq_loss',
]
