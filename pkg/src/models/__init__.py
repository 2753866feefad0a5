from .layers import Linear, Conv2d, GroupNorm, ResBlock, Downsample, Upsample, ConvBlock
from .time_embedding import TimeEmbedding, sinusoidal_embedding
from .denoiser import (
    KanConfig, DenoiserConfig, DenoiserNet, denoise_forward, freeze_uncertainty,
    count_parameters, parameter_breakdown,
)
from .checkpoint import Checkpoint, save_checkpoint, load_checkpoint, restore_weights

__all__ = [
    'Linear', 'Conv2d', 'GroupNorm', 'ResBlock', 'Downsample', 'Upsample', 'ConvBlock',
    'TimeEmbedding', 'sinusoidal_embedding', 'KanConfig', 'DenoiserConfig', 'DenoiserNet',
    'denoise_forward', 'freeze_uncertainty', 'count_parameters',
    'parameter_breakdown', 'Checkpoint', 'save_checkpoint', 'load_checkpoint', 'restore_weights',
]
