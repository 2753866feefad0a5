from .schedule import NoiseSchedule, make_schedule, SCHEDULE_KINDS
from .process import q_sample, reverse_mean_step, reverse_coefficients
from .rng import RngStreams, StepRng, STREAMS
from .sampler import sample
from .losses import (
    LossTerms, heteroscedastic_nll, phase1_loss, phase1_terms, phase2_loss, phase2_terms,
)
from .enhance import Enhancer, pad_to_multiple, crop_to

__all__ = [
    'NoiseSchedule', 'make_schedule', 'SCHEDULE_KINDS', 'q_sample', 'reverse_mean_step',
    'reverse_coefficients', 'RngStreams', 'StepRng', 'STREAMS', 'sample', 'LossTerms',
    'heteroscedastic_nll', 'phase1_loss', 'phase1_terms', 'phase2_loss', 'phase2_terms',
    'Enhancer', 'pad_to_multiple', 'crop_to',
]
