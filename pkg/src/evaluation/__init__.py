from .metrics import Evaluator, MetricReport, psnr, ssim
from .baseline import BaselineEnhancer, STRATEGIES

__all__ = ['Evaluator', 'MetricReport', 'psnr', 'ssim', 'BaselineEnhancer', 'STRATEGIES']
