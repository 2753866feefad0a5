from .checks import (
    Check, CheckContext, CheckResult, CHECKS, LEVELS, run_suite, run_check, select_checks,
    print_report, tiny_denoiser_config, over_seeds, GRAD_SEEDS,
)
from .oracles import (
    TeacherForcedNet, naive_dft2, de_boor_basis, naive_kan_forward, sign_flipped_reverse_step,
)

__all__ = [
    'Check', 'CheckContext', 'CheckResult', 'CHECKS', 'LEVELS', 'run_suite', 'run_check',
    'select_checks', 'print_report', 'tiny_denoiser_config', 'over_seeds', 'GRAD_SEEDS', 'TeacherForcedNet', 'naive_dft2',
    'de_boor_basis', 'naive_kan_forward', 'sign_flipped_reverse_step',
]
