from .spline import (
    SplineGrid, bspline_basis, bspline_basis_values, bspline_basis_derivatives,
    fit_spline_coefficients,
)
from .layer import SplineActivation, KanLayer, spline_activation_eval, kan_layer_forward, init_kan_layer
from .block import TokenNorm, KanBlock, kan_block_forward

__all__ = [
    'SplineGrid', 'bspline_basis', 'bspline_basis_values', 'bspline_basis_derivatives',
    'fit_spline_coefficients', 'SplineActivation', 'KanLayer', 'spline_activation_eval',
    'kan_layer_forward', 'init_kan_layer', 'TokenNorm', 'KanBlock', 'kan_block_forward',
]
