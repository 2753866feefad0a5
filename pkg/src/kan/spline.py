"""
Uniform B-spline grids and basis evaluation.

The basis is evaluated with a vectorized Cox-de Boor recursion. Inputs are
clamped to the grid domain; intervals are half-open [t_j, t_{j+1}) except the
last, which is closed so that x = t_max still lies inside the domain.
"""
import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from src.autodiff import Tensor, as_tensor
from src.errors import GridError, ShapeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplineGrid:
    """Uniform knot grid over [t_min, t_max] with ``order`` extra knots per side."""
    t_min: float = -1.0
    t_max: float = 1.0
    grid_size: int = 5
    order: int = 3

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise GridError(f"Degenerate spline domain [{self.t_min}, {self.t_max}]")
        if self.grid_size < 1:
            raise GridError(f"grid_size must be >= 1, got {self.grid_size}")
        if self.order < 1:
            raise GridError(f"order must be >= 1, got {self.order}")

    @property
    def step(self) -> float:
        return (self.t_max - self.t_min) / self.grid_size

    @property
    def num_basis(self) -> int:
        return self.grid_size + self.order

    @property
    def knots(self) -> np.ndarray:
        i = np.arange(self.grid_size + 2 * self.order + 1, dtype=np.float64)
        return self.t_min + (i - self.order) * self.step


def _interval_index(x: np.ndarray, grid: SplineGrid) -> np.ndarray:
    idx = np.floor((x - grid.t_min) / grid.step).astype(np.int64) + grid.order
    return np.clip(idx, grid.order, grid.grid_size + grid.order - 1)


def _cox_de_boor(x: np.ndarray, grid: SplineGrid, degree: int) -> np.ndarray:
    """Basis of the given degree at already-clamped x; shape [..., G + 2k - degree]."""
    t = grid.knots.astype(x.dtype)
    n_intervals = len(t) - 1
    basis = np.zeros(x.shape + (n_intervals,), dtype=x.dtype)
    np.put_along_axis(basis, _interval_index(x, grid)[..., None], 1.0, axis=-1)
    xe = x[..., None]
    for d in range(1, degree + 1):
        left = (xe - t[: -(d + 1)]) / (t[d:-1] - t[: -(d + 1)])
        right = (t[d + 1:] - xe) / (t[d + 1:] - t[1:-d])
        basis = left * basis[..., :-1] + right * basis[..., 1:]
    return basis


def bspline_basis_values(x: Union[np.ndarray, float], grid: SplineGrid) -> np.ndarray:
    """
    Evaluate all B_j(x) for j = 0..G+k-1.

    Args:
        x: Array of any shape (values outside the domain are clamped)
        grid: Spline grid

    Returns:
        Array of shape x.shape + (G + k,)
    """
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(np.float64)
    xc = np.clip(x, grid.t_min, grid.t_max)
    return _cox_de_boor(xc, grid, grid.order)


def bspline_basis_derivatives(x: Union[np.ndarray, float], grid: SplineGrid) -> np.ndarray:
    """dB_j/dx, zero outside the domain where the input is clamped."""
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(np.float64)
    k = grid.order
    xc = np.clip(x, grid.t_min, grid.t_max)
    t = grid.knots.astype(x.dtype)
    lower = _cox_de_boor(xc, grid, k - 1)
    deriv = k * (
        lower[..., :-1] / (t[k:-1] - t[: -(k + 1)])
        - lower[..., 1:] / (t[k + 1:] - t[1:-k])
    )
    inside = (x >= grid.t_min) & (x <= grid.t_max)
    return deriv * inside[..., None]


def bspline_basis(x: Tensor, grid: SplineGrid) -> Tensor:
    """
    Differentiable basis evaluation.

    Args:
        x: Tensor of any shape
        grid: Spline grid

    Returns:
        Tensor of shape x.shape + (G + k,); the gradient flows to x
    """
    x = as_tensor(x)
    values = bspline_basis_values(x.data, grid)
    xd = x.data

    def backward(g):
        return ((g * bspline_basis_derivatives(xd, grid)).sum(axis=-1),)

    return Tensor.from_op("bspline_basis", values, (x,), backward)


def fit_spline_coefficients(x: np.ndarray, y: np.ndarray, grid: SplineGrid) -> np.ndarray:
    """
    Least-squares coefficients c with sum_j c_j B_j(x) ≈ y.

    Args:
        x: Sample locations, shape [S]
        y: Target values, shape [S]
        grid: Spline grid

    Returns:
        Coefficients of shape [G + k]
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise ShapeError(f"Sample shapes differ: x {list(x.shape)}, y {list(y.shape)}")
    design = bspline_basis_values(x, grid)
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < grid.num_basis:
        logger.debug("Spline fit is rank deficient (%d < %d)", rank, grid.num_basis)
    return coef
