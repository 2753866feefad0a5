"""
KAN layers: a grid of learnable univariate activations.

Each edge (q, p) carries
    phi_{q,p}(x) = base_weight[q,p] * silu(x) + spline_weight[q,p] * sum_j c[q,p,j] B_j(x)
and output q of the layer sums phi_{q,p}(input_p) over p.
"""
from typing import Optional

import numpy as np

from src.autodiff import Module, Parameter, Tensor, as_tensor
from src.errors import ShapeError
from .spline import SplineGrid, bspline_basis


class SplineActivation(Module):
    """A single learnable activation phi(x)."""

    def __init__(
        self,
        grid: SplineGrid,
        coefficients: Optional[np.ndarray] = None,
        base_weight: float = 1.0,
        spline_weight: float = 1.0,
        dtype=None,
    ):
        """
        Initialize activation.

        Args:
            grid: Spline grid shared with the owning layer
            coefficients: Initial B-spline weights [G+k] (zeros when None)
            base_weight: Weight of the silu branch
            spline_weight: Weight of the spline branch
        """
        self.grid = grid
        if coefficients is None:
            coefficients = np.zeros(grid.num_basis)
        coefficients = np.asarray(coefficients)
        if coefficients.shape != (grid.num_basis,):
            raise ShapeError(
                f"Expected {grid.num_basis} spline coefficients, got shape {list(coefficients.shape)}"
            )
        self.coefficients = Parameter(coefficients, dtype=dtype)
        self.base_weight = Parameter(np.asarray(base_weight), dtype=dtype)
        self.spline_weight = Parameter(np.asarray(spline_weight), dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return spline_activation_eval(self, x)


def spline_activation_eval(phi: SplineActivation, x: Tensor) -> Tensor:
    """Apply phi elementwise to a tensor of any shape."""
    x = as_tensor(x)
    nb = phi.grid.num_basis
    basis = bspline_basis(x, phi.grid).reshape(-1, nb)
    spline = (basis @ phi.coefficients.reshape(nb, 1)).reshape(x.shape)
    return phi.base_weight * x.silu() + phi.spline_weight * spline


class KanLayer(Module):
    """n_in -> n_out layer of SplineActivations stored as stacked arrays."""

    def __init__(
        self,
        n_in: int,
        n_out: int,
        grid: Optional[SplineGrid] = None,
        rng: Optional[np.random.Generator] = None,
    ):
        """
        Initialize layer.

        Args:
            n_in: Input width
            n_out: Output width
            grid: Spline grid (G=5, k=3 over [-1, 1] by default)
            rng: Generator for the initial weights
        """
        if n_in < 1 or n_out < 1:
            raise ValueError(f"KanLayer dimensions must be positive, got {n_in}->{n_out}")
        self.n_in = n_in
        self.n_out = n_out
        self.grid = grid or SplineGrid()
        rng = rng or np.random.default_rng()

        nb = self.grid.num_basis
        sigma = 0.1 / np.sqrt(self.grid.grid_size)
        self.coefficients = Parameter(rng.normal(0.0, sigma, size=(n_out, n_in, nb)))
        self.base_weight = Parameter(rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_out, n_in)))
        self.spline_weight = Parameter(np.ones((n_out, n_in)))

    def forward(self, tokens: Tensor) -> Tensor:
        return kan_layer_forward(self, tokens)

    def activation(self, q: int, p: int) -> SplineActivation:
        """Detached copy of the activation on edge p -> q."""
        return SplineActivation(
            self.grid,
            coefficients=self.coefficients.data[q, p].copy(),
            base_weight=float(self.base_weight.data[q, p]),
            spline_weight=float(self.spline_weight.data[q, p]),
            dtype=self.coefficients.dtype,
        )


def kan_layer_forward(layer: KanLayer, tokens: Tensor) -> Tensor:
    """
    out[t, q] = sum_p phi_{q,p}(tokens[t, p]).

    Args:
        layer: KAN layer
        tokens: Input of shape [T, n_in]

    Returns:
        Output of shape [T, n_out]
    """
    tokens = as_tensor(tokens)
    if tokens.ndim != 2 or tokens.shape[1] != layer.n_in:
        raise ShapeError(
            f"KanLayer expects [T, {layer.n_in}] tokens, got {list(tokens.shape)}"
        )
    n_tok = tokens.shape[0]
    nb = layer.grid.num_basis

    base = tokens.silu() @ layer.base_weight.T
    basis = bspline_basis(tokens, layer.grid).reshape(n_tok, layer.n_in * nb)
    weights = layer.spline_weight.reshape(layer.n_out, layer.n_in, 1) * layer.coefficients
    spline = basis @ weights.reshape(layer.n_out, layer.n_in * nb).T
    return base + spline


def init_kan_layer(n_in: int, n_out: int, grid: Optional[SplineGrid] = None, seed: int = 0) -> KanLayer:
    """Build a KanLayer whose weights are a deterministic function of ``seed``."""
    return KanLayer(n_in, n_out, grid, rng=np.random.default_rng(seed))
