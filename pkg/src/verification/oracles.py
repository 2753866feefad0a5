"""Slow, literal reference implementations used to cross-check the fast paths."""
import numpy as np

from src.autodiff import Tensor, as_tensor
from src.diffusion import NoiseSchedule
from src.kan import KanLayer


def naive_dft2(x: np.ndarray) -> np.ndarray:
    """F[u, v] = sum_{m,n} x[m, n] exp(-2πj (um/H + vn/W)) for a single [H, W] plane."""
    h, w = x.shape
    m = np.arange(h)[:, None]
    n = np.arange(w)[None, :]
    out = np.zeros((h, w), dtype=np.complex128)
    for u in range(h):
        for v in range(w):
            out[u, v] = np.sum(x * np.exp(-2j * np.pi * (u * m / h + v * n / w)))
    return out


def de_boor_basis(x: float, knots: np.ndarray, i: int, k: int) -> float:
    """Cox-de Boor recursion for B_{i,k}(x), written as the textbook recursion."""
    if k == 0:
        return 1.0 if knots[i] <= x < knots[i + 1] else 0.0
    left_den = knots[i + k] - knots[i]
    right_den = knots[i + k + 1] - knots[i + 1]
    left = 0.0 if left_den == 0 else (x - knots[i]) / left_den * de_boor_basis(x, knots, i, k - 1)
    right = 0.0 if right_den == 0 else (knots[i + k + 1] - x) / right_den * de_boor_basis(x, knots, i + 1, k - 1)
    return left + right


def naive_silu(x: float) -> float:
    return x / (1.0 + np.exp(-x))


def naive_kan_forward(layer: KanLayer, tokens: np.ndarray) -> np.ndarray:
    """Triple loop over tokens, outputs and inputs summing each edge activation."""
    grid = layer.grid
    knots = grid.knots
    nb = grid.num_basis
    coef = layer.coefficients.data
    base_w = layer.base_weight.data
    spline_w = layer.spline_weight.data
    n_tok = tokens.shape[0]
    out = np.zeros((n_tok, layer.n_out))
    for t in range(n_tok):
        for q in range(layer.n_out):
            acc = 0.0
            for p in range(layer.n_in):
                x = float(tokens[t, p])
                xc = min(max(x, grid.t_min), grid.t_max)
                # the right domain edge belongs to the last interval
                if xc >= grid.t_max:
                    xc = np.nextafter(grid.t_max, grid.t_min)
                spline = sum(coef[q, p, j] * de_boor_basis(xc, knots, j, grid.order) for j in range(nb))
                acc += base_w[q, p] * naive_silu(x) + spline_w[q, p] * spline
            out[t, q] = acc
    return out


class TeacherForcedNet:
    """
    Returns the noise consistent with a known clean image: (x_t - sqrt(ᾱ)·x0) / sqrt(1-ᾱ).

    Feeding it to the reverse loop isolates the step algebra from model quality.
    """

    def __init__(self, x0: np.ndarray):
        self.x0 = np.asarray(x0, dtype=np.float64)

    def __call__(self, x_t: Tensor, y: Tensor, alpha_bar: float):
        x_t = as_tensor(x_t)
        ab = float(alpha_bar)
        eps = (x_t.data - np.sqrt(ab) * self.x0) / np.sqrt(1.0 - ab)
        return Tensor(eps, dtype=x_t.dtype), Tensor(np.zeros_like(x_t.data))


def sign_flipped_reverse_step(x_t: Tensor, eps_hat: Tensor, t, sched: NoiseSchedule) -> Tensor:
    """Reverse step with the noise coefficient's sign inverted; a negative control."""
    alpha = float(sched.alpha(t))
    alpha_bar = float(sched.alpha_bar(t))
    coef = (1.0 - alpha) / np.sqrt(1.0 - alpha_bar)
    return (as_tensor(x_t) + as_tensor(eps_hat) * coef) * (1.0 / np.sqrt(alpha))
