"""Adam optimizer."""
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .tensor import Parameter


@dataclass
class AdamState:
    """Per-parameter first/second moments and step counts, keyed by name."""
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: Dict[str, int] = field(default_factory=dict)


def adam_step(
    params: Sequence[Parameter],
    grads: Sequence[Optional[np.ndarray]],
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
    state: AdamState,
) -> AdamState:
    """
    Apply one bias-corrected Adam update in place.

    Frozen parameters and parameters without a gradient are left untouched.

    Args:
        params: Parameters to update (their ``name`` keys the state)
        grads: Gradient for each parameter, or None
        lr: Learning rate
        beta1: First-moment decay
        beta2: Second-moment decay
        eps: Denominator offset
        state: Moment buffers, updated and returned

    Returns:
        The updated state
    """
    for p, g in zip(params, grads):
        if p.frozen or g is None:
            continue
        key = p.name or str(id(p))
        g = np.asarray(g, dtype=np.float64)
        m = state.m.get(key)
        v = state.v.get(key)
        if m is None:
            m = np.zeros(p.shape, dtype=np.float64)
            v = np.zeros(p.shape, dtype=np.float64)
        t = state.t.get(key, 0) + 1
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        p.data = (p.data - lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.dtype)
        state.m[key], state.v[key], state.t[key] = m, v, t
    return state


class Adam:
    """Adam over a module's named parameters."""

    def __init__(
        self,
        named_params: Iterable[Tuple[str, Parameter]],
        lr: float = 1e-4,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        """
        Initialize optimizer.

        Args:
            named_params: (name, parameter) pairs, e.g. ``model.named_parameters()``
            lr: Learning rate
            betas: (beta1, beta2) moment decays
            eps: Denominator offset
        """
        self.params = []
        for name, p in named_params:
            p.name = name
            self.params.append(p)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.state = AdamState()

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        adam_step(
            self.params, [p.grad for p in self.params],
            self.lr, self.betas[0], self.betas[1], self.eps, self.state,
        )

    def state_arrays(self) -> Dict[str, np.ndarray]:
        """Flatten moments for checkpointing."""
        arrays = {}
        for key, m in self.state.m.items():
            arrays[f"adam.m/{key}"] = m
            arrays[f"adam.v/{key}"] = self.state.v[key]
        return arrays

    def load_state_arrays(self, arrays: Dict[str, np.ndarray], steps: Dict[str, int]) -> None:
        state = AdamState()
        for name, value in arrays.items():
            kind, _, key = name.partition("/")
            if kind == "adam.m":
                state.m[key] = np.asarray(value, dtype=np.float64)
            elif kind == "adam.v":
                state.v[key] = np.asarray(value, dtype=np.float64)
        state.t = {k: int(v) for k, v in steps.items() if k in state.m}
        self.state = state
