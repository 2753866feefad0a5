"""Dense n-dimensional tensors with reverse-mode automatic differentiation."""
import contextlib
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import ContractError, ShapeError

_PRECISIONS = {"f32": np.float32, "f64": np.float64}
_default_dtype = np.float32
_grad_enabled = True

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]
BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


def get_default_dtype() -> type:
    """Return the numpy dtype used for newly created tensors."""
    return _default_dtype


def set_default_dtype(name: str) -> None:
    """
    Set the default precision.

    Args:
        name: 'f32' for training or 'f64' for verification
    """
    global _default_dtype
    if name not in _PRECISIONS:
        raise ValueError(f"Unknown precision '{name}', expected one of {sorted(_PRECISIONS)}")
    _default_dtype = _PRECISIONS[name]


@contextlib.contextmanager
def precision(name: str) -> Iterator[None]:
    """Temporarily switch the default precision."""
    previous = _default_dtype
    set_default_dtype(name)
    try:
        yield
    finally:
        _set_dtype_raw(previous)


def _set_dtype_raw(dtype: type) -> None:
    global _default_dtype
    _default_dtype = dtype


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording (sampling, evaluation, finite differences)."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


def is_grad_enabled() -> bool:
    return _grad_enabled


def broadcast_shape(a: Tuple[int, ...], b: Tuple[int, ...]) -> Tuple[int, ...]:
    """Trailing-dimension broadcast of two shapes."""
    try:
        return tuple(np.broadcast_shapes(a, b))
    except ValueError:
        raise ShapeError(f"Shapes {list(a)} and {list(b)} are not broadcast-compatible") from None


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Node:
    """Record of one differentiable operation inside the current graph."""

    __slots__ = ("op", "parents", "backward_fn")

    def __init__(self, op: str, parents: Tuple["Tensor", ...], backward_fn: BackwardFn):
        self.op = op
        self.parents = parents
        self.backward_fn = backward_fn


class Tensor:
    """n-dimensional real array with optional gradient tracking."""

    __array_priority__ = 100

    def __init__(self, data: ArrayLike, requires_grad: bool = False, dtype=None):
        """
        Initialize tensor.

        Args:
            data: Array-like payload (copied only when a dtype cast is needed)
            requires_grad: Whether gradients should flow into this tensor
            dtype: Explicit numpy dtype; floating arrays keep their dtype otherwise
        """
        if isinstance(data, Tensor):
            data = data.data
        if dtype is None:
            if isinstance(data, np.ndarray) and np.issubdtype(data.dtype, np.floating):
                dtype = data.dtype
            else:
                dtype = _default_dtype
        self.data: np.ndarray = np.asarray(data, dtype=dtype)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.node: Optional[Node] = None

    # ------------------------------------------------------------------ basics

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, dtype=self.data.dtype)

    def __repr__(self) -> str:
        return f"Tensor(shape={list(self.shape)}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    def __len__(self) -> int:
        return self.shape[0]

    @staticmethod
    def from_op(op: str, data: np.ndarray, parents: Sequence["Tensor"], backward_fn: BackwardFn) -> "Tensor":
        """Wrap an op result and record it when any parent is tracked."""
        out = Tensor(data, dtype=data.dtype)
        if _grad_enabled and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out.node = Node(op, tuple(parents), backward_fn)
        return out

    def _lift(self, other: ArrayLike) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.dtype), dtype=self.dtype)

    # ------------------------------------------------------------- elementwise

    def __add__(self, other: ArrayLike) -> "Tensor":
        other = self._lift(other)
        broadcast_shape(self.shape, other.shape)
        a_shape, b_shape = self.shape, other.shape

        def backward(g):
            return unbroadcast(g, a_shape), unbroadcast(g, b_shape)

        return Tensor.from_op("add", self.data + other.data, (self, other), backward)

    def __radd__(self, other: ArrayLike) -> "Tensor":
        return self._lift(other) + self

    def __sub__(self, other: ArrayLike) -> "Tensor":
        other = self._lift(other)
        broadcast_shape(self.shape, other.shape)
        a_shape, b_shape = self.shape, other.shape

        def backward(g):
            return unbroadcast(g, a_shape), unbroadcast(-g, b_shape)

        return Tensor.from_op("sub", self.data - other.data, (self, other), backward)

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return self._lift(other) - self

    def __mul__(self, other: ArrayLike) -> "Tensor":
        other = self._lift(other)
        broadcast_shape(self.shape, other.shape)
        a, b = self.data, other.data

        def backward(g):
            return unbroadcast(g * b, a.shape), unbroadcast(g * a, b.shape)

        return Tensor.from_op("mul", a * b, (self, other), backward)

    def __rmul__(self, other: ArrayLike) -> "Tensor":
        return self._lift(other) * self

    def __truediv__(self, other: ArrayLike) -> "Tensor":
        other = self._lift(other)
        broadcast_shape(self.shape, other.shape)
        a, b = self.data, other.data

        def backward(g):
            return unbroadcast(g / b, a.shape), unbroadcast(-g * a / (b * b), b.shape)

        return Tensor.from_op("div", a / b, (self, other), backward)

    def __rtruediv__(self, other: ArrayLike) -> "Tensor":
        return self._lift(other) / self

    def __neg__(self) -> "Tensor":
        return Tensor.from_op("neg", -self.data, (self,), lambda g: (-g,))

    def __pow__(self, exponent: float) -> "Tensor":
        if isinstance(exponent, Tensor):
            raise TypeError("Tensor exponents are not supported; use exp/log")
        a = self.data
        p = float(exponent)

        def backward(g):
            return (g * p * a ** (p - 1.0),)

        return Tensor.from_op("pow", a ** p, (self,), backward)

    def exp(self) -> "Tensor":
        out = np.exp(self.data)
        return Tensor.from_op("exp", out, (self,), lambda g: (g * out,))

    def log(self) -> "Tensor":
        a = self.data
        return Tensor.from_op("log", np.log(a), (self,), lambda g: (g / a,))

    def sqrt(self) -> "Tensor":
        out = np.sqrt(self.data)
        return Tensor.from_op("sqrt", out, (self,), lambda g: (g * 0.5 / out,))

    def abs(self) -> "Tensor":
        a = self.data
        return Tensor.from_op("abs", np.abs(a), (self,), lambda g: (g * np.sign(a),))

    def sin(self) -> "Tensor":
        a = self.data
        return Tensor.from_op("sin", np.sin(a), (self,), lambda g: (g * np.cos(a),))

    def cos(self) -> "Tensor":
        a = self.data
        return Tensor.from_op("cos", np.cos(a), (self,), lambda g: (-g * np.sin(a),))

    def sigmoid(self) -> "Tensor":
        out = 0.5 * (1.0 + np.tanh(0.5 * self.data))
        return Tensor.from_op("sigmoid", out, (self,), lambda g: (g * out * (1.0 - out),))

    def silu(self) -> "Tensor":
        a = self.data
        s = 0.5 * (1.0 + np.tanh(0.5 * a))

        def backward(g):
            return (g * s * (1.0 + a * (1.0 - s)),)

        return Tensor.from_op("silu", a * s, (self,), backward)

    def clamp(self, low: float, high: float) -> "Tensor":
        a = self.data
        mask = (a >= low) & (a <= high)
        return Tensor.from_op("clamp", np.clip(a, low, high), (self,), lambda g: (g * mask,))

    # -------------------------------------------------------------- structural

    def matmul(self, other: "Tensor") -> "Tensor":
        other = self._lift(other)
        if self.ndim != 2 or other.ndim != 2:
            raise ShapeError(f"matmul expects 2-D operands, got {list(self.shape)} and {list(other.shape)}")
        if self.shape[1] != other.shape[0]:
            raise ShapeError(
                f"matmul inner dimensions differ: {list(self.shape)} @ {list(other.shape)}"
            )
        a, b = self.data, other.data

        def backward(g):
            return g @ b.T, a.T @ g

        return Tensor.from_op("matmul", a @ b, (self, other), backward)

    __matmul__ = matmul

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        old_shape = self.shape
        try:
            data = self.data.reshape(shape)
        except ValueError:
            raise ShapeError(f"Cannot reshape {list(old_shape)} into {list(shape)}") from None
        return Tensor.from_op("reshape", data, (self,), lambda g: (g.reshape(old_shape),))

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        inverse = tuple(np.argsort(axes))
        return Tensor.from_op(
            "transpose", np.ascontiguousarray(self.data.transpose(axes)), (self,),
            lambda g: (g.transpose(inverse),),
        )

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    def __getitem__(self, index) -> "Tensor":
        in_shape, dtype = self.shape, self.dtype
        basic = _is_basic_index(index)

        def backward(g):
            full = np.zeros(in_shape, dtype=dtype)
            if basic:
                full[index] += g
            else:
                np.add.at(full, index, g)
            return (full,)

        return Tensor.from_op("getitem", np.array(self.data[index]), (self,), backward)

    # -------------------------------------------------------------- reductions

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        in_shape = self.shape
        axes = _normalize_axes(axis, self.ndim)

        def backward(g):
            if not keepdims:
                for ax in axes:
                    g = np.expand_dims(g, ax)
            return (np.broadcast_to(g, in_shape).copy(),)

        data = np.asarray(self.data.sum(axis=axis, keepdims=keepdims), dtype=self.dtype)
        return Tensor.from_op("sum", data, (self,), backward)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        axes = _normalize_axes(axis, self.ndim)
        count = int(np.prod([self.shape[ax] for ax in axes])) if axes else 1
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    # ---------------------------------------------------------------- autodiff

    def backward(self, grad: Optional[np.ndarray] = None, retain_graph: bool = False) -> None:
        """
        Reverse-mode sweep from this tensor.

        Leaves accumulate into ``.grad``; frozen parameters are skipped. The
        operation records are released afterwards unless ``retain_graph``.

        Args:
            grad: Seed gradient; required when this tensor is not a scalar
            retain_graph: Keep the records for another sweep
        """
        if grad is None and self.size != 1:
            raise ContractError(f"backward() needs a scalar loss, got shape {list(self.shape)}")
        if not self.requires_grad:
            raise ContractError("backward() called on a tensor that does not depend on tracked inputs")

        order = self._topological_order()
        seed = np.ones_like(self.data) if grad is None else np.asarray(grad, dtype=self.dtype)
        pending: Dict[int, np.ndarray] = {id(self): seed}

        for tensor in reversed(order):
            g = pending.pop(id(tensor), None)
            if g is None:
                continue
            if tensor.node is None:
                tensor._accumulate(g)
                continue
            parent_grads = tensor.node.backward_fn(g)
            for parent, pg in zip(tensor.node.parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in pending:
                    pending[key] = pending[key] + pg
                else:
                    pending[key] = pg

        if not retain_graph:
            for tensor in order:
                if tensor.node is not None:
                    tensor.node = None
                    tensor.requires_grad = False

    def _accumulate(self, g: np.ndarray) -> None:
        if getattr(self, "frozen", False):
            return
        g = np.asarray(g, dtype=self.dtype).reshape(self.shape)
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad = self.grad + g

    def _topological_order(self) -> List["Tensor"]:
        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(self, False)]
        while stack:
            tensor, expanded = stack.pop()
            if expanded:
                order.append(tensor)
                continue
            if id(tensor) in visited:
                continue
            visited.add(id(tensor))
            stack.append((tensor, True))
            if tensor.node is not None:
                for parent in tensor.node.parents:
                    if parent.requires_grad and id(parent) not in visited:
                        stack.append((parent, False))
        return order

    def zero_grad(self) -> None:
        self.grad = None


class Parameter(Tensor):
    """Learnable tensor with a dotted name and a frozen flag."""

    def __init__(self, data: ArrayLike, name: str = "", frozen: bool = False, dtype=None):
        super().__init__(data, requires_grad=True, dtype=_default_dtype if dtype is None else dtype)
        self.name = name
        self.frozen = frozen

    def __repr__(self) -> str:
        flag = ", frozen" if self.frozen else ""
        return f"Parameter({self.name or '?'}, shape={list(self.shape)}{flag})"


def as_tensor(value: ArrayLike, dtype=None) -> Tensor:
    """Return ``value`` unchanged if it is a Tensor, else wrap it untracked."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, dtype=dtype)


def _normalize_axes(axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(ax % ndim for ax in axis))


def _is_basic_index(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return all(isinstance(i, (int, np.integer, slice)) or i is None or i is Ellipsis for i in items)
