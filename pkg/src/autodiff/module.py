"""Parameter containers in the style of torch.nn.Module."""
from typing import Dict, Iterator, List, Mapping, Tuple

import numpy as np

from src.errors import CheckpointMismatchError
from .tensor import Parameter


class Module:
    """Base class for anything that owns parameters or sub-modules."""

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def named_children(self) -> Iterator[Tuple[str, "Module"]]:
        for name, value in vars(self).items():
            if isinstance(value, Module):
                yield name, value
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield f"{name}.{i}", item

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        """
        Yield (dotted name, parameter) pairs in attribute order.

        Parameter names are stamped on first traversal so optimizer state and
        checkpoints can key on them.
        """
        for name, value in vars(self).items():
            full = f"{prefix}.{name}" if prefix else name
            if isinstance(value, Parameter):
                if not value.name:
                    value.name = full
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(full)
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    sub = f"{full}.{i}"
                    if isinstance(item, Parameter):
                        if not item.name:
                            item.name = sub
                        yield sub, item
                    elif isinstance(item, Module):
                        yield from item.named_parameters(sub)

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def freeze(self) -> None:
        for p in self.parameters():
            p.frozen = True
            p.grad = None

    def unfreeze(self) -> None:
        for p in self.parameters():
            p.frozen = False

    def astype(self, dtype) -> "Module":
        """Cast every parameter in place."""
        for p in self.parameters():
            p.data = p.data.astype(dtype)
            p.grad = None
        return self

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: Mapping[str, np.ndarray], strict: bool = True) -> None:
        """
        Copy arrays into parameters after a shape audit.

        Raises:
            CheckpointMismatchError: listing every missing, unexpected or
                mis-shaped parameter
        """
        own = dict(self.named_parameters())
        differences: List[Tuple[str, str]] = []
        for name, p in own.items():
            if name not in state:
                if strict:
                    differences.append((name, "missing from checkpoint"))
            elif tuple(state[name].shape) != p.shape:
                differences.append(
                    (name, f"checkpoint shape {list(state[name].shape)} != model shape {list(p.shape)}")
                )
        if strict:
            for name in state:
                if name not in own:
                    differences.append((name, "unexpected in checkpoint"))
        if differences:
            raise CheckpointMismatchError(differences)
        for name, p in own.items():
            if name in state:
                p.data = np.array(state[name], dtype=p.dtype)
                p.grad = None
