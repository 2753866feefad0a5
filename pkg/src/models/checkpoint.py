"""
Checkpoint container.

Files use the safetensors layout: a JSON header (names, shapes, dtypes, byte
offsets and a string metadata map) followed by little-endian raw buffers.
Model weights are stored under ``model/<name>``, Adam moments under
``adam.m/<name>`` and ``adam.v/<name>``.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from safetensors import safe_open
from safetensors.numpy import save_file

from src.autodiff import Adam, Module
from src.errors import CheckpointError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MODEL_PREFIX = "model/"
ADAM_PREFIXES = ("adam.m/", "adam.v/")


@dataclass
class Checkpoint:
    """Decoded checkpoint contents."""
    weights: Dict[str, np.ndarray]
    config_text: str
    step: int = 0
    phase: int = 1
    dtype: str = "float32"
    frozen: List[str] = field(default_factory=list)
    adam_arrays: Dict[str, np.ndarray] = field(default_factory=dict)
    adam_steps: Dict[str, int] = field(default_factory=dict)
    format_version: int = FORMAT_VERSION


def save_checkpoint(
    path: Union[str, Path],
    net: Module,
    config_text: str,
    step: int,
    phase: int,
    optimizer: Optional[Adam] = None,
) -> Path:
    """
    Write weights, optimizer moments and run metadata.

    Args:
        path: Destination file
        net: Model whose parameters are saved
        config_text: Resolved run configuration (INI text)
        step: Training step counter
        phase: Training phase (1 or 2)
        optimizer: Optional Adam whose moments are saved for resuming

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    named = list(net.named_parameters())
    tensors = {MODEL_PREFIX + name: np.ascontiguousarray(p.data) for name, p in named}
    adam_steps: Dict[str, int] = {}
    if optimizer is not None:
        tensors.update({k: np.ascontiguousarray(v) for k, v in optimizer.state_arrays().items()})
        adam_steps = dict(optimizer.state.t)

    dtype = str(named[0][1].dtype) if named else "float32"
    metadata = {
        "format_version": str(FORMAT_VERSION),
        "config": config_text,
        "step": str(int(step)),
        "phase": str(int(phase)),
        "dtype": dtype,
        "frozen": json.dumps([name for name, p in named if p.frozen]),
        "adam_steps": json.dumps(adam_steps),
    }
    save_file(tensors, str(path), metadata=metadata)
    logger.info("Saved checkpoint %s (step %d, phase %d)", path, step, phase)
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Read a checkpoint written by save_checkpoint.

    Raises:
        CheckpointError: missing file, unreadable container or unknown version
    """
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"Checkpoint not found: {path}")
    try:
        with safe_open(str(path), framework="numpy") as f:
            metadata = f.metadata() or {}
            arrays = {key: f.get_tensor(key) for key in f.keys()}
    except Exception as exc:
        raise CheckpointError(f"Cannot read checkpoint {path}: {exc}") from exc

    version = metadata.get("format_version")
    if version is None:
        raise CheckpointError(f"Checkpoint {path} has no format_version")
    if int(version) != FORMAT_VERSION:
        raise CheckpointError(
            f"Checkpoint {path} has format_version {version}, this build reads {FORMAT_VERSION}"
        )

    weights = {k[len(MODEL_PREFIX):]: v for k, v in arrays.items() if k.startswith(MODEL_PREFIX)}
    adam = {k: v for k, v in arrays.items() if k.startswith(ADAM_PREFIXES)}
    return Checkpoint(
        weights=weights,
        config_text=metadata.get("config", ""),
        step=int(metadata.get("step", 0)),
        phase=int(metadata.get("phase", 1)),
        dtype=metadata.get("dtype", "float32"),
        frozen=json.loads(metadata.get("frozen", "[]")),
        adam_arrays=adam,
        adam_steps={k: int(v) for k, v in json.loads(metadata.get("adam_steps", "{}")).items()},
        format_version=int(version),
    )


def restore_weights(net: Module, checkpoint: Checkpoint) -> None:
    """Load weights after a shape audit and reapply the saved frozen flags."""
    net.load_state_dict(checkpoint.weights, strict=True)
    frozen = set(checkpoint.frozen)
    for name, p in net.named_parameters():
        p.frozen = name in frozen
