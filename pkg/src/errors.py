"""Exception hierarchy shared by every sub-package."""
from typing import Iterable, List, Tuple


class ShapeError(ValueError):
    """Incompatible tensor shapes, extents or divisibility."""


class ContractError(RuntimeError):
    """An API was called in a state its contract forbids."""


class GridError(ValueError):
    """Degenerate spline grid definition."""


class ScheduleError(ValueError):
    """Invalid noise schedule parameters or timestep."""


class ImageNotFoundError(FileNotFoundError):
    """Image path does not exist."""


class UnsupportedImageError(ValueError):
    """Image format, colour type or bit depth is not handled."""


class CorruptImageError(ValueError):
    """Image stream could not be decoded."""


class PatchSizeError(ValueError):
    """Requested patch is larger than the source image."""


class DatasetError(ValueError):
    """Dataset directory is missing or its pairs do not line up."""


class ConfigError(ValueError):
    """Unknown configuration key, bad value or inconsistent run settings."""


class CheckpointError(ValueError):
    """Checkpoint file is missing, unreadable or of an unknown version."""


class CheckpointMismatchError(CheckpointError):
    """Checkpoint parameters do not match the model they are loaded into."""

    def __init__(self, differences: Iterable[Tuple[str, str]]):
        """
        Args:
            differences: (parameter name, description) pairs
        """
        self.differences: List[Tuple[str, str]] = list(differences)
        lines = [f"  {name}: {what}" for name, what in self.differences]
        super().__init__(
            "Checkpoint does not match model parameters:\n" + "\n".join(lines)
        )
