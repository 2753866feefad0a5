"""Paired low/normal-light datasets, normalization and patch sampling."""
import logging
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from PIL import Image
from torch.utils.data import DataLoader, Dataset

from src.autodiff import Tensor
from src.errors import DatasetError, PatchSizeError
from .png_io import ImageBuffer, load_png

logger = logging.getLogger(__name__)

NORMALIZE_MODES = ("zero_one", "sym")
LOW_DIR = "low"
HIGH_DIR = "high"


def normalize(img: Union[ImageBuffer, np.ndarray], mode: str = "sym") -> Tensor:
    """
    Map [0, 1] values into the model range.

    Args:
        img: Image buffer or array in [0, 1]
        mode: 'zero_one' (unchanged) or 'sym' ([-1, 1])
    """
    data = img.data if isinstance(img, ImageBuffer) else np.asarray(img, dtype=np.float64)
    if mode == "sym":
        return Tensor(data * 2.0 - 1.0)
    if mode == "zero_one":
        return Tensor(np.array(data))
    raise ValueError(f"Unknown normalization mode '{mode}', expected one of {NORMALIZE_MODES}")


def denormalize(x: Union[Tensor, np.ndarray], mode: str = "sym") -> np.ndarray:
    """Inverse of normalize, returned as a plain array."""
    data = x.data if isinstance(x, Tensor) else np.asarray(x)
    if mode == "sym":
        return (data + 1.0) * 0.5
    if mode == "zero_one":
        return np.array(data)
    raise ValueError(f"Unknown normalization mode '{mode}', expected one of {NORMALIZE_MODES}")


@dataclass(frozen=True)
class PairRecord:
    """Paths of one low-light image and its normal-light partner."""
    name: str
    low_path: Path
    high_path: Path


class PairedDataset:
    """
    Index of root[/split]/low/*.png paired with root[/split]/high/*.png by filename.

    Records are sorted by filename so indexing is stable across runs.
    """

    def __init__(self, root: Union[str, Path], split: str = "", check_sizes: bool = True):
        """
        Initialize dataset.

        Args:
            root: Dataset root directory
            split: Optional sub-directory such as 'train' or 'eval'
            check_sizes: Verify every pair has identical dimensions (reads PNG headers only)

        Raises:
            DatasetError: missing directories, unpaired files or size mismatches
        """
        self.root = Path(root)
        self.split = split
        base = self.root / split if split else self.root
        low_dir, high_dir = base / LOW_DIR, base / HIGH_DIR
        for d in (low_dir, high_dir):
            if not d.is_dir():
                raise DatasetError(f"Dataset directory not found: {d}")

        low_names = {p.name for p in low_dir.glob("*.png")}
        high_names = {p.name for p in high_dir.glob("*.png")}
        problems = [f"{LOW_DIR}/{n} has no partner in {HIGH_DIR}/" for n in sorted(low_names - high_names)]
        problems += [f"{HIGH_DIR}/{n} has no partner in {LOW_DIR}/" for n in sorted(high_names - low_names)]
        if problems:
            raise DatasetError("Unpaired images in " + str(base) + ":\n  " + "\n  ".join(problems))
        if not low_names:
            raise DatasetError(f"No PNG pairs found under {base}")

        self.records: List[PairRecord] = [
            PairRecord(name, low_dir / name, high_dir / name) for name in sorted(low_names)
        ]
        if check_sizes:
            self._check_sizes()
        logger.info("Indexed %d pairs under %s", len(self.records), base)

    def _check_sizes(self) -> None:
        mismatched = []
        for rec in self.records:
            with Image.open(rec.low_path) as a, Image.open(rec.high_path) as b:
                if a.size != b.size:
                    mismatched.append(f"{rec.name}: low {a.size[0]}x{a.size[1]}, high {b.size[0]}x{b.size[1]}")
        if mismatched:
            raise DatasetError("Pairs with different dimensions:\n  " + "\n  ".join(mismatched))

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, idx: int) -> PairRecord:
        return self.records[idx]

    def load(self, idx: int) -> Tuple[ImageBuffer, ImageBuffer]:
        rec = self.records[idx]
        return load_png(rec.low_path), load_png(rec.high_path)

    def load_all(self) -> List[Tuple[ImageBuffer, ImageBuffer]]:
        return [self.load(i) for i in range(len(self))]


def patch_window(height: int, width: int, size: int, rng: np.random.Generator) -> Tuple[int, int]:
    """Top-left corner drawn uniformly over every valid size×size window."""
    if height < size or width < size:
        raise PatchSizeError(
            f"Image {height}x{width} is smaller than the {size}x{size} patch; "
            f"resize the images or lower the patch size"
        )
    top = int(rng.integers(0, height - size + 1))
    left = int(rng.integers(0, width - size + 1))
    return top, left


def sample_patch_pair(
    pair: Tuple[Union[ImageBuffer, np.ndarray], Union[ImageBuffer, np.ndarray]],
    size: int,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Crop the same window from both images.

    Args:
        pair: (low, normal) images of identical size
        size: Patch side length
        rng: Generator for the window position

    Returns:
        (low_patch, normal_patch), each [C, size, size]
    """
    low, high = (p.data if isinstance(p, ImageBuffer) else np.asarray(p) for p in pair)
    if low.shape != high.shape:
        raise DatasetError(f"Pair shapes differ: {list(low.shape)} vs {list(high.shape)}")
    top, left = patch_window(low.shape[1], low.shape[2], size, rng)
    window = (slice(None), slice(top, top + size), slice(left, left + size))
    return low[window], high[window]


class PatchPairDataset(Dataset):
    """
    Random aligned patches from preloaded pairs, in the sym range.

    Sample i is a deterministic function of (seed, offset + i), so a loader
    started at any offset reproduces the same sequence.
    """

    def __init__(
        self,
        pairs: Sequence[Tuple[ImageBuffer, ImageBuffer]],
        patch_size: int,
        num_samples: int,
        seed: int = 0,
        offset: int = 0,
    ):
        if not pairs:
            raise DatasetError("PatchPairDataset needs at least one image pair")
        self.pairs = list(pairs)
        self.patch_size = patch_size
        self.num_samples = num_samples
        self.seed = seed
        self.offset = offset
        for low, _ in self.pairs:
            if low.height < patch_size or low.width < patch_size:
                raise PatchSizeError(
                    f"Image {low.height}x{low.width} is smaller than the {patch_size}x{patch_size} "
                    f"patch; resize the images or lower the patch size"
                )

    def __len__(self) -> int:
        return self.num_samples

    def __getitem__(self, idx: int) -> Tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(self.offset + idx,)))
        pair = self.pairs[int(rng.integers(len(self.pairs)))]
        low, high = sample_patch_pair(pair, self.patch_size, rng)
        return low * 2.0 - 1.0, high * 2.0 - 1.0


def collate_numpy(batch: Sequence[Tuple[np.ndarray, np.ndarray]], dtype=np.float32) -> Tuple[np.ndarray, np.ndarray]:
    """Stack samples into [B,C,H,W] arrays and check the sym range."""
    low = np.stack([b[0] for b in batch]).astype(dtype)
    high = np.stack([b[1] for b in batch]).astype(dtype)
    for name, arr in (("low", low), ("high", high)):
        if arr.min() < -1.0 or arr.max() > 1.0:
            raise DatasetError(f"{name} batch leaves the [-1, 1] range: [{arr.min()}, {arr.max()}]")
    return low, high


def make_loader(dataset: PatchPairDataset, batch_size: int, num_workers: int = 0, dtype=np.float32):
    """DataLoader over a PatchPairDataset yielding numpy batches in order."""
    return DataLoader(
        dataset,
        batch_size=batch_size,
        shuffle=False,
        num_workers=num_workers,
        collate_fn=partial(collate_numpy, dtype=dtype),
        prefetch_factor=2 if num_workers > 0 else None,
    )
