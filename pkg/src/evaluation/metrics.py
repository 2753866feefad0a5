"""Full-reference quality metrics and evaluation reports."""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from skimage.metrics import mean_squared_error, structural_similarity
from tqdm import tqdm

from src.data import ImageBuffer, PairedDataset, load_png
from src.errors import DatasetError, ShapeError

logger = logging.getLogger(__name__)

ImageLike = Union[ImageBuffer, np.ndarray]

# skimage fixes the Gaussian window radius at int(3.5·σ + 0.5)
SSIM_TRUNCATE = 3.5


def _array(img: ImageLike) -> np.ndarray:
    data = img.data if isinstance(img, ImageBuffer) else np.asarray(img)
    return np.asarray(data, dtype=np.float64)


def _check_pair(x: np.ndarray, ref: np.ndarray) -> None:
    if x.shape != ref.shape:
        raise ShapeError(f"Image shapes differ: {list(x.shape)} vs {list(ref.shape)}")


def psnr(x: ImageLike, ref: ImageLike) -> float:
    """
    Peak signal-to-noise ratio in dB for images in [0, 1].

    Returns:
        10·log10(1 / MSE); +inf when the images are identical
    """
    x, ref = _array(x), _array(ref)
    _check_pair(x, ref)
    mse = mean_squared_error(ref, x)
    if mse == 0.0:
        return math.inf
    return float(10.0 * np.log10(1.0 / mse))


def ssim(
    x: ImageLike,
    ref: ImageLike,
    window: int = 11,
    sigma: float = 1.5,
    k1: float = 0.01,
    k2: float = 0.03,
) -> float:
    """
    Mean structural similarity with a Gaussian window, averaged over channels.

    Args:
        x: Image [C,H,W] (or [H,W]) in [0, 1]
        ref: Reference of the same shape
        window: Window side length; must match the Gaussian radius implied by sigma
        sigma: Gaussian window width
        k1: Luminance stabilizer
        k2: Contrast stabilizer

    Raises:
        ShapeError: shapes differ or an image side is smaller than the window
    """
    x, ref = _array(x), _array(ref)
    _check_pair(x, ref)
    implied = 2 * int(SSIM_TRUNCATE * sigma + 0.5) + 1
    if window != implied:
        raise ValueError(f"SSIM window {window} does not match sigma {sigma} (implies {implied})")
    if min(x.shape[-2:]) < window:
        raise ShapeError(f"Image {x.shape[-2]}x{x.shape[-1]} is smaller than the {window}x{window} SSIM window")
    kwargs = dict(
        data_range=1.0, gaussian_weights=True, sigma=sigma, K1=k1, K2=k2, use_sample_covariance=False,
    )
    if x.ndim == 3:
        kwargs["channel_axis"] = 0
    return float(structural_similarity(ref, x, **kwargs))


@dataclass
class MetricReport:
    """Per-image PSNR/SSIM and their arithmetic means."""
    records: List[Dict] = field(default_factory=list)

    def add(self, name: str, psnr_db: float, ssim_value: float) -> None:
        self.records.append({"name": name, "psnr": float(psnr_db), "ssim": float(ssim_value)})

    @property
    def count(self) -> int:
        return len(self.records)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.records, columns=["name", "psnr", "ssim"])

    @property
    def mean_psnr(self) -> float:
        return float(np.mean([r["psnr"] for r in self.records])) if self.records else math.nan

    @property
    def mean_ssim(self) -> float:
        return float(np.mean([r["ssim"] for r in self.records])) if self.records else math.nan

    def to_text(self) -> str:
        """Tab-separated records followed by the aggregate lines."""
        frame = self.to_frame()
        body = frame.to_csv(sep="\t", index=False, float_format="%.6f")
        summary = f"# count\t{self.count}\n# mean_psnr\t{self.mean_psnr:.6f}\n# mean_ssim\t{self.mean_ssim:.6f}\n"
        return body + summary

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_text())
        return path


class Evaluator:
    """Scores enhanced images against their references."""

    def __init__(self, window: int = 11, sigma: float = 1.5):
        """
        Initialize evaluator.

        Args:
            window: SSIM window size
            sigma: SSIM Gaussian width
        """
        self.window = window
        self.sigma = sigma

    def score(self, x: ImageLike, ref: ImageLike):
        return psnr(x, ref), ssim(x, ref, window=self.window, sigma=self.sigma)

    def evaluate_dirs(self, enhanced_dir: Union[str, Path], reference_dir: Union[str, Path]) -> MetricReport:
        """
        Score every PNG in ``enhanced_dir`` against the same filename in ``reference_dir``.

        Raises:
            DatasetError: listing files present on one side only
        """
        enhanced_dir, reference_dir = Path(enhanced_dir), Path(reference_dir)
        for d in (enhanced_dir, reference_dir):
            if not d.is_dir():
                raise DatasetError(f"Directory not found: {d}")
        enhanced = {p.name for p in enhanced_dir.glob("*.png")}
        reference = {p.name for p in reference_dir.glob("*.png")}
        unmatched = [f"enhanced/{n}" for n in sorted(enhanced - reference)]
        unmatched += [f"reference/{n}" for n in sorted(reference - enhanced)]
        if unmatched:
            raise DatasetError("Unmatched files:\n  " + "\n  ".join(unmatched))

        report = MetricReport()
        for name in tqdm(sorted(enhanced), desc="Scoring", leave=False):
            p, s = self.score(load_png(enhanced_dir / name), load_png(reference_dir / name))
            report.add(name, p, s)
        return report

    def evaluate_enhancer(
        self,
        enhance_fn: Callable[[ImageBuffer], np.ndarray],
        dataset: PairedDataset,
        limit: Optional[int] = None,
    ) -> MetricReport:
        """Enhance every low image of a dataset and score it against its partner."""
        report = MetricReport()
        count = len(dataset) if limit is None else min(limit, len(dataset))
        for i in tqdm(range(count), desc="Evaluating", leave=False):
            low, high = dataset.load(i)
            p, s = self.score(enhance_fn(low), high)
            report.add(dataset[i].name, p, s)
        return report

    def print_results(self, report: MetricReport, title: str = "EVALUATION RESULTS") -> None:
        """Print a report."""
        print("\n" + "=" * 60)
        print(title)
        print("=" * 60)
        print(f"Images: {report.count}")
        if report.count:
            frame = report.to_frame()
            print(frame.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
            print("-" * 60)
            print(f"Mean PSNR: {report.mean_psnr:.4f} dB")
            print(f"Mean SSIM: {report.mean_ssim:.4f}")
        print("=" * 60)
