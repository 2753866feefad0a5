"""Full-image enhancement with pad-to-divisor and crop."""
import logging
from typing import Callable, Tuple, Union

import numpy as np

from src.autodiff import Tensor
from src.data import ImageBuffer, denormalize, normalize
from .rng import RngStreams
from .sampler import sample
from .schedule import NoiseSchedule

logger = logging.getLogger(__name__)


def pad_to_multiple(image: np.ndarray, divisor: int) -> Tuple[np.ndarray, Tuple[int, int]]:
    """
    Edge-replicate the bottom/right borders up to the next multiple of ``divisor``.

    Returns:
        (padded [C,H',W'], original (H, W))
    """
    _, h, w = image.shape
    hp = -(-h // divisor) * divisor
    wp = -(-w // divisor) * divisor
    padded = np.pad(image, ((0, 0), (0, hp - h), (0, wp - w)), mode="edge")
    return padded, (h, w)


def crop_to(image: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    h, w = size
    return image[..., :h, :w]


class Enhancer:
    """Runs the reverse process on whole images of arbitrary size."""

    def __init__(
        self,
        net: Callable,
        sched: NoiseSchedule,
        divisor: int,
        seed: int = 0,
        stochastic: bool = False,
        dtype=np.float32,
    ):
        """
        Initialize enhancer.

        Args:
            net: Denoiser (x_t, y, ᾱ_t) -> (eps_hat, u)
            sched: Noise schedule the net was trained with
            divisor: Required multiple of the spatial extents
            seed: Seed of the 'sample' stream (same for every image)
            stochastic: Add the σ_t·z term during sampling
            dtype: Working precision
        """
        self.net = net
        self.sched = sched
        self.divisor = divisor
        self.seed = seed
        self.stochastic = stochastic
        self.dtype = dtype

    def enhance(self, image: Union[ImageBuffer, np.ndarray], progress: bool = False) -> np.ndarray:
        """
        Enhance one image.

        Args:
            image: Low-light image in [0, 1], [C,H,W]

        Returns:
            Enhanced image in [0, 1] with the input's shape
        """
        data = image.data if isinstance(image, ImageBuffer) else np.asarray(image, dtype=np.float64)
        padded, size = pad_to_multiple(data, self.divisor)
        if padded.shape != data.shape:
            logger.debug("Padded %s to %s", list(data.shape), list(padded.shape))
        y = Tensor(normalize(padded, "sym").data, dtype=self.dtype)
        rng = RngStreams(self.seed).generator("sample")
        out = sample(self.net, y, self.sched, seed=rng, stochastic=self.stochastic, progress=progress)
        return np.clip(crop_to(denormalize(out, "sym"), size), 0.0, 1.0).astype(np.float64)
