"""PNG decoding and encoding into [0, 1] channel-first buffers."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from src.errors import CorruptImageError, ImageNotFoundError, UnsupportedImageError

logger = logging.getLogger(__name__)

# Pillow mode -> (channels, bit depth). Pillow decodes 16-bit RGB PNGs as 8-bit 'RGB'.
SUPPORTED_MODES = {
    "L": (1, 8),
    "RGB": (3, 8),
    "I;16": (1, 16),
    "I;16B": (1, 16),
    "I": (1, 16),
}


@dataclass(frozen=True)
class ImageBuffer:
    """Channel-first image with values in [0, 1]."""
    data: np.ndarray
    bit_depth: int = 8

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[0] not in (1, 3):
            raise UnsupportedImageError(f"ImageBuffer needs [1|3, H, W] data, got {list(self.data.shape)}")
        if min(self.data.shape[1:]) < 1:
            raise UnsupportedImageError(f"Image dimensions must be positive, got {list(self.data.shape)}")
        if self.data.size and (self.data.min() < 0.0 or self.data.max() > 1.0):
            raise ValueError("ImageBuffer values must lie in [0, 1]")
        self.data.setflags(write=False)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


def load_png(path: Union[str, Path]) -> ImageBuffer:
    """
    Decode an 8- or 16-bit grayscale or RGB PNG.

    Args:
        path: File to read

    Returns:
        ImageBuffer scaled to [0, 1]

    Raises:
        ImageNotFoundError: the file does not exist
        UnsupportedImageError: not a PNG, or a colour type other than gray/RGB
        CorruptImageError: the stream cannot be decoded
    """
    path = Path(path)
    if not path.is_file():
        raise ImageNotFoundError(f"Image not found: {path}")
    try:
        with Image.open(path) as img:
            if img.format != "PNG":
                raise UnsupportedImageError(f"{path}: expected a PNG, found {img.format}")
            if img.mode not in SUPPORTED_MODES:
                raise UnsupportedImageError(
                    f"{path}: unsupported colour type '{img.mode}' (supported: grayscale, RGB)"
                )
            img.load()
            channels, bit_depth = SUPPORTED_MODES[img.mode]
            pixels = np.asarray(img)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise CorruptImageError(f"{path}: cannot decode image ({exc})") from exc

    scale = 255.0 if bit_depth == 8 else 65535.0
    data = np.clip(pixels.astype(np.float64) / scale, 0.0, 1.0)
    if channels == 1:
        data = data[None, :, :]
    else:
        data = np.ascontiguousarray(data.transpose(2, 0, 1))
    return ImageBuffer(data=data, bit_depth=bit_depth)


def save_png(image: Union[ImageBuffer, np.ndarray], path: Union[str, Path], bit_depth: int = 8) -> Path:
    """
    Encode a [C,H,W] image in [0, 1] as PNG.

    Args:
        image: ImageBuffer or array (values are clipped to [0, 1])
        path: Destination file
        bit_depth: 8, or 16 for grayscale images

    Returns:
        The written path
    """
    data = image.data if isinstance(image, ImageBuffer) else np.asarray(image, dtype=np.float64)
    if data.ndim != 3 or data.shape[0] not in (1, 3):
        raise UnsupportedImageError(f"Can only write [1|3, H, W] images, got {list(data.shape)}")
    data = np.clip(data, 0.0, 1.0)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    if bit_depth == 8:
        pixels = np.round(data * 255.0).astype(np.uint8)
        if data.shape[0] == 1:
            img = Image.fromarray(pixels[0])
        else:
            img = Image.fromarray(np.ascontiguousarray(pixels.transpose(1, 2, 0)))
    elif bit_depth == 16:
        if data.shape[0] != 1:
            raise UnsupportedImageError("16-bit output is only supported for grayscale images")
        img = Image.fromarray(np.round(data[0] * 65535.0).astype(np.uint16))
    else:
        raise UnsupportedImageError(f"Unsupported bit depth {bit_depth}")
    img.save(path, format="PNG")
    logger.debug("Wrote %s", path)
    return path
