from .png_io import ImageBuffer, load_png, save_png
from .dataset import (
    PairRecord, PairedDataset, PatchPairDataset, normalize, denormalize,
    patch_window, sample_patch_pair, collate_numpy, make_loader,
)

__all__ = [
    'ImageBuffer', 'load_png', 'save_png', 'PairRecord', 'PairedDataset', 'PatchPairDataset',
    'normalize', 'denormalize', 'patch_window', 'sample_patch_pair', 'collate_numpy', 'make_loader',
]
