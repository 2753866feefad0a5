import numpy as np
import pytest
from PIL import Image
from scipy import stats

from src.data import (
    ImageBuffer, PairedDataset, PatchPairDataset, denormalize, load_png, make_loader, normalize,
    patch_window, sample_patch_pair, save_png,
)
from src.errors import (
    CorruptImageError, DatasetError, ImageNotFoundError, PatchSizeError, UnsupportedImageError,
)


def write_pair(root, name, low, high):
    save_png(low, root / "low" / name)
    save_png(high, root / "high" / name)


def test_save_and_load_rgb_within_quantization(tmp_path, rng):
    image = rng.uniform(0, 1, (3, 5, 7))
    loaded = load_png(save_png(image, tmp_path / "rgb.png"))
    assert loaded.data.shape == (3, 5, 7)
    assert loaded.bit_depth == 8
    assert np.abs(loaded.data - image).max() <= 0.5 / 255 + 1e-12


def test_sixteen_bit_grayscale(tmp_path, rng):
    image = rng.uniform(0, 1, (1, 4, 6))
    loaded = load_png(save_png(image, tmp_path / "gray16.png", bit_depth=16))
    assert loaded.bit_depth == 16
    assert loaded.channels == 1
    assert np.abs(loaded.data - image).max() <= 0.5 / 65535 + 1e-12


def test_load_errors(tmp_path):
    with pytest.raises(ImageNotFoundError):
        load_png(tmp_path / "missing.png")

    Image.new("RGB", (4, 4)).save(tmp_path / "photo.jpg", format="JPEG")
    with pytest.raises(UnsupportedImageError, match="expected a PNG"):
        load_png(tmp_path / "photo.jpg")

    Image.new("RGBA", (4, 4)).save(tmp_path / "alpha.png")
    with pytest.raises(UnsupportedImageError, match="colour type"):
        load_png(tmp_path / "alpha.png")

    (tmp_path / "garbage.png").write_bytes(b"\x89PNG\r\n\x1a\nnot really a png")
    with pytest.raises(CorruptImageError):
        load_png(tmp_path / "garbage.png")


def test_save_rejects_bad_shapes(tmp_path):
    with pytest.raises(UnsupportedImageError):
        save_png(np.zeros((2, 4, 4)), tmp_path / "two.png")
    with pytest.raises(UnsupportedImageError):
        save_png(np.zeros((3, 4, 4)), tmp_path / "rgb16.png", bit_depth=16)


def test_image_buffer_validates_range():
    with pytest.raises(ValueError):
        ImageBuffer(np.full((1, 2, 2), 1.5))
    with pytest.raises(UnsupportedImageError):
        ImageBuffer(np.zeros((4, 2, 2)))


def test_normalize_round_trip(f64):
    x = np.linspace(0, 1, 12).reshape(3, 2, 2)
    sym = normalize(x, "sym")
    np.testing.assert_allclose(sym.data, 2 * x - 1)
    np.testing.assert_allclose(denormalize(sym, "sym"), x)
    with pytest.raises(ValueError):
        normalize(x, "centered")


def test_paired_dataset_indexes_sorted_pairs(synthetic_root):
    ds = PairedDataset(synthetic_root)
    assert len(ds) == 4
    assert [r.name for r in ds.records] == sorted(r.name for r in ds.records)
    low, high = ds.load(0)
    assert low.data.shape == high.data.shape == (3, 48, 48)


def test_paired_dataset_reports_unpaired_files(tmp_path, rng):
    root = tmp_path / "data"
    write_pair(root, "a.png", rng.uniform(0, 1, (3, 4, 4)), rng.uniform(0, 1, (3, 4, 4)))
    save_png(rng.uniform(0, 1, (3, 4, 4)), root / "low" / "b.png")
    save_png(rng.uniform(0, 1, (3, 4, 4)), root / "high" / "c.png")
    with pytest.raises(DatasetError) as info:
        PairedDataset(root)
    message = str(info.value)
    assert "low/b.png" in message and "high/c.png" in message


def test_paired_dataset_size_mismatch_and_missing_dir(tmp_path, rng):
    root = tmp_path / "data"
    write_pair(root, "a.png", rng.uniform(0, 1, (3, 4, 4)), rng.uniform(0, 1, (3, 4, 6)))
    with pytest.raises(DatasetError, match="different dimensions"):
        PairedDataset(root)
    assert len(PairedDataset(root, check_sizes=False)) == 1
    with pytest.raises(DatasetError, match="not found"):
        PairedDataset(tmp_path / "nowhere")


def test_patch_window_covers_every_position():
    rng = np.random.default_rng(0)
    corners = {patch_window(4, 5, 3, rng) for _ in range(500)}
    assert corners == {(top, left) for top in range(2) for left in range(3)}
    with pytest.raises(PatchSizeError):
        patch_window(4, 5, 6, rng)


def test_sample_patch_pair_uses_same_window(rng):
    low = rng.uniform(0, 1, (3, 10, 10))
    pair = (low, low * 2)
    a, b = sample_patch_pair(pair, 4, np.random.default_rng(3))
    assert a.shape == (3, 4, 4)
    np.testing.assert_array_equal(b, a * 2)


def test_patch_dataset_is_deterministic_and_offsettable(synthetic_root):
    pairs = PairedDataset(synthetic_root).load_all()
    ds = PatchPairDataset(pairs, patch_size=16, num_samples=6, seed=5)
    shifted = PatchPairDataset(pairs, patch_size=16, num_samples=4, seed=5, offset=2)
    for i in range(4):
        np.testing.assert_array_equal(ds[i + 2][0], shifted[i][0])
    low, high = ds[0]
    assert low.shape == (3, 16, 16)
    assert low.min() >= -1.0 and high.max() <= 1.0
    with pytest.raises(PatchSizeError):
        PatchPairDataset(pairs, patch_size=64, num_samples=1)


def test_loader_batches(synthetic_root):
    pairs = PairedDataset(synthetic_root).load_all()
    loader = make_loader(PatchPairDataset(pairs, 16, num_samples=5, seed=1), batch_size=2)
    batches = list(loader)
    assert [b[0].shape[0] for b in batches] == [2, 2, 1]
    low, high = batches[0]
    assert isinstance(low, np.ndarray) and low.dtype == np.float32
    assert high.shape == (2, 3, 16, 16)


def test_patch_positions_are_uniform(rng):
    height, width, size = 10, 12, 4
    index = np.arange(height * width, dtype=np.float64).reshape(1, height, width)
    image = np.repeat(index, 3, axis=0)
    positions = (height - size + 1) * (width - size + 1)

    counts = np.zeros(positions, dtype=np.int64)
    draws = 100 * positions
    for _ in range(draws):
        low, high = sample_patch_pair((image, image), size, rng)
        top, left = divmod(int(low[0, 0, 0]), width)
        counts[top * (width - size + 1) + left] += 1
        np.testing.assert_array_equal(low, high)

    assert counts.min() > 0
    assert stats.chisquare(counts).pvalue > 1e-3
