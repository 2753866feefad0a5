"""Conditional U-Net noise predictor with KAN-Blocks in the bottleneck."""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from src.autodiff import Module, Tensor, as_tensor, concat
from src.errors import ShapeError
from src.kan import KanBlock, SplineGrid
from .layers import Conv2d, ConvBlock, Downsample, GroupNorm, ResBlock, Upsample
from .time_embedding import TimeEmbedding

logger = logging.getLogger(__name__)

BOTTLENECK_KINDS = ("kan", "conv")
KAN_PLACEMENTS = ("bottleneck", "straddle")


@dataclass
class KanConfig:
    """Spline grid and block shape shared by every KAN-Block."""
    grid_size: int = 5
    spline_order: int = 3
    grid_min: float = -1.0
    grid_max: float = 1.0
    layers_per_block: int = 3
    dwconv_kernel: int = 3
    token_norm: bool = True

    def grid(self) -> SplineGrid:
        return SplineGrid(self.grid_min, self.grid_max, self.grid_size, self.spline_order)


@dataclass
class DenoiserConfig:
    """Shape of the U-Net."""
    image_channels: int = 3
    base_channels: int = 32
    channel_mults: List[int] = field(default_factory=lambda: [1, 2, 4])
    num_kan_blocks: int = 2
    time_embed_dim: int = 64
    groups: int = 8
    bottleneck: str = "kan"
    kan_placement: str = "bottleneck"
    zero_init_noise_head: bool = False
    kan: KanConfig = field(default_factory=KanConfig)

    def __post_init__(self):
        if self.bottleneck not in BOTTLENECK_KINDS:
            raise ValueError(f"bottleneck must be one of {BOTTLENECK_KINDS}, got '{self.bottleneck}'")
        if self.kan_placement not in KAN_PLACEMENTS:
            raise ValueError(f"kan_placement must be one of {KAN_PLACEMENTS}, got '{self.kan_placement}'")
        if not self.channel_mults:
            raise ValueError("channel_mults must not be empty")
        if self.kan_placement == "straddle" and len(self.channel_mults) < 2:
            raise ValueError("kan_placement 'straddle' needs at least two resolutions")

    @property
    def in_channels(self) -> int:
        return 2 * self.image_channels

    @property
    def kan_layers_per_block(self) -> int:
        return self.kan.layers_per_block

    @property
    def bottleneck_channels(self) -> int:
        return self.base_channels * self.channel_mults[-1]

    @property
    def divisor(self) -> int:
        """Spatial extents must be multiples of this."""
        return 2 ** (len(self.channel_mults) - 1)


class DenoiserNet(Module):
    """
    eps_theta(y, x_t, ᾱ_t) with a per-pixel log-variance head.

    Down path: stem conv, one ResBlock per resolution, stride-2 downsampling
    between resolutions. Middle: KAN-Blocks (or conv blocks for the ablation).
    Up path: concatenate the matching skip, ResBlock, nearest ×2 upsampling.
    Heads: a noise head and an uncertainty head, each a 3×3 conv.
    """

    def __init__(self, config: Optional[DenoiserConfig] = None, rng: Optional[np.random.Generator] = None):
        """
        Initialize network.

        Args:
            config: Network shape
            rng: Generator for every initial weight
        """
        self.config = config or DenoiserConfig()
        cfg = self.config
        rng = rng or np.random.default_rng()
        widths = [cfg.base_channels * m for m in cfg.channel_mults]
        depth = len(widths)

        self.time_embed = TimeEmbedding(cfg.time_embed_dim, rng)
        self.stem = Conv2d(cfg.in_channels, widths[0], rng)

        self.down: List[ResBlock] = []
        self.downsample: List[Downsample] = []
        prev = widths[0]
        for i, width in enumerate(widths):
            self.down.append(ResBlock(prev, width, cfg.time_embed_dim, cfg.groups, rng))
            if i < depth - 1:
                self.downsample.append(Downsample(width, rng))
            prev = width

        if cfg.kan_placement == "straddle":
            n_down = (cfg.num_kan_blocks + 1) // 2
            self.down_kan = self._middle_blocks(widths[-2], n_down, rng)
            self.mid: List[Module] = []
            self.up_kan = self._middle_blocks(widths[-2], cfg.num_kan_blocks - n_down, rng)
        else:
            self.down_kan: List[Module] = []
            self.mid = self._middle_blocks(widths[-1], cfg.num_kan_blocks, rng)
            self.up_kan: List[Module] = []

        self.up: List[ResBlock] = []
        self.upsample: List[Upsample] = []
        for i in reversed(range(depth)):
            self.up.append(ResBlock(prev + widths[i], widths[i], cfg.time_embed_dim, cfg.groups, rng))
            if i > 0:
                self.upsample.append(Upsample(widths[i], rng))
            prev = widths[i]

        self.out_norm = GroupNorm(widths[0], cfg.groups)
        self.noise_head = Conv2d(widths[0], cfg.image_channels, rng, zero_init=cfg.zero_init_noise_head)
        self.uncertainty_norm = GroupNorm(widths[0], cfg.groups)
        self.uncertainty_head = Conv2d(widths[0], cfg.image_channels, rng, zero_init=True)

        logger.debug("Built DenoiserNet with %d parameters", self.num_parameters())

    def _middle_blocks(self, channels: int, count: int, rng: np.random.Generator) -> List[Module]:
        cfg = self.config
        if cfg.bottleneck == "conv":
            return [ConvBlock(channels, cfg.kan.layers_per_block, cfg.groups, rng) for _ in range(count)]
        return [
            KanBlock(
                channels,
                num_layers=cfg.kan.layers_per_block,
                grid=cfg.kan.grid(),
                dwconv_kernel=cfg.kan.dwconv_kernel,
                token_norm=cfg.kan.token_norm,
                rng=rng,
            )
            for _ in range(count)
        ]

    def kan_blocks(self) -> List[KanBlock]:
        return [b for b in self.down_kan + self.mid + self.up_kan if isinstance(b, KanBlock)]

    def uncertainty_modules(self) -> List[Module]:
        return [self.uncertainty_norm, self.uncertainty_head]

    def uncertainty_frozen(self) -> bool:
        return all(p.frozen for m in self.uncertainty_modules() for p in m.parameters())

    def forward(self, x_t: Tensor, y: Tensor, alpha_bar: Union[float, np.ndarray]) -> Tuple[Tensor, Tensor]:
        return denoise_forward(self, x_t, y, alpha_bar)


def denoise_forward(
    net: DenoiserNet,
    x_t: Tensor,
    y: Tensor,
    alpha_bar: Union[float, np.ndarray],
) -> Tuple[Tensor, Tensor]:
    """
    Predict noise and log-variance.

    Args:
        net: Denoiser
        x_t: Noisy image [C,H,W] or [N,C,H,W]
        y: Low-light condition with the same shape
        alpha_bar: ᾱ_t, a scalar or one value per batch element

    Returns:
        (eps_hat, u), each shaped like x_t

    Raises:
        ShapeError: on mismatched inputs or spatial size not divisible by the net's divisor
    """
    cfg = net.config
    x_t, y = as_tensor(x_t), as_tensor(y)
    if x_t.shape != y.shape:
        raise ShapeError(f"x_t {list(x_t.shape)} and condition {list(y.shape)} differ")
    batched = x_t.ndim == 4
    if not batched:
        x_t = x_t.reshape(1, *x_t.shape)
        y = y.reshape(1, *y.shape)
    n, c, h, w = x_t.shape
    if c != cfg.image_channels:
        raise ShapeError(f"Expected {cfg.image_channels} image channels, got {c}")
    if h % cfg.divisor or w % cfg.divisor:
        raise ShapeError(
            f"Spatial size {h}x{w} must be divisible by {cfg.divisor} "
            f"(2^(len(channel_mults)-1) for {len(cfg.channel_mults)} resolutions)"
        )

    alpha_bar = np.broadcast_to(np.asarray(alpha_bar, dtype=np.float64), (n,))
    temb = net.time_embed(alpha_bar)

    hid = net.stem(concat([x_t, y], axis=1))
    skips = []
    last = len(net.down) - 1
    for i, block in enumerate(net.down):
        hid = block(hid, temb)
        if i == last - 1:
            for kb in net.down_kan:
                hid = kb(hid)
        skips.append(hid)
        if i < last:
            hid = net.downsample[i](hid)

    for mb in net.mid:
        hid = mb(hid)

    for j, block in enumerate(net.up):
        hid = block(concat([hid, skips.pop()], axis=1), temb)
        if j == 1:
            for kb in net.up_kan:
                hid = kb(hid)
        if j < len(net.upsample):
            hid = net.upsample[j](hid)

    eps_hat = net.noise_head(net.out_norm(hid).silu())
    u = net.uncertainty_head(net.uncertainty_norm(hid).silu())
    if not batched:
        eps_hat = eps_hat.reshape(eps_hat.shape[1:])
        u = u.reshape(u.shape[1:])
    return eps_hat, u


def freeze_uncertainty(net: DenoiserNet) -> None:
    """Mark every uncertainty-branch parameter frozen; u is still produced."""
    for module in net.uncertainty_modules():
        module.freeze()
    logger.info("Froze uncertainty head (%d parameters)",
                sum(m.num_parameters() for m in net.uncertainty_modules()))


def count_parameters(net: Module) -> int:
    """Total learnable scalar count."""
    return net.num_parameters()


def parameter_breakdown(net: Module) -> Dict[str, int]:
    """Learnable scalar count per top-level submodule, in attribute order."""
    breakdown: Dict[str, int] = {}
    for name, p in net.named_parameters():
        top = name.split(".")[0]
        breakdown[top] = breakdown.get(top, 0) + p.size
    return breakdown
