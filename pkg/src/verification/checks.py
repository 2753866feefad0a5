"""
Cross-module property checks.

Each check measures one number (an error, a fraction, a count) and compares it
with a tolerance. ``quick`` runs the cheap algebraic checks; ``full`` adds the
gradient checks, the tiny end-to-end denoiser and the two-phase audits.
"""
import logging
import time
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence

import numpy as np

from src.autodiff import (
    Adam, Tensor, atan2, check_gradients, concat, conv2d, depthwise_conv2d, hypot, pad2d, precision,
    upsample_nearest2x,
)
from src.diffusion import (
    RngStreams, heteroscedastic_nll, make_schedule, phase2_loss, phase2_terms, q_sample,
    reverse_mean_step, sample,
)
from src.diffusion.sampler import StepFn
from src.frequency import FreqLossConfig, dft2, fft2, freq_loss, ifft2
from src.kan import KanBlock, SplineGrid, bspline_basis_values, init_kan_layer, kan_layer_forward
from src.models import DenoiserConfig, DenoiserNet, KanConfig, freeze_uncertainty
from .oracles import (
    TeacherForcedNet, de_boor_basis, naive_dft2, naive_kan_forward, sign_flipped_reverse_step,
)

logger = logging.getLogger(__name__)

LEVELS = ("quick", "full")
GRAD_TOL = 1e-4
GRAD_SEEDS = 10


@dataclass
class CheckContext:
    seed: int = 0
    reverse_step: StepFn = reverse_mean_step

    def rng(self, offset: int = 0) -> np.random.Generator:
        return np.random.default_rng(self.seed + offset)


def over_seeds(fn: Callable[[CheckContext], float], count: int = GRAD_SEEDS) -> Callable[[CheckContext], float]:
    """Worst value of a check over ``count`` consecutive seeds starting at the context seed."""
    def worst(ctx: CheckContext) -> float:
        return max(fn(replace(ctx, seed=ctx.seed + s)) for s in range(count))
    worst.__name__ = fn.__name__
    worst.seeds = count
    return worst


@dataclass
class Check:
    name: str
    fn: Callable[[CheckContext], float]
    tolerance: float
    level: str = "quick"
    at_least: bool = False

    def passes(self, value: float) -> bool:
        if not np.isfinite(value):
            return False
        return value >= self.tolerance if self.at_least else value <= self.tolerance


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    seconds: float
    at_least: bool = False
    detail: str = ""


def tiny_denoiser_config(**overrides) -> DenoiserConfig:
    """The smallest U-Net used by the end-to-end checks."""
    values = dict(
        base_channels=8, channel_mults=[1, 2], num_kan_blocks=1, time_embed_dim=16, groups=4,
        kan=KanConfig(layers_per_block=2),
    )
    values.update(overrides)
    return DenoiserConfig(**values)


# spline and KAN checks

def partition_of_unity(ctx: CheckContext) -> float:
    grid = SplineGrid()
    x = np.concatenate([ctx.rng().uniform(grid.t_min, grid.t_max, 998), [grid.t_min, grid.t_max]])
    return float(np.max(np.abs(bspline_basis_values(x, grid).sum(axis=-1) - 1.0)))


def basis_matches_recursion(ctx: CheckContext) -> float:
    grid = SplineGrid(grid_size=7, order=3)
    x = ctx.rng(1).uniform(grid.t_min, grid.t_max, 200)
    fast = bspline_basis_values(x, grid)
    slow = np.array([[de_boor_basis(v, grid.knots, j, grid.order) for j in range(grid.num_basis)] for v in x])
    return float(np.max(np.abs(fast - slow)))


def kan_layer_matches_loops(ctx: CheckContext) -> float:
    layer = init_kan_layer(4, 3, seed=ctx.seed)
    tokens = ctx.rng(2).uniform(-1.3, 1.3, (6, 4))
    fast = kan_layer_forward(layer, Tensor(tokens)).data
    return float(np.max(np.abs(fast - naive_kan_forward(layer, tokens))))


# spectral checks

def fft_matches_dft(ctx: CheckContext) -> float:
    rng = ctx.rng(3)
    worst = 0.0
    for shape, mode in (((16, 16), "auto"), ((12, 10), "auto"), ((8, 8), "direct")):
        x = rng.standard_normal(shape)
        planes = fft2(Tensor(x), mode=mode).data
        worst = max(worst, float(np.max(np.abs(planes[0] + 1j * planes[1] - naive_dft2(x)))))
    return worst


def parseval_and_round_trip(ctx: CheckContext) -> float:
    x = ctx.rng(4).standard_normal((3, 16, 16))
    spec = dft2(x)
    energy = np.sum(x ** 2)
    parseval = abs(energy - np.sum(np.abs(spec) ** 2) / 256.0) / energy
    round_trip = np.max(np.abs(dft2(spec, inverse=True).real - x))
    return float(max(parseval, round_trip))


def freq_loss_of_identical_images(ctx: CheckContext) -> float:
    x = Tensor(ctx.rng(5).uniform(0.0, 1.0, (3, 16, 16)))
    return float(abs(freq_loss(x, x).item()))


# diffusion checks

def schedule_identity(ctx: CheckContext) -> float:
    worst = 0.0
    for kind in ("linear", "cosine"):
        sched = make_schedule(200, kind=kind)
        ab = sched.alpha_bars
        worst = max(worst, abs(ab[0] - sched.alphas[0]))
        worst = max(worst, float(np.max(np.abs(ab[1:] / ab[:-1] - sched.alphas[1:]))))
    return float(worst)


def reverse_step_recovers_x0(ctx: CheckContext) -> float:
    sched = make_schedule(10)
    rng = ctx.rng(6)
    worst = 0.0
    for _ in range(100):
        x0 = Tensor(rng.uniform(-1.0, 1.0, (3, 4, 4)))
        eps = Tensor(rng.standard_normal((3, 4, 4)))
        x1 = q_sample(x0, 1, eps, sched)
        worst = max(worst, float(np.max(np.abs(ctx.reverse_step(x1, eps, 1, sched).data - x0.data))))
    return worst


def teacher_forced_sampling(ctx: CheckContext) -> float:
    sched = make_schedule(5)
    rng = ctx.rng(7)
    x0 = rng.uniform(-0.9, 0.9, (3, 8, 8))
    x_T = q_sample(Tensor(x0), sched.T, Tensor(rng.standard_normal(x0.shape)), sched)
    out = sample(TeacherForcedNet(x0), Tensor(np.zeros_like(x0)), sched, x_init=x_T, step_fn=ctx.reverse_step)
    return float(np.max(np.abs(out.data - x0)))


def single_step_sampling(ctx: CheckContext) -> float:
    sched = make_schedule(1, beta_start=0.05, beta_end=0.05)
    rng = ctx.rng(8)
    net = TeacherForcedNet(rng.uniform(-0.5, 0.5, (3, 4, 4)))
    x = Tensor(rng.standard_normal((3, 4, 4)))
    out = sample(net, Tensor(np.zeros((3, 4, 4))), sched, x_init=x, step_fn=ctx.reverse_step)
    eps_hat, _ = net(x, None, float(sched.alpha_bar(1)))
    direct = ctx.reverse_step(x, eps_hat, 1, sched).clamp(-1.0, 1.0)
    return float(np.max(np.abs(out.data - direct.data)))


def q_sample_variance(ctx: CheckContext) -> float:
    sched = make_schedule(50)
    t = 25
    eps = Tensor(ctx.rng(9).standard_normal(1_000_000))
    x_t = q_sample(Tensor(np.zeros(eps.shape)), t, eps, sched)
    target = 1.0 - float(sched.alpha_bar(t))
    return float(abs(np.var(x_t.data) - target) / target)


def log_variance_minimizer(ctx: CheckContext) -> float:
    rng = ctx.rng(10)
    eps = Tensor(rng.standard_normal((2, 3, 4, 4)))
    eps_hat = Tensor(rng.standard_normal((2, 3, 4, 4)))
    r2 = (eps.data - eps_hat.data) ** 2
    u_star = np.log(r2)
    at_star = heteroscedastic_nll(eps, eps_hat, Tensor(u_star)).item()
    for delta in (-0.1, -1e-3, 1e-3, 0.1):
        if heteroscedastic_nll(eps, eps_hat, Tensor(u_star + delta)).item() < at_star:
            return float("inf")
    return float(abs(at_star - np.mean(1.0 + u_star)))


# gradient checks

def _leaf(rng: np.random.Generator, *shape, low: Optional[float] = None) -> Tensor:
    data = rng.standard_normal(shape) if low is None else rng.uniform(low, low + 1.0, shape)
    return Tensor(data, requires_grad=True)


def gradients_of_tensor_ops(ctx: CheckContext) -> float:
    rng = ctx.rng(11)
    a, b = _leaf(rng, 3, 4), _leaf(rng, 4)
    pos = _leaf(rng, 3, 4, low=0.5)
    m1, m2 = _leaf(rng, 3, 5), _leaf(rng, 5, 2)
    worst = check_gradients(
        lambda: ((a * b).sigmoid() + a.silu() / (b * b + 1.0) - a.exp() * 0.1 + a.sin() * b.cos()).sum(),
        [a, b],
    )
    worst = max(worst, check_gradients(lambda: (pos.log() + pos.sqrt() + pos ** 1.5).mean(), [pos]))
    worst = max(worst, check_gradients(lambda: ((m1 @ m2).T.reshape(10) * 0.5).sum(), [m1, m2]))
    worst = max(worst, check_gradients(
        lambda: (concat([a[1:], a[:1] * 2.0], axis=0).transpose(1, 0).sum(axis=1) ** 2).sum(), [a],
    ))
    img = _leaf(rng, 2, 3, 3)
    weights = Tensor(rng.standard_normal((2, 8, 8)))
    worst = max(worst, check_gradients(
        lambda: (upsample_nearest2x(pad2d(img, 1, mode="edge")[:, :4, :4]) * weights).sum(), [img],
    ))
    re, im = _leaf(rng, 3, 3), _leaf(rng, 3, 3)
    worst = max(worst, check_gradients(lambda: (atan2(im, re) * 0.3 + hypot(re, im)).sum(), [re, im]))
    return worst


def gradients_of_convolutions(ctx: CheckContext) -> float:
    rng = ctx.rng(12)
    x = _leaf(rng, 2, 3, 6, 6)
    kernel, bias = _leaf(rng, 4, 3, 3, 3), _leaf(rng, 4)
    dw = _leaf(rng, 3, 3, 3)
    proj = Tensor(rng.standard_normal((2, 4, 6, 6)))
    proj_s2 = Tensor(rng.standard_normal((2, 4, 3, 3)))
    worst = check_gradients(lambda: (conv2d(x, kernel, bias=bias) * proj).sum(), [x, kernel, bias])
    worst = max(worst, check_gradients(
        lambda: (conv2d(x, kernel, stride=2, pad_mode="zeros") * proj_s2).sum(), [x, kernel],
    ))
    worst = max(worst, check_gradients(lambda: (depthwise_conv2d(x, dw) ** 2).sum(), [x, dw]))
    return worst


def gradients_of_kan(ctx: CheckContext) -> float:
    rng = ctx.rng(13)
    layer = init_kan_layer(3, 2, seed=ctx.seed)
    tokens = Tensor(rng.uniform(-0.95, 0.95, (5, 3)), requires_grad=True)
    proj = Tensor(rng.standard_normal((5, 2)))
    worst = check_gradients(
        lambda: (kan_layer_forward(layer, tokens) * proj).sum(),
        [tokens, layer.coefficients, layer.base_weight, layer.spline_weight],
    )
    block = KanBlock(4, num_layers=2, rng=rng)
    x = Tensor(rng.standard_normal((4, 4, 4)), requires_grad=True)
    proj_b = Tensor(rng.standard_normal((4, 4, 4)))
    worst = max(worst, check_gradients(
        lambda: (block(x) * proj_b).sum(), [x] + block.parameters(), max_entries=6, seed=ctx.seed,
    ))
    return worst


def gradients_of_spectral_ops(ctx: CheckContext) -> float:
    rng = ctx.rng(14)
    x = Tensor(rng.uniform(0.0, 1.0, (2, 8, 8)), requires_grad=True)
    target = Tensor(rng.uniform(0.0, 1.0, (2, 8, 8)))
    proj = Tensor(rng.standard_normal((2, 2, 8, 8)))
    re, im = _leaf(rng, 6, 5), _leaf(rng, 6, 5)
    proj_i = Tensor(rng.standard_normal((2, 6, 5)))
    cfg = FreqLossConfig(gamma_amp=1.0, gamma_pha=1.0)
    worst = check_gradients(lambda: (fft2(x) * proj).sum(), [x])
    worst = max(worst, check_gradients(lambda: (ifft2(re, im) * proj_i).sum(), [re, im]))
    worst = max(worst, check_gradients(lambda: freq_loss(x, target, cfg), [x]))
    return worst


def gradients_of_tiny_denoiser(ctx: CheckContext) -> float:
    rng = ctx.rng(15)
    net = DenoiserNet(tiny_denoiser_config(), rng=rng)
    x_t = Tensor(rng.standard_normal((1, 3, 16, 16)), requires_grad=True)
    y = Tensor(rng.uniform(-1.0, 1.0, (1, 3, 16, 16)))
    r1 = Tensor(rng.standard_normal((1, 3, 16, 16)))
    r2 = Tensor(rng.standard_normal((1, 3, 16, 16)))

    def loss():
        eps_hat, u = net(x_t, y, 0.7)
        return (eps_hat * r1).sum() + (u * r2).sum()

    params = net.parameters()[::6] + [net.kan_blocks()[0].layers[0].coefficients]
    return check_gradients(loss, [x_t] + params, max_entries=4, seed=ctx.seed)


# two-phase audits

def _phase2_setup(ctx: CheckContext, size: int, offset: int):
    rng = ctx.rng(offset)
    net = DenoiserNet(tiny_denoiser_config(), rng=rng)
    freeze_uncertainty(net)
    x0 = Tensor(rng.uniform(-1.0, 1.0, (2, 3, size, size)))
    y = Tensor(rng.uniform(-1.0, 1.0, (2, 3, size, size)))
    return net, x0, y, make_schedule(20)


def phase2_reaches_spline_coefficients(ctx: CheckContext) -> float:
    net, x0, y, sched = _phase2_setup(ctx, 32, 16)
    loss = phase2_loss(net, x0, y, sched, FreqLossConfig(), RngStreams(ctx.seed).step(0, phase=2))
    loss.backward()
    coefs = [layer.coefficients for block in net.kan_blocks() for layer in block.layers]
    nonzero = sum(int(np.count_nonzero(c.grad)) for c in coefs if c.grad is not None)
    return nonzero / sum(c.size for c in coefs)


def phase2_keeps_uncertainty_frozen(ctx: CheckContext) -> float:
    net, x0, y, sched = _phase2_setup(ctx, 8, 17)
    frozen = [p for m in net.uncertainty_modules() for p in m.parameters()]
    before = [p.data.copy() for p in frozen]
    optimizer = Adam(net.named_parameters(), lr=1e-2)
    streams = RngStreams(ctx.seed)
    for step in range(3):
        terms = phase2_terms(net, x0, y, sched, FreqLossConfig(), streams.step(step, phase=2))
        optimizer.zero_grad()
        terms.total.backward()
        optimizer.step()
    return float(sum(not np.array_equal(b, p.data) for b, p in zip(before, frozen)))


CHECKS: List[Check] = [
    Check("spline partition of unity", partition_of_unity, 1e-12),
    Check("spline basis vs Cox-de Boor recursion", basis_matches_recursion, 1e-12),
    Check("KAN layer vs triple loop", kan_layer_matches_loops, 1e-12),
    Check("fft2 vs naive DFT", fft_matches_dft, 1e-6),
    Check("Parseval and inverse round trip", parseval_and_round_trip, 1e-9),
    Check("freq_loss(x, x) = 0", freq_loss_of_identical_images, 1e-12),
    Check("schedule alpha_bar ratio identity", schedule_identity, 1e-12),
    Check("reverse step recovers x0 at t=1", reverse_step_recovers_x0, 1e-10),
    Check("teacher-forced sampling recovers x0", teacher_forced_sampling, 1e-4),
    Check("T=1 sampling equals one reverse step", single_step_sampling, 1e-12),
    Check("log-variance minimizer", log_variance_minimizer, 1e-12),
    Check("gradients: tensor ops", over_seeds(gradients_of_tensor_ops), GRAD_TOL),
    Check("q_sample variance (1e6 draws)", q_sample_variance, 1e-2, level="full"),
    Check("gradients: convolutions", over_seeds(gradients_of_convolutions), GRAD_TOL, level="full"),
    Check("gradients: KAN layer and block", over_seeds(gradients_of_kan), GRAD_TOL, level="full"),
    Check("gradients: fft2, ifft2, freq_loss", over_seeds(gradients_of_spectral_ops), GRAD_TOL, level="full"),
    Check("gradients: tiny denoiser 16x16", gradients_of_tiny_denoiser, GRAD_TOL, level="full"),
    Check("phase-2 gradient reaches spline coefficients", phase2_reaches_spline_coefficients, 0.99,
          level="full", at_least=True),
    Check("phase-2 keeps uncertainty head frozen", phase2_keeps_uncertainty_frozen, 0.0, level="full"),
]


def select_checks(level: str = "quick", names: Optional[Sequence[str]] = None) -> List[Check]:
    if level not in LEVELS:
        raise ValueError(f"Unknown level '{level}', expected one of {LEVELS}")
    checks = [c for c in CHECKS if level == "full" or c.level == "quick"]
    if names:
        checks = [c for c in checks if c.name in names]
    return checks


def run_check(check: Check, ctx: CheckContext) -> CheckResult:
    started = time.perf_counter()
    detail = ""
    try:
        with precision("f64"):
            value = float(check.fn(ctx))
    except Exception as exc:
        logger.exception("Check '%s' raised", check.name)
        value, detail = float("nan"), f"{type(exc).__name__}: {exc}"
    seconds = time.perf_counter() - started
    return CheckResult(
        name=check.name, passed=check.passes(value), value=value, tolerance=check.tolerance,
        seconds=seconds, at_least=check.at_least, detail=detail,
    )


def run_suite(
    level: str = "quick",
    seed: int = 0,
    inject_sign_error: bool = False,
    names: Optional[Sequence[str]] = None,
) -> List[CheckResult]:
    """
    Run the property checks of a level.

    Args:
        level: 'quick' or 'full'
        seed: Seed of every random input
        inject_sign_error: Flip the sign of the reverse step's noise coefficient
            (the reverse-step checks must then fail)
        names: Restrict to these check names

    Returns:
        One result per check, in suite order
    """
    ctx = CheckContext(seed=seed)
    if inject_sign_error:
        ctx.reverse_step = sign_flipped_reverse_step
    results = []
    for check in select_checks(level, names):
        result = run_check(check, ctx)
        logger.debug("%s: %s (%.3gs)", check.name, "pass" if result.passed else "FAIL", result.seconds)
        results.append(result)
    return results


def print_report(results: Sequence[CheckResult]) -> None:
    """Print per-check status, measured value, tolerance and timing."""
    print("\n" + "=" * 60)
    print("VERIFICATION")
    print("=" * 60)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        op = ">=" if r.at_least else "<="
        print(f"  [{status}] {r.name}")
        print(f"         value {r.value:.3e} {op} {r.tolerance:.1e}   {r.seconds:.2f}s")
        if r.detail:
            print(f"         {r.detail}")
    passed = sum(r.passed for r in results)
    print("=" * 60)
    print(f"{passed}/{len(results)} checks passed in {sum(r.seconds for r in results):.1f}s")
    print("=" * 60)
