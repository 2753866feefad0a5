"""Variance schedules for the forward diffusion process."""
import math
from dataclasses import dataclass

import numpy as np

from src.errors import ScheduleError

SCHEDULE_KINDS = ("linear", "cosine")

# Offset of the cosine schedule; keeps β_1 away from zero
COSINE_OFFSET = 0.008
MAX_BETA = 0.999


@dataclass(frozen=True)
class NoiseSchedule:
    """
    β_t, α_t and ᾱ_t tables for t = 1..T.

    Arrays are stored 0-based: ``betas[t - 1]`` is β_t.
    """
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray

    @classmethod
    def from_betas(cls, betas, validate: bool = True) -> "NoiseSchedule":
        """
        Build the cumulative tables from β.

        Args:
            betas: β_1..β_T
            validate: Require every β in (0, 1); disable only for degenerate test schedules
        """
        betas = np.asarray(betas, dtype=np.float64).reshape(-1)
        if betas.size == 0:
            raise ScheduleError("Schedule needs at least one timestep")
        if validate and not np.all((betas > 0.0) & (betas < 1.0)):
            raise ScheduleError(f"Every β must lie in (0, 1), got range [{betas.min()}, {betas.max()}]")
        alphas = 1.0 - betas
        return cls(betas=betas, alphas=alphas, alpha_bars=np.cumprod(alphas))

    @property
    def T(self) -> int:
        return int(self.betas.size)

    def check_timestep(self, t, allow_zero: bool = False) -> np.ndarray:
        """Validate scalar or per-sample timesteps and return them as an int array."""
        t_arr = np.asarray(t)
        if not np.issubdtype(t_arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(t_arr, 1), 0)):
                raise ScheduleError(f"Timesteps must be integers, got {t}")
            t_arr = t_arr.astype(np.int64)
        low = 0 if allow_zero else 1
        if np.any(t_arr < low) or np.any(t_arr > self.T):
            raise ScheduleError(f"Timestep {t} outside [{low}, {self.T}]")
        return t_arr

    def alpha(self, t) -> np.ndarray:
        t = self.check_timestep(t)
        return self.alphas[t - 1]

    def beta(self, t) -> np.ndarray:
        t = self.check_timestep(t)
        return self.betas[t - 1]

    def alpha_bar(self, t) -> np.ndarray:
        """ᾱ_t, with the ᾱ_0 = 1 convention."""
        t = self.check_timestep(t, allow_zero=True)
        return np.where(t == 0, 1.0, self.alpha_bars[np.maximum(t, 1) - 1])


def make_schedule(T: int, beta_start: float = 1e-4, beta_end: float = 2e-2, kind: str = "linear") -> NoiseSchedule:
    """
    Build a noise schedule.

    Args:
        T: Number of timesteps
        beta_start: β_1 (linear schedule)
        beta_end: β_T (linear schedule)
        kind: 'linear' or 'cosine'

    Returns:
        NoiseSchedule satisfying 0 < ᾱ_T < ... < ᾱ_1 < 1

    Raises:
        ScheduleError: invalid T, β range or kind
    """
    if int(T) < 1:
        raise ScheduleError(f"T must be >= 1, got {T}")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ScheduleError(
            f"Need 0 < beta_start <= beta_end < 1, got beta_start={beta_start}, beta_end={beta_end}"
        )
    if kind == "linear":
        betas = np.linspace(beta_start, beta_end, int(T), dtype=np.float64)
    elif kind == "cosine":
        steps = np.arange(int(T) + 1, dtype=np.float64) / T
        f = np.cos((steps + COSINE_OFFSET) / (1.0 + COSINE_OFFSET) * math.pi / 2.0) ** 2
        betas = np.clip(1.0 - f[1:] / f[:-1], beta_start, MAX_BETA)
    else:
        raise ScheduleError(f"Unknown schedule kind '{kind}', expected one of {SCHEDULE_KINDS}")
    return NoiseSchedule.from_betas(betas)
