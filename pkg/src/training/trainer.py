"""Two-phase training of the KAN denoiser."""
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.autodiff import Adam, Tensor, get_default_dtype, precision
from src.data import PairedDataset, PatchPairDataset, make_loader
from src.diffusion import Enhancer, NoiseSchedule, RngStreams, phase1_terms, phase2_terms
from src.errors import CheckpointError, ConfigError
from src.models import (
    Checkpoint, DenoiserNet, freeze_uncertainty, load_checkpoint, restore_weights, save_checkpoint,
)
from .config import RESOLVED_CONFIG_NAME, RunConfig, config_from_text

logger = logging.getLogger(__name__)

LOG_COLUMNS = ["step", "phase", "loss", "noise_loss", "freq_loss", "lr", "wall_time"]
LOG_NAME = "train_log.csv"
DTYPE_PRECISIONS = {"float32": "f32", "float64": "f64"}


def checkpoint_name(phase: int, step: Optional[int] = None) -> str:
    if step is None:
        return f"phase{phase}_final.safetensors"
    return f"phase{phase}_step{step:07d}.safetensors"


class Trainer:
    """
    Runs one training phase.

    Phase 1 starts from a fresh net (or resumes). Phase 2 loads the phase-1
    checkpoint named by ``train.init_checkpoint``, freezes the uncertainty head
    and trains with the frequency loss added.
    """

    def __init__(self, config: RunConfig, resume: Optional[Union[str, Path]] = None):
        """
        Initialize trainer.

        Args:
            config: Validated run configuration
            resume: Checkpoint of the same phase to continue from

        Raises:
            ConfigError: phase-2 run without a usable phase-1 checkpoint
            CheckpointMismatchError: checkpoint shapes disagree with the config
        """
        config.check_run(resume)
        self.config = config
        self.phase = config.train.phase
        self.streams = RngStreams(config.train.seed)
        self.checkpoint_dir = Path(config.io.checkpoint_dir)
        self.history: List[dict] = []
        self.losses: List[float] = []
        self.start_step = 0

        with precision(config.train.precision):
            self.dtype = get_default_dtype()
            self.schedule: NoiseSchedule = config.schedule.build()
            self.net = DenoiserNet(config.model, rng=self.streams.generator("init"))

            start: Optional[Checkpoint] = None
            if resume is not None:
                start = load_checkpoint(resume)
                if start.phase != self.phase:
                    raise ConfigError(
                        f"Cannot resume phase {self.phase} from a phase-{start.phase} checkpoint; "
                        f"use train.init_checkpoint to start phase 2"
                    )
                self.start_step = start.step
            elif self.phase == 2:
                start = load_checkpoint(config.train.init_checkpoint)
                if start.phase != 1:
                    raise ConfigError(f"{config.train.init_checkpoint} is not a phase-1 checkpoint")

            if start is not None:
                restore_weights(self.net, start)
                logger.info("Loaded weights from step %d of phase %d", start.step, start.phase)
            if self.phase == 2:
                freeze_uncertainty(self.net)

            self.optimizer = Adam(self.net.named_parameters(), lr=config.train.lr)
            if resume is not None and start.adam_arrays:
                self.optimizer.load_state_arrays(start.adam_arrays, start.adam_steps)

        if self.start_step > self.total_steps:
            raise CheckpointError(
                f"Checkpoint is at step {self.start_step}, past the configured {self.total_steps} steps"
            )
        if resume is not None or self.phase == 2:
            self._load_history()

    @property
    def total_steps(self) -> int:
        return self.config.train.steps_for(self.phase)

    def _load_history(self) -> None:
        path = self.checkpoint_dir / LOG_NAME
        if path.is_file():
            frame = pd.read_csv(path)
            keep = frame[(frame["phase"] != self.phase) | (frame["step"] <= self.start_step)]
            self.history = keep.to_dict("records")

    def _loader(self, pairs):
        cfg = self.config.train
        remaining = self.total_steps - self.start_step
        dataset = PatchPairDataset(
            pairs,
            patch_size=cfg.patch_size,
            num_samples=remaining * cfg.batch_size,
            seed=self.streams.seed_for("data", self.phase),
            offset=self.start_step * cfg.batch_size,
        )
        return make_loader(dataset, cfg.batch_size, cfg.num_workers, dtype=self.dtype)

    def train_step(self, step: int, low: np.ndarray, high: np.ndarray):
        """One optimizer update; returns the loss terms as floats."""
        x0 = Tensor(high, dtype=self.dtype)
        y = Tensor(low, dtype=self.dtype)
        rng = self.streams.step(step, self.phase)
        if self.phase == 1:
            terms = phase1_terms(self.net, x0, y, self.schedule, rng)
        else:
            terms = phase2_terms(self.net, x0, y, self.schedule, self.config.freq, rng)

        self.optimizer.zero_grad()
        terms.total.backward()
        self.optimizer.step()

        loss = float(terms.total.data)
        if not math.isfinite(loss):
            raise FloatingPointError(f"Non-finite loss {loss} at step {step} of phase {self.phase}")
        noise = float(terms.noise.data)
        freq = float(terms.freq.data) if terms.freq is not None else 0.0
        return loss, noise, freq

    def save(self, step: int, final: bool = False) -> Path:
        path = self.checkpoint_dir / checkpoint_name(self.phase, None if final else step)
        save_checkpoint(path, self.net, self.config.to_ini(), step, self.phase, self.optimizer)
        self.write_log()
        return path

    def write_log(self) -> Path:
        path = self.checkpoint_dir / LOG_NAME
        pd.DataFrame(self.history, columns=LOG_COLUMNS).to_csv(path, index=False)
        return path

    def train(self, verbose: bool = True) -> Path:
        """
        Train until ``steps_for(phase)`` and write the final checkpoint.

        Returns:
            Path of the final checkpoint
        """
        cfg = self.config
        self.checkpoint_dir.mkdir(parents=True, exist_ok=True)
        cfg.write(self.checkpoint_dir / RESOLVED_CONFIG_NAME)

        dataset = PairedDataset(cfg.data.root, cfg.data.split, check_sizes=cfg.data.check_sizes)
        pairs = dataset.load_all()
        logger.info(
            "Phase %d: %d pairs, steps %d..%d, %d parameters",
            self.phase, len(pairs), self.start_step, self.total_steps, self.net.num_parameters(),
        )

        started = time.perf_counter()
        step = self.start_step
        with precision(cfg.train.precision):
            loader = self._loader(pairs)
            iterator = tqdm(loader, desc=f"Phase {self.phase}", initial=step,
                            total=self.total_steps, disable=not verbose)
            for low, high in iterator:
                loss, noise, freq = self.train_step(step, low, high)
                if self.phase == 2 and step == 0:
                    ratio = freq / noise if noise else math.inf
                    logger.info("Phase-2 step 0: freq_loss / noise_loss = %.4g", ratio)
                self.losses.append(loss)
                step += 1

                if step % cfg.io.log_interval == 0 or step == self.total_steps:
                    self.history.append({
                        "step": step, "phase": self.phase, "loss": loss, "noise_loss": noise,
                        "freq_loss": freq, "lr": cfg.train.lr,
                        "wall_time": time.perf_counter() - started,
                    })
                    iterator.set_postfix(loss=f"{loss:.4f}")
                if step % cfg.io.checkpoint_interval == 0 and step < self.total_steps:
                    self.save(step)

        final = self.save(step, final=True)
        logger.info("Phase %d finished at step %d in %.1fs", self.phase, step, time.perf_counter() - started)
        return final


@dataclass
class TrainedModel:
    """A net restored from a checkpoint together with its run config."""
    net: DenoiserNet
    schedule: NoiseSchedule
    config: RunConfig
    checkpoint: Checkpoint

    def enhancer(self, seed: int = 0, stochastic: bool = False) -> Enhancer:
        return Enhancer(
            self.net, self.schedule, self.config.model.divisor,
            seed=seed, stochastic=stochastic, dtype=self.net_dtype,
        )

    @property
    def net_dtype(self):
        return np.dtype(self.checkpoint.dtype).type


def load_trained_model(path: Union[str, Path]) -> TrainedModel:
    """
    Rebuild the net described by a checkpoint's stored config and load its weights.

    Raises:
        CheckpointError: unreadable checkpoint or stored config
        CheckpointMismatchError: weights disagree with the stored config
    """
    ckpt = load_checkpoint(path)
    try:
        config = config_from_text(ckpt.config_text)
    except ConfigError as exc:
        raise CheckpointError(f"Checkpoint {path} carries an invalid config: {exc}") from exc
    with precision(DTYPE_PRECISIONS.get(ckpt.dtype, "f32")):
        net = DenoiserNet(config.model, rng=np.random.default_rng(0))
        restore_weights(net, ckpt)
    return TrainedModel(net=net, schedule=config.schedule.build(), config=config, checkpoint=ckpt)
