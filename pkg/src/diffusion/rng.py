"""Named random substreams derived from one run seed."""
from dataclasses import dataclass

import numpy as np

STREAMS = ("init", "noise", "timestep", "data", "sample")


@dataclass
class StepRng:
    """Generators used by one training step."""
    timestep: np.random.Generator
    noise: np.random.Generator

    @classmethod
    def from_generator(cls, rng: np.random.Generator) -> "StepRng":
        return cls(timestep=rng, noise=rng)


class RngStreams:
    """
    Independent, reproducible generators keyed by purpose.

    Each stream is seeded from ``SeedSequence(seed, spawn_key=(stream, ...))`` so
    draws in one stream never shift another, and per-step generators depend only
    on (seed, phase, step), which keeps resumed runs on the same trajectory.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)

    def _sequence(self, name: str, *extra: int) -> np.random.SeedSequence:
        if name not in STREAMS:
            raise ValueError(f"Unknown RNG stream '{name}', expected one of {STREAMS}")
        return np.random.SeedSequence(self.seed, spawn_key=(STREAMS.index(name),) + tuple(extra))

    def generator(self, name: str, *extra: int) -> np.random.Generator:
        return np.random.default_rng(self._sequence(name, *extra))

    def seed_for(self, name: str, *extra: int) -> int:
        """A 32-bit integer seed, for consumers that take plain ints."""
        return int(self._sequence(name, *extra).generate_state(1)[0])

    def step(self, step: int, phase: int = 1) -> StepRng:
        return StepRng(
            timestep=self.generator("timestep", int(phase), int(step)),
            noise=self.generator("noise", int(phase), int(step)),
        )
