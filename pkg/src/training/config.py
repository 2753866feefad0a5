"""
Run configuration.

A RunConfig is a tree of dataclasses, one per INI section. Values are layered:
dataclass defaults, then a preset, then an INI file, then ``section.key=value``
overrides from the command line.

Presets:
    desk   default; small patches and a few thousand steps per phase
    tiny   the smallest net that still learns the synthetic pairs
    full   1e6 phase-1 / 2e6 phase-2 iterations, batch 8, patch 96, lr 1e-4
"""
import configparser
import dataclasses
import logging
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

from src.diffusion import NoiseSchedule, make_schedule
from src.errors import ConfigError, ScheduleError
from src.frequency import FreqLossConfig
from src.models import DenoiserConfig, KanConfig

logger = logging.getLogger(__name__)

PRECISIONS = ("f32", "f64")
SECTIONS = ("model", "kan", "schedule", "train", "freq", "data", "io")
RESOLVED_CONFIG_NAME = "resolved_config.ini"


@dataclass
class ScheduleConfig:
    T: int = 200
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    kind: str = "linear"

    def build(self) -> NoiseSchedule:
        return make_schedule(self.T, self.beta_start, self.beta_end, self.kind)


@dataclass
class TrainConfig:
    """
    Optimization settings.

    Attributes:
        phase: 1 (noise + uncertainty) or 2 (frozen uncertainty + frequency loss)
        phase1_steps: Total step count of phase 1
        phase2_steps: Total step count of phase 2
        init_checkpoint: Phase-1 checkpoint a phase-2 run starts from
        precision: 'f32' or 'f64'
        num_workers: DataLoader prefetch workers (0 = main process)
    """
    phase: int = 1
    phase1_steps: int = 2000
    phase2_steps: int = 2000
    batch_size: int = 8
    patch_size: int = 96
    lr: float = 1e-4
    seed: int = 0
    init_checkpoint: str = ""
    precision: str = "f32"
    num_workers: int = 0

    def steps_for(self, phase: Optional[int] = None) -> int:
        return self.phase1_steps if (phase or self.phase) == 1 else self.phase2_steps


@dataclass
class DataConfig:
    root: str = "data/synthetic"
    split: str = ""
    check_sizes: bool = True


@dataclass
class IoConfig:
    checkpoint_dir: str = "checkpoints"
    log_interval: int = 50
    checkpoint_interval: int = 1000


PRESETS: Dict[str, Dict[str, Any]] = {
    "desk": {
        "train.patch_size": 48,
        "train.phase1_steps": 5000,
        "train.phase2_steps": 2000,
    },
    "tiny": {
        "model.base_channels": 8,
        "model.channel_mults": [1, 2],
        "model.num_kan_blocks": 1,
        "model.time_embed_dim": 16,
        "model.groups": 4,
        "kan.layers_per_block": 2,
        "schedule.T": 50,
        "schedule.beta_end": 5e-2,
        "train.batch_size": 4,
        "train.patch_size": 32,
        "train.lr": 1e-3,
        "train.phase1_steps": 4000,
        "train.phase2_steps": 1000,
        "io.log_interval": 20,
        "io.checkpoint_interval": 500,
    },
    "full": {
        "model.base_channels": 64,
        "model.channel_mults": [1, 2, 4, 8],
        "schedule.T": 1000,
        "train.batch_size": 8,
        "train.patch_size": 96,
        "train.lr": 1e-4,
        "train.phase1_steps": 1_000_000,
        "train.phase2_steps": 2_000_000,
        "io.checkpoint_interval": 10_000,
    },
}


@dataclass
class RunConfig:
    """Every setting of a training or enhancement run."""
    model: DenoiserConfig = field(default_factory=DenoiserConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    freq: FreqLossConfig = field(default_factory=FreqLossConfig)
    data: DataConfig = field(default_factory=DataConfig)
    io: IoConfig = field(default_factory=IoConfig)

    @property
    def kan(self) -> KanConfig:
        return self.model.kan

    def section(self, name: str):
        if name not in SECTIONS:
            raise ConfigError(f"Unknown config section [{name}], expected one of {list(SECTIONS)}")
        return getattr(self, name)

    def set(self, section: str, key: str, value: Any) -> None:
        """Set one field, coercing strings to the field's type."""
        obj = self.section(section)
        hints = _field_types(obj, section)
        if key not in hints:
            raise ConfigError(f"Unknown key '{key}' in section [{section}], expected one of {sorted(hints)}")
        if isinstance(value, str):
            value = _coerce(value, hints[key], f"{section}.{key}")
        setattr(obj, key, value)

    def apply(self, values: Dict[str, Any]) -> "RunConfig":
        for dotted, value in values.items():
            section, key = _split_key(dotted)
            self.set(section, key, value)
        return self

    def validate(self) -> "RunConfig":
        """
        Re-run every section's checks after overrides.

        Raises:
            ConfigError: describing the first invalid value
        """
        try:
            for name in SECTIONS:
                obj = self.section(name)
                post_init = getattr(obj, "__post_init__", None)
                if post_init is not None:
                    post_init()
            self.model.kan.grid()
            self.schedule.build()
        except (ValueError, ScheduleError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.train.phase not in (1, 2):
            raise ConfigError(f"train.phase must be 1 or 2, got {self.train.phase}")
        if self.train.precision not in PRECISIONS:
            raise ConfigError(f"train.precision must be one of {PRECISIONS}, got '{self.train.precision}'")
        for key in ("phase1_steps", "phase2_steps", "batch_size", "patch_size"):
            if getattr(self.train, key) <= 0:
                raise ConfigError(f"train.{key} must be positive")
        if self.train.patch_size % self.model.divisor:
            raise ConfigError(
                f"train.patch_size {self.train.patch_size} must be a multiple of {self.model.divisor}"
            )
        if self.io.log_interval <= 0 or self.io.checkpoint_interval <= 0:
            raise ConfigError("io intervals must be positive")
        return self

    def check_run(self, resume: Optional[Union[str, Path]] = None) -> None:
        """
        Checks that depend on the filesystem.

        Raises:
            ConfigError: phase 2 without an existing phase-1 checkpoint, or a
                missing resume checkpoint
        """
        if resume is not None:
            if not Path(resume).is_file():
                raise ConfigError(f"Resume checkpoint not found: {resume}")
            return
        if self.train.phase == 2:
            if not self.train.init_checkpoint:
                raise ConfigError("Phase 2 needs train.init_checkpoint pointing at a phase-1 checkpoint")
            if not Path(self.train.init_checkpoint).is_file():
                raise ConfigError(f"Phase-1 checkpoint not found: {self.train.init_checkpoint}")

    def to_ini(self) -> str:
        lines = []
        for name in SECTIONS:
            obj = self.section(name)
            lines.append(f"[{name}]")
            lines.extend(f"{k} = {_format(getattr(obj, k))}" for k in _field_types(obj, name))
            lines.append("")
        return "\n".join(lines)

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_ini())
        return path


def _field_types(obj, section: str) -> Dict[str, type]:
    hints = typing.get_type_hints(type(obj))
    names = [f.name for f in dataclasses.fields(obj)]
    # the kan sub-config is its own section
    return {n: hints[n] for n in names if not (section == "model" and n == "kan")}


def _split_key(dotted: str):
    section, sep, key = dotted.partition(".")
    if not sep or not key:
        raise ConfigError(f"Expected section.key, got '{dotted}'")
    return section.strip(), key.strip()


def _coerce(value: str, typ, where: str):
    value = value.strip()
    try:
        if typ is bool:
            states = configparser.ConfigParser.BOOLEAN_STATES
            if value.lower() not in states:
                raise ValueError(f"not a boolean: '{value}'")
            return states[value.lower()]
        if typ is int:
            try:
                return int(value)
            except ValueError:
                as_float = float(value)
                if not as_float.is_integer():
                    raise
                return int(as_float)
        if typ is float:
            return float(value)
        if typing.get_origin(typ) in (list, List):
            (item,) = typing.get_args(typ)
            parts = value.strip("[]").split(",")
            return [item(p.strip()) for p in parts if p.strip()]
        return value
    except ValueError as exc:
        raise ConfigError(f"Bad value for {where}: {exc}") from exc


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ", ".join(str(v) for v in value)
    return str(value)


def _apply_parser(cfg: RunConfig, parser: configparser.ConfigParser, source: str) -> None:
    for name in parser.sections():
        if name not in SECTIONS:
            raise ConfigError(f"Unknown config section [{name}] in {source}")
        for key, value in parser[name].items():
            cfg.set(name, key, value)


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    return parser


def apply_ini_text(cfg: RunConfig, text: str, source: str = "<string>") -> RunConfig:
    parser = _parser()
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"Cannot parse {source}: {exc}") from exc
    _apply_parser(cfg, parser, source)
    return cfg


def apply_overrides(cfg: RunConfig, overrides: Iterable[str]) -> RunConfig:
    """Apply ``section.key=value`` strings."""
    for item in overrides:
        dotted, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"Expected section.key=value, got '{item}'")
        section, key = _split_key(dotted)
        cfg.set(section, key, value)
    return cfg


def from_preset(name: str = "desk") -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"Unknown preset '{name}', expected one of {sorted(PRESETS)}")
    return RunConfig().apply(PRESETS[name])


def load_config(
    path: Optional[Union[str, Path]] = None,
    preset: str = "desk",
    overrides: Iterable[str] = (),
) -> RunConfig:
    """
    Build a validated RunConfig.

    Args:
        path: Optional INI file
        preset: Preset applied on top of the defaults
        overrides: ``section.key=value`` strings applied last

    Raises:
        ConfigError: unknown section or key, bad value, missing file
    """
    cfg = from_preset(preset)
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}")
        apply_ini_text(cfg, path.read_text(), source=str(path))
        logger.debug("Applied config file %s", path)
    apply_overrides(cfg, overrides)
    return cfg.validate()


def config_from_text(text: str) -> RunConfig:
    """Rebuild the config stored in a checkpoint (a complete INI dump)."""
    return apply_ini_text(RunConfig(), text, source="checkpoint").validate()
