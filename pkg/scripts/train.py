"""Training script for the KAN diffusion enhancer."""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.errors import CheckpointError, ConfigError, DatasetError, ImageNotFoundError
from src.models import count_parameters, parameter_breakdown
from src.training import PRESETS, Trainer, load_config
from scripts.common import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, setup_logging

logger = logging.getLogger("train")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Train the KAN diffusion enhancer (phase 1 or 2)')
    parser.add_argument('--config', type=str, default=None, help='INI config file')
    parser.add_argument('--preset', type=str, default='desk', choices=sorted(PRESETS),
                        help='Defaults applied before the config file')
    parser.add_argument('--phase', type=int, default=None, choices=[1, 2], help='Training phase')
    parser.add_argument('--resume', type=str, default=None, help='Checkpoint of the same phase to continue')
    parser.add_argument('--init', type=str, default=None,
                        help='Phase-1 checkpoint a phase-2 run starts from')
    parser.add_argument('--steps', type=int, default=None, help='Total steps of this phase')
    parser.add_argument('--seed', type=int, default=None, help='Run seed')
    parser.add_argument('--data', type=str, default=None, help='Dataset root with low/ and high/')
    parser.add_argument('--checkpoint-dir', type=str, default=None, help='Checkpoint directory')
    parser.add_argument('--set', dest='overrides', action='append', default=[], metavar='SECTION.KEY=VALUE',
                        help='Override one config value (repeatable)')
    parser.add_argument('--no-progress', action='store_true', help='Hide the progress bar')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    return parser


def flag_overrides(args) -> List[str]:
    overrides = list(args.overrides)
    if args.phase is not None:
        overrides.append(f"train.phase={args.phase}")
    if args.seed is not None:
        overrides.append(f"train.seed={args.seed}")
    if args.init is not None:
        overrides.append(f"train.init_checkpoint={args.init}")
    if args.data is not None:
        overrides.append(f"data.root={args.data}")
    if args.checkpoint_dir is not None:
        overrides.append(f"io.checkpoint_dir={args.checkpoint_dir}")
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)

    try:
        config = load_config(args.config, args.preset, flag_overrides(args))
        if args.steps is not None:
            config.set("train", f"phase{config.train.phase}_steps", str(args.steps))
            config.validate()
        trainer = Trainer(config, resume=args.resume)
    except ConfigError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CheckpointError as exc:
        logger.error("%s", exc)
        return EXIT_FAILURE

    print("=" * 60)
    print(f"PHASE {config.train.phase} TRAINING")
    print("=" * 60)
    print(f"Data: {config.data.root}")
    print(f"Steps: {trainer.start_step} -> {trainer.total_steps}")
    print(f"Batch size: {config.train.batch_size}, patch: {config.train.patch_size}, lr: {config.train.lr}")
    print(f"Parameters: {count_parameters(trainer.net) / 1e6:.3f}M")
    for name, count in parameter_breakdown(trainer.net).items():
        print(f"  {name:<18} {count / 1e6:.4f}M")

    try:
        final = trainer.train(verbose=not args.no_progress)
    except (DatasetError, ImageNotFoundError) as exc:
        logger.error("Dataset problem: %s", exc)
        return EXIT_FAILURE
    except (ValueError, FloatingPointError) as exc:
        logger.error("%s", exc)
        return EXIT_FAILURE

    print(f"\nTraining complete! Final checkpoint: {final}")
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
