"""Enhance a folder of low-light PNGs with a trained checkpoint."""
import argparse
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional

sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
from tqdm import tqdm

from src.data import load_png, save_png
from src.errors import CheckpointError
from src.models import count_parameters
from src.training import load_trained_model
from scripts.common import EXIT_FAILURE, EXIT_OK, setup_logging

logger = logging.getLogger("enhance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Enhance low-light images')
    parser.add_argument('--ckpt', type=str, required=True, help='Trained checkpoint')
    parser.add_argument('--in', dest='input_dir', type=str, required=True, help='Folder of PNG inputs')
    parser.add_argument('--out', dest='output_dir', type=str, required=True, help='Output folder')
    parser.add_argument('--seed', type=int, default=0, help='Sampling seed')
    parser.add_argument('--stochastic', action='store_true', help='Add the sigma_t noise term while sampling')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    return parser


def enhance_folder(model, input_dir: Path, output_dir: Path, seed: int = 0, stochastic: bool = False,
                   progress: bool = True):
    """
    Enhance every PNG in a folder; unreadable or unsupported files are skipped.

    Returns:
        (written file names, per-image wall times in seconds)
    """
    enhancer = model.enhancer(seed=seed, stochastic=stochastic)
    written, times = [], []
    for path in tqdm(sorted(input_dir.glob("*.png")), desc="Enhancing", disable=not progress):
        started = time.perf_counter()
        try:
            image = load_png(path)
            out = enhancer.enhance(image)
            save_png(out, output_dir / path.name)
        except (ValueError, OSError) as exc:
            logger.error("Skipping %s: %s", path.name, exc)
            continue
        times.append(time.perf_counter() - started)
        written.append(path.name)
    return written, times


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)

    input_dir, output_dir = Path(args.input_dir), Path(args.output_dir)
    if not input_dir.is_dir():
        logger.error("Input folder not found: %s", input_dir)
        return EXIT_FAILURE
    try:
        model = load_trained_model(args.ckpt)
    except CheckpointError as exc:
        logger.error("%s", exc)
        return EXIT_FAILURE

    inputs = sorted(input_dir.glob("*.png"))
    if not inputs:
        logger.error("No PNG files in %s", input_dir)
        return EXIT_FAILURE

    output_dir.mkdir(parents=True, exist_ok=True)
    written, times = enhance_folder(model, input_dir, output_dir, args.seed, args.stochastic,
                                    progress=not args.verbose)

    print("=" * 60)
    print(f"Enhanced {len(written)}/{len(inputs)} images into {output_dir}")
    print(f"Parameters: {count_parameters(model.net) / 1e6:.3f}M")
    if times:
        print(f"Mean time per image: {np.mean(times):.3f}s")
    print("=" * 60)
    return EXIT_OK if written else EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())
