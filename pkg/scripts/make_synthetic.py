"""Write synthetic low/normal-light PNG pairs."""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.training import DataGenerator
from scripts.common import EXIT_OK, EXIT_USAGE, setup_logging


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description='Generate gamma-degraded image pairs')
    parser.add_argument('--out', type=str, default='data/synthetic', help='Dataset root')
    parser.add_argument('--count', type=int, default=4, help='Number of pairs')
    parser.add_argument('--size', type=int, default=48, help='Image side length')
    parser.add_argument('--gamma', type=float, default=0.4, help='Brightening exponent')
    parser.add_argument('--grayscale', action='store_true', help='Single-channel images')
    parser.add_argument('--seed', type=int, default=0, help='Scene seed')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    try:
        generator = DataGenerator(size=args.size, channels=1 if args.grayscale else 3,
                                  gamma=args.gamma, seed=args.seed)
    except ValueError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    names = generator.generate_dataset(args.out, args.count, verbose=True)
    print(f"Wrote {len(names)} pairs to {args.out}")
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
