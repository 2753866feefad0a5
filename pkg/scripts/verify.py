"""Run the property checks and report per-check timing and tolerance."""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.verification import CHECKS, LEVELS, print_report, run_suite
from scripts.common import EXIT_FAILURE, EXIT_OK, setup_logging


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description='Verify gradients, spline, FFT and diffusion algebra')
    parser.add_argument('--level', type=str, default='quick', choices=list(LEVELS), help='Check set')
    parser.add_argument('--seed', type=int, default=0, help='Seed of the random inputs')
    parser.add_argument('--check', dest='names', action='append', default=None,
                        choices=[c.name for c in CHECKS], help='Run only this check (repeatable)')
    parser.add_argument('--inject-sign-error', action='store_true',
                        help='Flip the reverse-step noise sign; the reverse-step checks must fail')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    results = run_suite(args.level, seed=args.seed, inject_sign_error=args.inject_sign_error, names=args.names)
    print_report(results)
    return EXIT_OK if results and all(r.passed for r in results) else EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())
