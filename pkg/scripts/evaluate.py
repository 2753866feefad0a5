"""Score enhanced images (or a classical baseline) with PSNR and SSIM."""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.data import PairedDataset
from src.evaluation import STRATEGIES, BaselineEnhancer, Evaluator
from scripts.common import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, setup_logging

logger = logging.getLogger("evaluate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Evaluate enhancement quality')
    parser.add_argument('--enhanced', type=str, default=None, help='Folder of enhanced PNGs')
    parser.add_argument('--ref', type=str, default=None, help='Folder of reference PNGs (same names)')
    parser.add_argument('--baseline', type=str, default=None, choices=list(STRATEGIES),
                        help='Score a classical enhancer on --data instead')
    parser.add_argument('--data', type=str, default=None, help='Paired dataset root for --baseline')
    parser.add_argument('--split', type=str, default='', help='Dataset split folder')
    parser.add_argument('--gamma', type=float, default=0.5, help='Exponent of the gamma baseline')
    parser.add_argument('--out', type=str, default=None, help='Write the report to this file')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    evaluator = Evaluator()
    try:
        if args.enhanced and args.ref:
            print(f"\nEvaluating {args.enhanced} against {args.ref}")
            report = evaluator.evaluate_dirs(args.enhanced, args.ref)
            title = "EVALUATION RESULTS"
        elif args.baseline and args.data:
            print(f"\nEvaluating baseline: {args.baseline}")
            baseline = BaselineEnhancer(args.baseline, gamma=args.gamma)
            report = evaluator.evaluate_enhancer(baseline, PairedDataset(args.data, args.split))
            title = f"BASELINE: {args.baseline.upper()}"
        else:
            print("Error: Must specify --enhanced and --ref, or --baseline and --data", file=sys.stderr)
            return EXIT_USAGE
    except (ValueError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_FAILURE

    evaluator.print_results(report, title)
    if args.out:
        print(f"Report written to {report.write(args.out)}")
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
