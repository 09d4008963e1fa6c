#!/usr/bin/env python3
"""
latentlabel command-line entry point.

Usage:
    python main.py synth --out-dir data
    python main.py train --config config/default.json --motor data/motor.csv --nonmotor data/nonmotor.csv --labels data/labels.csv
    python main.py predict --model-path out/model.json --motor new/motor.csv --nonmotor new/nonmotor.csv
    python main.py cv --config config/default.json --repeats 2 --folds 3 --compare-baseline
    python main.py grid --config config/default.json --backend celery

Exit codes: 0 success, 2 input/validation error, 3 numerical failure.
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Make top-level packages importable when run as a script
sys.path.insert(0, str(Path(__file__).parent))

from core.errors import LatentLabelError
from core.settings import configure_logging
from cli.commands import COMMANDS
from cli.config import load_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentlabel",
        description="Multi-modal multi-label latent-symptom model: train, predict and evaluate",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="Random seed (default 0)")
    common.add_argument("--out-dir", dest="out_dir", help="Output directory (default out)")
    common.add_argument("--motor", help="Motor-symptom feature CSV")
    common.add_argument("--nonmotor", help="Non-motor-symptom feature CSV")
    common.add_argument("--labels", help="Drug-label CSV (labeled samples only)")
    common.add_argument("--alpha", type=float, help="Ridge weight on U")
    common.add_argument("--beta", type=float, help="L1 weight on V")
    common.add_argument("-k", "--k", type=int, help="Number of latent symptoms")

    harness = argparse.ArgumentParser(add_help=False)
    harness.add_argument("--folds", type=int, help="Folds per repeat (default 10)")
    harness.add_argument("--repeats", type=int, help="CV repeats (default 100)")
    harness.add_argument("--backend", choices=["thread", "celery"], help="Job backend (default thread)")
    harness.add_argument("--workers", type=int, help="Worker threads (capped by LATENTLABEL_THREADS)")
    harness.add_argument(
        "--non-transductive", dest="transductive", action="store_const", const=False,
        help="Fit on training rows only and predict test rows inductively",
    )

    subparsers.add_parser("train", parents=[common], help="Fit a model; writes model.json and trace.json")
    predict = subparsers.add_parser("predict", parents=[common], help="Score new samples; writes scores.csv and labels.csv")
    predict.add_argument("--model-path", dest="model_path", help="Model JSON (default <out-dir>/model.json)")

    cv = subparsers.add_parser("cv", parents=[common, harness], help="Repeated k-fold cross-validation")
    cv.add_argument(
        "--compare-baseline", dest="compare_baseline", action="store_const", const=True,
        help="Also run the binary-relevance baseline on the same splits",
    )
    subparsers.add_parser("grid", parents=[common, harness], help="Holdout grid search over alpha, beta, k")
    sweep = subparsers.add_parser("sweep", parents=[common, harness], help="Beta sparsity sweep or k sensitivity")
    sweep.add_argument("--sweep", choices=["beta", "k"], help="Which parameter to sweep (default beta)")
    subparsers.add_parser("synth", parents=[common], help="Write a planted synthetic dataset")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    overrides = {key: value for key, value in vars(args).items() if key not in ("command", "config")}
    try:
        config = load_config(args.config, overrides)
        return COMMANDS[args.command](config)
    except LatentLabelError as e:
        print(f"❌ {e.detail}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
