"""Sweep one contrastive-loss hyperparameter through the full pipeline.

Usage: python scripts/ablation_sweep.py --param tau --values 0.07,0.1,0.2,0.5
Writes runs/sweep_<param>/sweep.csv and prints it.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from mixcon.config import ExperimentConfig, load_config
from mixcon.pipeline import ablate


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=None)
    parser.add_argument("--param", required=True, choices=("tau", "alpha", "lambda", "measure"))
    parser.add_argument("--values", required=True)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    values = [v for v in (s.strip() for s in args.values.split(",")) if v]
    out = args.out or f"runs/sweep_{args.param}"
    result = ablate(cfg, args.param, values, out)
    print(Path(result.table).read_text())
    if result.failed:
        sys.exit(1)


if __name__ == "__main__":
    main()
