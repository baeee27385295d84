"""Run the full two-stage pipeline once and print the holdout report.

Usage: python scripts/run_two_stage.py [--config cfg.json] [--seed N] [--out DIR]
Falls back to the default experiment config when --config is omitted.
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from mixcon.config import ExperimentConfig, load_config
from mixcon.pipeline import train_classifier, train_contrastive


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default="runs/two_stage")
    args = parser.parse_args()
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    stage_one = train_contrastive(cfg, args.out)
    print(f"stage one: total {stage_one.first_epoch_total:.3f} -> {stage_one.last_epoch_total:.3f}")
    stage_two = train_classifier(cfg, stage_one.checkpoint, args.out)
    print(json.dumps(json.loads(Path(stage_two.report_path).read_text())["metrics"], indent=2))


if __name__ == "__main__":
    main()
