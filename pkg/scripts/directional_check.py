"""Paired-seed comparison: does the contrastive term help held-out mAP?

Trains the two-stage pipeline with the weighted-contrastive term on
(lambda from the config, default 0.3) and off (lambda 0) for each seed,
then prints per-seed holdout mAP and the paired mean difference.

Usage: python scripts/directional_check.py [--config cfg.json] [--seeds 0,1,2,3,4]
"""

import argparse
import dataclasses
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from mixcon.config import ExperimentConfig, load_config
from mixcon.pipeline import train_classifier, train_contrastive


def run(cfg, out_dir):
    stage_one = train_contrastive(cfg, out_dir)
    stage_two = train_classifier(cfg, stage_one.checkpoint, out_dir)
    return stage_two.report.map


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=None)
    parser.add_argument("--seeds", default="0,1,2,3,4")
    parser.add_argument("--out", default="runs/directional")
    args = parser.parse_args()
    base = load_config(args.config) if args.config else ExperimentConfig()
    seeds = [int(s) for s in args.seeds.split(",")]
    with_pcl, without_pcl = [], []
    for seed in seeds:
        cfg = dataclasses.replace(base, seed=seed)
        off = dataclasses.replace(
            cfg, loss=dataclasses.replace(cfg.loss, lam=0.0)
        )
        m_on = run(cfg, Path(args.out) / f"seed{seed}" / "pcl")
        m_off = run(off, Path(args.out) / f"seed{seed}" / "baseline")
        with_pcl.append(m_on)
        without_pcl.append(m_off)
        print(f"seed {seed}: mAP with contrastive {m_on:.4f}, without {m_off:.4f}, diff {m_on - m_off:+.4f}")
    mean_on = math.fsum(with_pcl) / len(seeds)
    mean_off = math.fsum(without_pcl) / len(seeds)
    print(f"mean with {mean_on:.4f}  mean without {mean_off:.4f}  margin {mean_on - mean_off:+.4f}")


if __name__ == "__main__":
    main()
