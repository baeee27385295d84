"""Write the default experiment config to a JSON file for hand editing.

Usage: python scripts/write_default_config.py [--out config.json]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from mixcon.config import ExperimentConfig, save_config


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="config.json")
    args = parser.parse_args()
    save_config(args.out, ExperimentConfig())
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
