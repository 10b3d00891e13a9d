#!/usr/bin/env python3
"""Compare final dev Macro-F1 with and without the contrastive term."""

import argparse
import json

from hill.experiments import default_dataset, lambda_comparison
from hill.hill_model import HillConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, nargs="+", default=[42, 43, 44])
    parser.add_argument("--lam", type=float, default=0.1)
    parser.add_argument("--epochs", type=int, default=20)
    args = parser.parse_args()
    config = HillConfig(epochs=args.epochs)
    hierarchy, train_docs, dev_docs = default_dataset()
    rows = lambda_comparison(config, args.seeds, hierarchy, train_docs, dev_docs, lam=args.lam)
    for row in rows:
        print(json.dumps(row, sort_keys=True))


if __name__ == "__main__":
    main()
