#!/usr/bin/env python3
"""Sweep the coding-tree height K and report final dev F1 per height."""

import argparse
import json

from hill.experiments import default_dataset, k_sweep
from hill.hill_model import HillConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--ks", type=int, nargs="+", default=[2, 3, 4, 5])
    parser.add_argument("--epochs", type=int, default=8)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()
    config = HillConfig(epochs=args.epochs, seed=args.seed)
    hierarchy, train_docs, dev_docs = default_dataset()
    results = k_sweep(config, args.ks, hierarchy, train_docs, dev_docs)
    for k in sorted(results):
        print(json.dumps({"K": k, **results[k]}, sort_keys=True))


if __name__ == "__main__":
    main()
