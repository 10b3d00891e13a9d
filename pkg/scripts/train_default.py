#!/usr/bin/env python3
"""Train on the default synthetic dataset and print the per-epoch report."""

import argparse
import json

from hill.experiments import default_dataset, run_training
from hill.hill_model import HillConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", help="JSON config file; defaults used otherwise")
    parser.add_argument("--seed", type=int)
    args = parser.parse_args()
    if args.config:
        config = HillConfig.from_json_file(args.config)
    else:
        config = HillConfig()
    if args.seed is not None:
        from dataclasses import replace

        config = replace(config, seed=args.seed)
    hierarchy, train_docs, dev_docs = default_dataset()
    _, report = run_training(config, hierarchy, train_docs, dev_docs)
    for row in report:
        print(json.dumps(row, sort_keys=True))


if __name__ == "__main__":
    main()
