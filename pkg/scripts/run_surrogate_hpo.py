#!/usr/bin/env python
"""Run a small TPE study on the built-in surrogate task and print the best trial.

Usage: python scripts/run_surrogate_hpo.py [--trials N] [--seed S] [--out DIR]
"""

import argparse
import dataclasses
import json

from studyforge import parse_config, run_study

CONFIG = """\
objective: surrogate
task: binary
epochs: 10
space:
  lr:
    kind: log-uniform-float
    low: 1.0e-4
    high: 1.0e-3
  dropout:
    kind: uniform-float
    low: 0.0
    high: 0.2
  batch_size:
    kind: int-categorical
    choices: [8, 16, 32, 64, 128]
sampler:
  kind: tpe
pruner: {}
policy:
  n_trials: 20
"""


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="runs/surrogate_hpo")
    args = parser.parse_args()

    config = parse_config(CONFIG)
    config = dataclasses.replace(
        config,
        seed=args.seed,
        output_dir=args.out,
        policy=dataclasses.replace(config.policy, n_trials=args.trials),
    )
    result = run_study(config)
    print(f"journal: {result.journal_path}")
    for trial in result.study.trials:
        value = f"{trial.final_value:.4f}" if trial.final_value is not None else "-"
        print(f"  trial {trial.trial_id:3d}  {trial.state.value:9s}  {value}")
    if result.best is None:
        print("no completed trials")
    else:
        print("best:", json.dumps({"params": result.best.params, "value": result.best.final_value}))


if __name__ == "__main__":
    main()
