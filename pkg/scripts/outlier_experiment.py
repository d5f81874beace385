#!/usr/bin/env python3
"""Clean-test MSE of each loss when a fraction of training targets is shifted.

Synthetic target y = 3x + N(0, sigma); ``--fraction`` of the training rows get
``+shift * sigma`` added. Prints one CSV row per seed and a win count of ASRL
against squared loss.
"""

import argparse
import sys

import numpy as np

from asrl import metrics
from asrl.bench import BenchSetup, make_loss
from asrl.gbdt import Dataset, TrainConfig, train
from asrl.report import LOSS_ORDER


def run_seed(seed, n_train, n_test, sigma, fraction, shift, config):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, (n_train + n_test, 1))
    y = 3 * x[:, 0] + rng.normal(0, sigma, len(x))
    y_tr = y[:n_train].copy()
    hit = rng.choice(n_train, int(round(fraction * n_train)), replace=False)
    y_tr[hit] += shift * sigma
    train_set = Dataset(x[:n_train], y_tr)
    setup = BenchSetup(train=config)
    return {
        name: metrics.mse(y[n_train:], train(train_set, config, make_loss(name, setup)).predict(x[n_train:]))
        for name in LOSS_ORDER
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--n-train", type=int, default=500)
    ap.add_argument("--n-test", type=int, default=100)
    ap.add_argument("--sigma", type=float, default=0.1)
    ap.add_argument("--fraction", type=float, default=0.1)
    ap.add_argument("--shift", type=float, default=50.0, help="outlier offset in units of sigma")
    ap.add_argument("--rounds", type=int, default=100)
    args = ap.parse_args(argv)

    config = TrainConfig(n_rounds=args.rounds)
    print("seed," + ",".join(LOSS_ORDER))
    wins = 0
    for seed in range(args.seeds):
        res = run_seed(seed, args.n_train, args.n_test, args.sigma, args.fraction, args.shift, config)
        wins += res["asrl"] <= res["squared"]
        print(f"{seed}," + ",".join(f"{res[n]:.6g}" for n in LOSS_ORDER))
    print(f"# asrl <= squared on {wins}/{args.seeds} seeds", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
