"""Train a weighted machine and a plain one (gamma = 0) side by side.

    python3 scripts/compare_wtm_tm.py connect4 --seeds 0 1 2
    python3 scripts/compare_wtm_tm.py mnist --clauses 100 --epochs 30
    python3 scripts/compare_wtm_tm.py xor --gamma 0

Prints one line per seed and model with the final test accuracy, the best
test accuracy seen and the weight range.
"""
import argparse
import time
from pathlib import Path

import numpy as np

from wtm import (BinaryDataset, MulticlassWTM, Rng, WTMParams, read_connect4, split_dataset, train_epochs,
                 weight_statistics)
from wtm.data import binarize_grayscale

ROOT = Path(__file__).resolve().parents[1]


def connect4(seed):
    return split_dataset(read_connect4(ROOT / "data" / "connect-4.data.gz"), 0.1, Rng(seed))


def mnist(seed):
    from mlxtend.data import mnist_data

    pixels, labels = mnist_data()
    X = binarize_grayscale(pixels.astype(np.int64))
    order = np.random.default_rng(0).permutation(len(labels))
    tr, te = order[:2000], order[2000:3000]
    return BinaryDataset(X[tr], labels[tr], 10), BinaryDataset(X[te], labels[te], 10)


def xor(seed):
    def make(n, s, noise):
        gen = np.random.default_rng(s)
        X = gen.integers(0, 2, (n, 8))
        y = X[:, 0] ^ X[:, 1]
        return BinaryDataset(X, np.where(gen.random(n) < noise, 1 - y, y), 2)

    return make(5000, 1, 0.1), make(2000, 2, 0.0)


TASKS = {"connect4": (connect4, 200, 100), "mnist": (mnist, 100, 30), "xor": (xor, 20, 100)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("task", choices=TASKS)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--clauses", type=int, help="clauses per class (task default otherwise)")
    ap.add_argument("--epochs", type=int)
    ap.add_argument("--threshold", type=int, default=15)
    ap.add_argument("--ps", type=float, default=0.1)
    ap.add_argument("--gamma", type=float, nargs="+", default=[0.002, 0.0])
    args = ap.parse_args()

    load, clauses, epochs = TASKS[args.task]
    clauses = args.clauses or clauses
    epochs = args.epochs or epochs
    print("seed\tgamma\tfinal\tbest\tw_min\tw_max\tminutes")
    for seed in args.seeds:
        train, test = load(seed)
        for gamma in args.gamma:
            t0 = time.perf_counter()
            rng = Rng(seed)
            params = WTMParams.per_class(train.o, clauses, threshold=args.threshold, sparsity=args.ps,
                                         learning_rate=gamma)
            mm = MulticlassWTM(params, train.n_classes, rng)
            hist = train_epochs(mm, train, epochs, rng, eval_data=test, eval_train=False)
            stats = weight_statistics(mm)
            print(f"{seed}\t{gamma}\t{hist[-1].eval_acc:.4f}\t{max(m.eval_acc for m in hist):.4f}\t"
                  f"{min(s.min for s in stats):.4f}\t{max(s.max for s in stats):.4f}\t"
                  f"{(time.perf_counter() - t0) / 60:.1f}", flush=True)


if __name__ == "__main__":
    main()
