"""Write the 2,000/1,000 MNIST desk subset as gzipped IDX files.

The images come from the 5,000-image MNIST sample bundled with mlxtend,
shuffled with a fixed seed and cut into the first 2,000 (train) and the
next 1,000 (test).  Convert the result with ``wtm convert -f idx``.
"""
import argparse
from pathlib import Path

import numpy as np
from mlxtend.data import mnist_data

from wtm.data import write_idx


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", type=Path)
    ap.add_argument("--train", type=int, default=2000)
    ap.add_argument("--test", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0, help="shuffle seed for the subset")
    args = ap.parse_args()

    pixels, labels = mnist_data()
    order = np.random.default_rng(args.seed).permutation(len(labels))
    parts = {"train": order[: args.train], "test": order[args.train : args.train + args.test]}
    args.outdir.mkdir(parents=True, exist_ok=True)
    for name, idx in parts.items():
        write_idx(args.outdir / f"{name}-images.idx.gz", pixels[idx].reshape(-1, 28, 28).astype(np.uint8))
        write_idx(args.outdir / f"{name}-labels.idx.gz", labels[idx].astype(np.uint8))
        print(f"{name}: {len(idx)} images")


if __name__ == "__main__":
    main()
