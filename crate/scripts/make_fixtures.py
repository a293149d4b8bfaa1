"""Regenerate the bundled datasets under data/.

digits.csv       1797 8x8 handwritten digits, 64 pixel columns (0-16) + label,
                 copied from the copy shipped inside scikit-learn.
mnist10k-*.gz    10,000 MNIST digits in IDX format, rebuilt from the JSON
                 arrays of the `mnist` npm package (MIT). The package stores
                 pixels rescaled to [0,1] with three decimals; they are mapped
                 back to bytes with round(v * 255).

usage: python3 scripts/make_fixtures.py <path-to-unpacked-npm-mnist-package>
"""
import gzip
import json
import os
import struct
import sys

import numpy as np
from sklearn.datasets import load_digits

here = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")


def write_digits():
    d = load_digits()
    with open(os.path.join(here, "digits.csv"), "w") as f:
        for row, label in zip(d.data.astype(int), d.target):
            f.write(",".join(str(v) for v in row) + f",{label}\n")


def write_mnist(pkg):
    images, labels = [], []
    for digit in range(10):
        with open(os.path.join(pkg, "src", "digits", f"{digit}.json")) as f:
            flat = np.asarray(json.load(f)["data"], dtype=np.float64)
        rows = flat.reshape(-1, 784)
        images.append(np.clip(np.rint(rows * 255.0), 0, 255).astype(np.uint8))
        labels.append(np.full(len(rows), digit, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    # interleave classes deterministically so prefixes stay balanced
    order = np.random.RandomState(0).permutation(len(labels))
    images, labels = images[order], labels[order]
    n = len(labels)
    with gzip.GzipFile(os.path.join(here, "mnist10k-images-idx3-ubyte.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(images.tobytes())
    with gzip.GzipFile(os.path.join(here, "mnist10k-labels-idx1-ubyte.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels.tobytes())


if __name__ == "__main__":
    write_digits()
    if len(sys.argv) > 1:
        write_mnist(sys.argv[1])
