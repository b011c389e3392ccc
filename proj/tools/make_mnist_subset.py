#!/usr/bin/env python3
"""Build the bundled MNIST subset in gzip-compressed IDX format.

Input is the npm package `mnist-data`, which ships the original MNIST IDX
files (60,000 training and 10,000 test digits). The output keeps a seeded
random sample of 10,000 training digits and the full test set.

Usage:
    npm pack mnist-data                 # -> mnist-data-1.2.6.tgz
    python3 tools/make_mnist_subset.py --npm mnist-data-1.2.6.tgz --out data
"""

import argparse
import gzip
import struct
import tarfile

import numpy as np


def read_idx(tar, name, images):
    raw = tar.extractfile(f"package/data/{name}").read()
    if images:
        magic, n, rows, cols = struct.unpack(">IIII", raw[:16])
        assert magic == 0x803 and (rows, cols) == (28, 28)
        return np.frombuffer(raw, np.uint8, offset=16).reshape(n, rows * cols)
    magic, n = struct.unpack(">II", raw[:8])
    assert magic == 0x801
    return np.frombuffer(raw, np.uint8, offset=8)


def write_idx(prefix, images, labels):
    n = images.shape[0]
    with gzip.GzipFile(prefix + "-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(images.tobytes())
    with gzip.GzipFile(prefix + "-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels.tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--npm", required=True)
    ap.add_argument("--out", default="data")
    ap.add_argument("--train", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=20191107)
    args = ap.parse_args()

    with tarfile.open(args.npm) as tar:
        train_x = read_idx(tar, "train-images-idx3-ubyte", True)
        train_y = read_idx(tar, "train-labels-idx1-ubyte", False)
        test_x = read_idx(tar, "t10k-images-idx3-ubyte", True)
        test_y = read_idx(tar, "t10k-labels-idx1-ubyte", False)

    keep = np.sort(np.random.RandomState(args.seed).choice(train_x.shape[0], args.train, replace=False))
    write_idx(f"{args.out}/train", train_x[keep], train_y[keep])
    write_idx(f"{args.out}/t10k", test_x, test_y)
    print("train", args.train, np.bincount(train_y[keep], minlength=10))
    print("t10k", test_x.shape[0], np.bincount(test_y, minlength=10))


if __name__ == "__main__":
    main()
