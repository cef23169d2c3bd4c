#!/usr/bin/env python3
"""Convert the digits bundled in the `mnist` npm package into IDX files.

The npm package (https://github.com/cazala/mnist, MIT) ships 10,000 MNIST
digits as per-class JSON arrays with pixel values in [0, 1] rounded to three
decimals. This script pools them, shuffles with a fixed seed (the per-class
files are sorted by label, so file order must be mixed before taking a
prefix), splits into train/test, and writes the standard big-endian IDX
layout expected by `privfl::data::load_idx`.

    npm pack mnist && tar xzf mnist-1.1.0.tgz
    python3 tools/mnist_from_npm.py package data/mnist --train 1000 --test 1000
"""
import argparse
import json
import random
import struct
from pathlib import Path


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("package_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--train", type=int, default=1000)
    ap.add_argument("--test", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20210401)
    args = ap.parse_args()

    samples = []
    for digit in range(10):
        raw = json.load(open(Path(args.package_dir) / "src" / "digits" / f"{digit}.json"))["data"]
        for start in range(0, len(raw), 784):
            pixels = [min(255, max(0, round(v * 255))) for v in raw[start:start + 784]]
            samples.append((pixels, digit))

    random.Random(args.seed).shuffle(samples)
    if args.train + args.test > len(samples):
        raise SystemExit(f"only {len(samples)} samples available")
    train = samples[: args.train]
    test = samples[args.train : args.train + args.test]

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_images(out / "train-images-idx3-ubyte", [s[0] for s in train])
    write_labels(out / "train-labels-idx1-ubyte", [s[1] for s in train])
    write_images(out / "t10k-images-idx3-ubyte", [s[0] for s in test])
    write_labels(out / "t10k-labels-idx1-ubyte", [s[1] for s in test])
    print(f"wrote {len(train)} train / {len(test)} test samples to {out}")


if __name__ == "__main__":
    main()
