#!/usr/bin/env python3
# Copyright 2026 The GradDiv Lab Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds the bundled MNIST subset in IDX format.

The 5000-digit MNIST sample shipped inside the mlxtend wheel (500 digits per
class, sorted by label) is split 400/100 per class into train/test and
interleaved round-robin over classes, so every prefix is class balanced.

    python3 tools/make_mnist_subset.py [--wheel path.whl] [--out data/mnist-subset]
"""
import argparse
import glob
import gzip
import os
import struct
import subprocess
import tempfile
import zipfile

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def fetch_wheel(tmp):
    subprocess.check_call(["pip", "download", "--no-deps", "mlxtend==0.24.0", "-d", tmp])
    return glob.glob(os.path.join(tmp, "mlxtend-*.whl"))[0]


def write_idx(prefix, rows):
    with open(prefix + "-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(rows), 28, 28))
        for pixels, _ in rows:
            f.write(bytes(pixels))
    with open(prefix + "-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(rows)))
        f.write(bytes(label for _, label in rows))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wheel")
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "mnist-subset"))
    args = ap.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel or fetch_wheel(tmp)
        text = gzip.decompress(zipfile.ZipFile(wheel).read(MEMBER)).decode()
    by_class = [[] for _ in range(10)]
    for line in text.strip().split("\n"):
        values = [int(float(v)) for v in line.split(",")]
        by_class[values[-1]].append((values[:-1], values[-1]))
    train = [by_class[c][i] for i in range(400) for c in range(10)]
    test = [by_class[c][400 + i] for i in range(100) for c in range(10)]
    os.makedirs(args.out, exist_ok=True)
    write_idx(os.path.join(args.out, "train"), train)
    write_idx(os.path.join(args.out, "t10k"), test)
    print(f"wrote {len(train)} train / {len(test)} test digits to {args.out}")


if __name__ == "__main__":
    main()
