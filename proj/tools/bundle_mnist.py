#!/usr/bin/env python3
"""Convert the `mnist` npm package's per-digit JSON arrays into a pair of
gzip-compressed idx files (images + labels) usable by the simulator.

The package stores each 28x28 image as 784 floats that are byte values
divided by 255 and rounded to three decimals; multiplying by 255 and
rounding recovers the original bytes exactly.

Usage: bundle_mnist.py <node_modules/mnist/src/digits> <out_dir>
"""

import gzip
import json
import struct
import sys
from pathlib import Path


def main() -> int:
    if len(sys.argv) != 3:
        print(__doc__.strip(), file=sys.stderr)
        return 1
    digits_dir = Path(sys.argv[1])
    out_dir = Path(sys.argv[2])
    out_dir.mkdir(parents=True, exist_ok=True)

    images = bytearray()
    labels = bytearray()
    count = 0
    for digit in range(10):
        blob = json.loads((digits_dir / f"{digit}.json").read_text())
        flat = blob["data"] if isinstance(blob, dict) else blob
        per_image = 28 * 28
        if len(flat) % per_image:
            raise SystemExit(f"{digit}.json: {len(flat)} values is not a multiple of {per_image}")
        n = len(flat) // per_image
        for v in flat:
            b = round(v * 255)
            if not 0 <= b <= 255 or abs(b / 255 - v) > 5e-4:
                raise SystemExit(f"{digit}.json: value {v} is not a rounded byte/255")
            images.append(b)
        labels.extend([digit] * n)
        count += n
        print(f"digit {digit}: {n} images")

    with gzip.open(out_dir / "train-images-idx3-ubyte.gz", "wb", compresslevel=9) as f:
        f.write(struct.pack(">IIII", 0x803, count, 28, 28))
        f.write(bytes(images))
    with gzip.open(out_dir / "train-labels-idx1-ubyte.gz", "wb", compresslevel=9) as f:
        f.write(struct.pack(">II", 0x801, count))
        f.write(bytes(labels))
    print(f"wrote {count} images to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
