#!/usr/bin/env python3
"""Regenerate the packaged toy classifier blob.

Usage: python scripts/train_toy_model.py [--seed 7] [--out src/evtrack/npu/data/toy_cnn.npu]

Deterministic given the seed; takes about half a minute on one core.
"""

import argparse
from pathlib import Path

from evtrack.npu.model import save_blob
from evtrack.npu.training import train_toy_model


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--samples", type=int, default=300,
                        help="training samples per class per input kind")
    parser.add_argument("--epochs", type=int, default=10)
    parser.add_argument("--out", default="src/evtrack/npu/data/toy_cnn.npu")
    args = parser.parse_args()

    model, acc = train_toy_model(seed=args.seed, n_per_class_per_kind=args.samples,
                                 epochs=args.epochs)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_blob(model, out)
    print(f"float holdout accuracy: {acc:.4f}")
    print(f"wrote {out} ({out.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
