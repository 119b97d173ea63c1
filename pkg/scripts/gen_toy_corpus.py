#!/usr/bin/env python3
"""Generate the two-class striped toy JPEG corpus."""

import argparse

from dctnet.toydata import make_toy_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("root", help="output directory (train/ and test/ created)")
    ap.add_argument("--train-per-class", type=int, default=150)
    ap.add_argument("--test-per-class", type=int, default=120)
    ap.add_argument("--size", type=int, default=40)
    ap.add_argument("--quality", type=int, default=88)
    ap.add_argument("--seed", type=int, default=1234)
    args = ap.parse_args()
    counts = make_toy_corpus(args.root, args.train_per_class,
                             args.test_per_class, args.size, args.quality,
                             args.seed)
    total = sum(counts.values())
    print(f"wrote {total} images under {args.root}")
    for key in sorted(counts):
        print(f"  {key}: {counts[key]}")


if __name__ == "__main__":
    main()
