#!/usr/bin/env python3
"""Desk-scale experiment: train the stage-3-entry DCT network and the RGB
baseline on the striped toy corpus and report final accuracies."""

import argparse
import logging
import tempfile
from pathlib import Path

from dctnet.resnet import build_dct_network, build_rgb_resnet50
from dctnet.toydata import make_toy_corpus
from dctnet.training import TrainConfig, train
from dctnet.transforms import ReducerSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--root", help="corpus directory (generated if missing)")
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs", help="metrics/checkpoint directory")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    root = Path(args.root) if args.root else Path(tempfile.mkdtemp(prefix="toy-"))
    if not (root / "train").is_dir():
        make_toy_corpus(root)
        print(f"generated corpus under {root}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    runs = [
        ("dct-ccpp-entry3",
         build_dct_network(ReducerSpec("ccpp", 192, 128), entry_stage=3,
                           classes=2)),
        ("rgb-baseline", build_rgb_resnet50(classes=2)),
    ]
    for name, arch in runs:
        cfg = TrainConfig(dataset_root=str(root), epochs=args.epochs,
                          seed=args.seed,
                          metrics_path=str(out / f"{name}-metrics.jsonl"),
                          checkpoint_path=str(out / f"{name}.bin"))
        _, history = train(cfg, arch)
        accs = [h["test_top1"] for h in history]
        print(f"{name}: final top-1 {accs[-1]:.4f}, best {max(accs):.4f}")


if __name__ == "__main__":
    main()
