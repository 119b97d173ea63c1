"""Command-line entry points.

Subcommands: decode (JPEG -> coefficient dump), complexity (configs ->
tables), train, eval, verify (decoder round-trip against the reference
decoder over a directory). Network and training options can come from a
`key = value` config file, which overrides flags.
"""

import argparse
import logging
import sys
from pathlib import Path

from .complexity import count_network, emit_table
from .errors import DctnetError
from .resnet import build_dct_network, build_rgb_resnet50
from .training import TrainConfig, evaluate, load_class_map, train
from .transforms import ReducerSpec


def parse_config_file(path):
    """Parse `key = value` lines; '#' starts a comment."""
    values = {}
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{ln}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def build_network_from_options(opts):
    """Construct an ArchitectureSpec from config keys.

    Keys: input = rgb|dct; reducer = fbs|lp|la|ccpp|none; reducer_k;
    reducer_out; entry_stage; classes.
    """
    kind = opts.get("input", "dct").lower()
    classes = int(opts.get("classes", 1000))
    if kind == "rgb":
        return build_rgb_resnet50(classes=classes)
    if kind != "dct":
        raise ValueError(f"input must be rgb or dct, got {kind!r}")
    entry = int(opts.get("entry_stage", 2))
    reducer_name = opts.get("reducer", "none").lower()
    if reducer_name in ("none", ""):
        reducer = None
    elif reducer_name == "fbs":
        k = int(opts.get("reducer_k", 64))
        reducer = ReducerSpec("fbs", 192, 3 * k, k=k)
    else:
        m = int(opts.get("reducer_out", 64))
        reducer = ReducerSpec(reducer_name, 192, m)
    return build_dct_network(reducer, entry_stage=entry, classes=classes)


TABLE1_CONFIGS = [
    {"input": "rgb"},
    {"input": "dct", "reducer": "none"},
    {"input": "dct", "reducer": "fbs", "reducer_k": "32"},
    {"input": "dct", "reducer": "fbs", "reducer_k": "16"},
    {"input": "dct", "reducer": "lp", "reducer_out": "64"},
    {"input": "dct", "reducer": "la", "reducer_out": "64"},
    {"input": "dct", "reducer": "ccpp", "reducer_out": "64"},
]

TABLE2_CONFIGS = [
    {"input": "dct", "reducer": "ccpp", "reducer_out": "64",
     "entry_stage": "2", "name": "Skip the first stage"},
    {"input": "dct", "reducer": "ccpp", "reducer_out": "128",
     "entry_stage": "3", "name": "Skip the first and second stages"},
    {"input": "dct", "reducer": "ccpp", "reducer_out": "256",
     "entry_stage": "4", "name": "Skip the first, second, and third stages"},
    {"input": "dct", "reducer": "ccpp", "reducer_out": "512",
     "entry_stage": "5", "name": "Skip the first, second, third, and fourth stages"},
]


def report_complexity(option_sets, out_prefix=None):
    """Count every config and emit the text/CSV tables."""
    reports = []
    seen = {}
    for opts in option_sets:
        arch = build_network_from_options(opts)
        if "name" in opts:
            arch.name = opts["name"]
        if arch.name in seen:              # suffixed disambiguation
            seen[arch.name] += 1
            arch.name = f"{arch.name} ({seen[arch.name]})"
        else:
            seen[arch.name] = 1
        reports.append(count_network(arch))
    text, csv = emit_table(reports)
    if out_prefix:
        Path(f"{out_prefix}.txt").write_text(text)
        Path(f"{out_prefix}.csv").write_text(csv)
    return text, csv


def _cmd_decode(args):
    from .jpeg import decode_dct_tensor, write_coefficient_dump

    grids = decode_dct_tensor(Path(args.jpeg).read_bytes())
    write_coefficient_dump(args.output, grids)
    dims = ", ".join(f"{g.width_blocks}x{g.height_blocks}" for g in grids)
    print(f"wrote {args.output}: {len(grids)} components ({dims} blocks)")
    return 0


def _cmd_complexity(args):
    if args.preset == "table1":
        option_sets = TABLE1_CONFIGS
    elif args.preset == "table2":
        option_sets = TABLE2_CONFIGS
    else:
        option_sets = [parse_config_file(p) for p in args.config]
    text, _ = report_complexity(option_sets, args.output)
    print(text, end="")
    return 0


def _train_config_from_args(args):
    overrides = parse_config_file(args.config) if args.config else {}
    opts = {
        "dataset_root": args.data,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "lr": args.lr,
        "momentum": args.momentum,
        "seed": args.seed,
        "metrics_path": args.metrics,
        "checkpoint_path": args.checkpoint,
        "crop_blocks": args.crop_blocks,
    }
    casts = {"epochs": int, "batch_size": int, "lr": float, "momentum": float,
             "seed": int, "crop_blocks": int, "lr_decay_factor": float,
             "lr_decay_every": int, "dataset_root": str, "metrics_path": str,
             "checkpoint_path": str, "augment_crop": lambda v: v.lower() == "true",
             "augment_flip": lambda v: v.lower() == "true"}
    for key, value in overrides.items():
        if key in casts:
            opts[key] = casts[key](value)
    return TrainConfig(**opts), overrides


def _cmd_train(args):
    config, overrides = _train_config_from_args(args)
    net_opts = parse_config_file(args.network) if args.network else overrides
    arch = build_network_from_options(net_opts)
    _, history = train(config, arch)
    print(f"trained {arch.name}: best test top-1 "
          f"{max(h['test_top1'] for h in history):.4f}; "
          f"metrics in {config.metrics_path}")
    return 0


def _cmd_eval(args):
    net_opts = parse_config_file(args.network) if args.network else {}
    arch = build_network_from_options(net_opts)
    class_map = load_class_map(args.class_map) if args.class_map else None
    result = evaluate(args.checkpoint, arch, args.data,
                      crop_blocks=args.crop_blocks, class_map=class_map)
    print(f"top-1 accuracy: {result['top1']:.4f} over {result['n']} images")
    if "coarse" in result:
        print(f"coarse-group accuracy: {result['coarse']:.4f}")
    return 0


def _cmd_verify(args):
    import numpy as np

    from .jpeg import (decode_dct_tensor, entropy_decode, grid_to_plane,
                       parse_jpeg, planes_to_rgb)
    from .jpeg.reference import reference_coefficients, reference_rgb
    from .jpeg.zigzag import zigzag_to_raster

    files = sorted(p for p in Path(args.directory).iterdir()
                   if p.is_file() and p.open("rb").read(2) == b"\xff\xd8")
    if not files:
        print(f"no JPEG files in {args.directory}", file=sys.stderr)
        return 1
    bad = 0
    for path in files:
        data = path.read_bytes()
        parsed = parse_jpeg(data)
        quantized = entropy_decode(parsed)
        coeff_ok = True
        for comp, (ref_qt, ref_blocks) in zip(parsed.components,
                                              reference_coefficients(path)):
            rh, rw = ref_blocks.shape[:2]
            mine = zigzag_to_raster(quantized[comp.id][:rh, :rw]) \
                .reshape(rh, rw, 64)
            coeff_ok &= bool((mine == ref_blocks).all())
        grids = decode_dct_tensor(data)
        planes = [grid_to_plane(g) for g in grids]
        mine_rgb = planes_to_rgb(planes[0], planes[1], planes[2],
                                 parsed.width, parsed.height)
        ref = reference_rgb(path)
        frac = (np.abs(mine_rgb.astype(int) - ref.astype(int)) <= 1).mean()
        ok = coeff_ok and frac >= 0.999
        bad += not ok
        print(f"{path.name}: coefficients {'OK' if coeff_ok else 'FAIL'}, "
              f"pixels within +/-1: {frac:.2%} "
              f"{'OK' if frac >= 0.999 else 'FAIL'}")
    print(f"{len(files) - bad}/{len(files)} files verified")
    return 1 if bad else 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="dctnet")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="partial-decode a JPEG to a coefficient dump")
    p.add_argument("jpeg")
    p.add_argument("-o", "--output", default="coefficients.bin")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("complexity", help="emit GFLOPs/parameter tables")
    p.add_argument("--preset", choices=["table1", "table2"])
    p.add_argument("--config", nargs="*", default=[],
                   help="network config files (key = value)")
    p.add_argument("-o", "--output", help="output path prefix (.txt/.csv)")
    p.set_defaults(func=_cmd_complexity)

    p = sub.add_parser("train", help="train a network on an ingested dataset")
    p.add_argument("--data", required=True, help="dataset root with train/ and test/")
    p.add_argument("--network", help="network config file")
    p.add_argument("--config", help="training config file (overrides flags)")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--crop-blocks", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metrics", default="metrics.jsonl")
    p.add_argument("--checkpoint", default="checkpoint.bin")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--network", help="network config file")
    p.add_argument("--crop-blocks", type=int, default=4)
    p.add_argument("--class-map", help="file of 'class group' lines")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("verify", help="verify decoding against the reference decoder")
    p.add_argument("directory")
    p.set_defaults(func=_cmd_verify)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except DctnetError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
