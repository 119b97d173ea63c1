#!/usr/bin/env python3
"""Reproduce the GFLOPs/parameter comparison tables and write text + CSV."""

import argparse

from dctnet.cli import TABLE1_CONFIGS, TABLE2_CONFIGS, report_complexity


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-prefix", default="tables/table",
                    help="output prefix; writes <prefix>1.{txt,csv} and "
                         "<prefix>2.{txt,csv}")
    args = ap.parse_args()
    for suffix, configs in (("1", TABLE1_CONFIGS), ("2", TABLE2_CONFIGS)):
        from pathlib import Path
        prefix = f"{args.out_prefix}{suffix}"
        Path(prefix).parent.mkdir(parents=True, exist_ok=True)
        text, _ = report_complexity(configs, prefix)
        print(f"== table {suffix} ==")
        print(text)


if __name__ == "__main__":
    main()
