#!/usr/bin/env python3
"""End-to-end experiment driver: generate, train, evaluate, benchmark.

Convenience wrapper around the `aeroemu` CLI for a complete desk-scale run.
Defaults are small; pass --full for the 500k/100k/100k configuration.
"""

import argparse
import pathlib
import sys

from aeroemu.cli import main as cli_main


def run(args):
    if cli_main(args) != 0:
        sys.exit(f"step failed: {' '.join(args)}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="experiment")
    parser.add_argument("--full", action="store_true",
                        help="500k train / 100k val / 100k test")
    parser.add_argument("--hidden", default="256,256")
    parser.add_argument("--threads", type=int, default=0,
                        help="BLAS threads (0 = all cores)")
    opts = parser.parse_args()

    d = pathlib.Path(opts.workdir)
    d.mkdir(parents=True, exist_ok=True)
    n_train, n_val, n_test = (500_000, 100_000, 100_000) if opts.full \
        else (50_000, 10_000, 10_000)
    import os
    threads = opts.threads or os.cpu_count() or 1

    for split, n, seed in (("train", n_train, 101), ("val", n_val, 102),
                           ("test", n_test, 103)):
        run(["generate", "--threads", str(threads),
             "--out-inputs", str(d / f"{split}.in.bin"),
             "--out-outputs", str(d / f"{split}.out.bin"),
             "--samples", str(n), "--seed", str(seed)])

    run(["train", "--threads", str(threads),
         "--train", str(d / "train.in.bin"), str(d / "train.out.bin"),
         "--val", str(d / "val.in.bin"), str(d / "val.out.bin"),
         "--hidden", opts.hidden,
         "--out", str(d / "model.ckpt"),
         "--history", str(d / "history.csv")])

    run(["evaluate", "--threads", str(threads),
         "--checkpoint", str(d / "model.ckpt"),
         "--inputs", str(d / "test.in.bin"),
         "--outputs", str(d / "test.out.bin"),
         "--json-out", str(d / "report.json")])

    run(["bench", "--threads", str(threads),
         "--checkpoint", str(d / "model.ckpt"),
         "--json-out", str(d / "bench.json")])

    run(["plot", "--threads", str(threads),
         "--checkpoint", str(d / "model.ckpt"),
         "--inputs", str(d / "test.in.bin"),
         "--outputs", str(d / "test.out.bin"),
         "--out-dir", str(d / "plots"), "--svg",
         "--variable", "SO4 as mass", "--variable", "ns concentration"])


if __name__ == "__main__":
    main()
