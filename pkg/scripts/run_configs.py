"""Run every shipped config through the CLI into an output directory.

Configs with a sweep section produce a CSV, the rest a JSON record.

    python3 scripts/run_configs.py [outdir] [--only NAME ...]
"""

import argparse
import sys
import time
from pathlib import Path

import yaml

from porecap.cli import main as porecap

CONFIGS = Path(__file__).resolve().parents[1] / "docs" / "configs"


def run(path, outdir):
    data = yaml.safe_load(path.read_text())
    if "sweep" in data:
        out = outdir / f"{path.stem}.csv"
        argv = ["sweep", "--config", str(path), "--out", str(out)]
    else:
        out = outdir / f"{path.stem}.json"
        argv = ["solve", "--config", str(path), "--out", str(out)]
    t = time.time()
    code = porecap(argv)
    print(f"{path.name}: exit {code}, {time.time() - t:.1f} s -> {out}", flush=True)
    return code


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("outdir", nargs="?", default="results")
    ap.add_argument("--only", nargs="+", help="config stems to run")
    args = ap.parse_args()
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = sorted(CONFIGS.glob("*.yaml"))
    if args.only:
        paths = [p for p in paths if p.stem in args.only]
    codes = [run(p, outdir) for p in paths]
    return max(codes, default=0)


if __name__ == "__main__":
    sys.exit(main())
