#!/usr/bin/env python3
"""Summarize a training log: per-term means at the start and end of the run.

Usage: python scripts/summarize_run.py out/train/train_log.jsonl
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from hairedit.losses import LossBreakdown
from hairedit.training import smoothed_series


def term_mean(entries, name):
    vals = [e["loss"]["terms"][name]["value"] for e in entries if e["loss"]["terms"][name]["active"]]
    return sum(vals) / len(vals) if vals else None


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("log", help="path to train_log.jsonl")
    parser.add_argument("--window", type=int, default=30, help="entries to average at each end")
    args = parser.parse_args()

    entries = [json.loads(line) for line in Path(args.log).read_text().splitlines()]
    if not entries:
        print("empty log", file=sys.stderr)
        return 2
    head, tail = entries[: args.window], entries[-args.window :]

    print(f"{len(entries)} iterations")
    print(f"{'term':<20}{'start':>12}{'end':>12}")
    print("-" * 44)
    for name in LossBreakdown.TERM_NAMES:
        a, b = term_mean(head, name), term_mean(tail, name)
        fa = f"{a:.4f}" if a is not None else "--"
        fb = f"{b:.4f}" if b is not None else "--"
        print(f"{name:<20}{fa:>12}{fb:>12}")

    totals = [e["loss"]["total"] for e in entries]
    ema = smoothed_series(totals)
    anchor = ema[min(9, len(ema) - 1)]
    print("-" * 44)
    print(f"{'total (smoothed)':<20}{anchor:>12.4f}{ema[-1]:>12.4f}")
    if anchor > 0:
        print(f"end/iter-10 ratio: {ema[-1] / anchor:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
