#!/usr/bin/env python3
"""Single-channel and pair scans on synthetic subjects.

Example: python3 scripts/reproduce_tables.py --subjects 2 --repetitions 5 --out results/tables
"""

import argparse
import json
import time
from pathlib import Path

from vibci.channel_select import format_table, rank_channels, scan_pairs, scan_single_channels
from vibci.cnn import TrainConfig
from vibci.constants import SHORTLIST
from vibci.data import Montage
from vibci.pipeline import Preprocessing, imagery_epochs, preprocess
from vibci.seeding import derive_seed
from vibci.synthgen import SubjectSpec, generate_subject


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--subjects", type=int, default=1)
    ap.add_argument("--repetitions", type=int, default=5)
    ap.add_argument("--epochs", type=int, default=200)
    ap.add_argument("--snr", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/tables"))
    args = ap.parse_args()

    prep = Preprocessing()
    spec = SubjectSpec(montage=Montage(SHORTLIST), snr=args.snr)
    t0 = time.perf_counter()
    datasets = {
        f"Sub{i + 1:02d}": imagery_epochs(preprocess(generate_subject(spec, derive_seed(args.seed, "subject", i)), prep), prep)
        for i in range(args.subjects)
    }
    cfg = TrainConfig(epochs=args.epochs)
    channels = scan_single_channels(datasets, SHORTLIST, cfg, args.repetitions, prep, args.seed, args.jobs)
    print(format_table(channels))
    print("top-3:", ", ".join(rank_channels(channels, 3)))
    pairs = scan_pairs(datasets, None, cfg, args.repetitions, prep, args.seed, args.jobs, channels)
    print(format_table(pairs))
    print(f"elapsed {time.perf_counter() - t0:.1f} s")

    args.out.mkdir(parents=True, exist_ok=True)
    for name, rep in (("channel_scan", channels), ("pair_scan", pairs)):
        (args.out / f"{name}.json").write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n")
        (args.out / f"{name}.txt").write_text(format_table(rep))


if __name__ == "__main__":
    main()
