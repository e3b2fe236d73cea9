#!/usr/bin/env python3
"""Train a two-channel decoder offline, then run seeded 40-trial online sessions."""

import argparse

from vibci.cnn import TrainConfig
from vibci.data import Montage
from vibci.online import SessionProtocol, format_runs, run_online_session, session_stream
from vibci.pipeline import Preprocessing, imagery_epochs, preprocess, train_cell
from vibci.seeding import derive_seed
from vibci.synthgen import SubjectSpec, generate_subject


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--channels", nargs=2, default=["AF3", "Oz"])
    ap.add_argument("--snr", type=float, default=2.0)
    ap.add_argument("--runs", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    prep = Preprocessing()
    spec = SubjectSpec(montage=Montage(tuple(args.channels)), snr=args.snr)
    ds = imagery_epochs(preprocess(generate_subject(spec, derive_seed(args.seed, "subject", 0)), prep), prep)
    model, metrics = train_cell(ds, args.channels, prep, TrainConfig(), args.seed)
    print(f"offline trial accuracy {metrics.trial_accuracy:.3f} on {metrics.n_trials} held-out trials")
    protocol = SessionProtocol(runs=args.runs)
    reports = []
    for r in range(protocol.runs):
        seed = derive_seed(args.seed, "online-run", r)
        report, _ = run_online_session(model, session_stream(spec, protocol, args.channels, seed), protocol, prep, seed)
        reports.append(report)
    print(format_runs("-".join(args.channels), reports, "Sub01"))


if __name__ == "__main__":
    main()
