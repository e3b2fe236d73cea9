"""``vibci`` command line: synthetic data, preprocessing, statistics, scans and
online simulation driven by one JSON config and one master seed.

Seeds are derived from the master seed by component name:
subject i of ``synth`` uses ``derive_seed(seed, "subject", i)``, statistics of
subject i use ``derive_seed(seed, "stats-subject", i)``, online run r uses
``derive_seed(seed, "online-run", r)``; scans and ``train`` pass the master
seed straight to the channel-select and pipeline modules.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .channel_select import ScanReport, format_table, scan_pairs, scan_single_channels
from .cnn import ModelError, load_model, model_channels, save_model
from .config import ConfigError, PipelineConfig
from .data import IMAGERY_LABELS, DataError, Recording, load_recording, save_recording
from .dsp import Band, FilterError
from .online import ArmError, RunReport, TrialResult, format_runs, run_online_session, session_stream
from .pipeline import Preprocessing, imagery_epochs, preprocess, train_cell
from .seeding import derive_seed
from .stats import one_vs_rest, stats_report
from .synthgen import generate_subject

MANIFEST = "dataset.json"


def dump_json(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def subject_name(i: int) -> str:
    return f"Sub{i + 1:02d}"


# -- datasets ------------------------------------------------------------------


def synthesize(cfg: PipelineConfig) -> dict[str, Recording]:
    spec = cfg.synth.subject_spec()
    return {
        subject_name(i): generate_subject(spec, derive_seed(cfg.seed, "subject", i))
        for i in range(cfg.synth.n_subjects)
    }


def _filter_settings(prep: Preprocessing) -> dict:
    return {"band": list(prep.band), "decimation": prep.decimation, "filter_order": prep.filter_order}


def save_dataset(recordings: dict[str, Recording], out: Path, preprocessing: dict | None) -> None:
    for name, rec in recordings.items():
        save_recording(rec, out / name)
    dump_json({"subjects": list(recordings), "preprocessing": preprocessing}, out / MANIFEST)


def load_dataset(path: Path) -> tuple[dict[str, Recording], dict | None]:
    """A dataset directory (with manifest) or a single recording directory."""
    if (path / MANIFEST).is_file():
        manifest = json.loads((path / MANIFEST).read_text())
        recs = {name: load_recording(path / name) for name in manifest["subjects"]}
        return recs, manifest.get("preprocessing")
    return {path.name: load_recording(path)}, None


def prepared(cfg: PipelineConfig, dataset: Path | None) -> dict[str, Recording]:
    """Preprocessed recordings, from disk or freshly synthesized."""
    prep = cfg.preprocess.build()
    if dataset is None:
        return {k: preprocess(r, prep) for k, r in synthesize(cfg).items()}
    recs, done = load_dataset(dataset)
    if done is None:
        for rec in recs.values():
            prep.validate(rec.fs_hz)
        return {k: preprocess(r, prep) for k, r in recs.items()}
    if done != _filter_settings(prep):
        raise DataError(f"{dataset} was preprocessed with {done}, config asks for {_filter_settings(prep)}")
    return recs


# -- commands ------------------------------------------------------------------


def cmd_synth(cfg, args) -> None:
    save_dataset(synthesize(cfg), args.out, None)


def cmd_preprocess(cfg, args) -> None:
    recs = prepared(cfg, args.dataset)
    save_dataset(recs, args.out, _filter_settings(cfg.preprocess.build()))


def cmd_stats(cfg, args) -> None:
    st = cfg.stats
    subjects = {}
    for i, (name, rec) in enumerate(prepared(cfg, args.dataset).items()):
        per_class = one_vs_rest(rec, st.epoch_len_s, Band(*st.band), st.n_perm,
                                derive_seed(cfg.seed, "stats-subject", i), st.alpha, st.bonferroni)
        threshold = st.alpha / len(rec.montage) if st.bonferroni else st.alpha
        subjects[name] = stats_report(per_class, threshold, st.selection)
    report = {"kind": "stats", "seed": cfg.seed, "bonferroni": st.bonferroni, "subjects": subjects}
    dump_json(report, args.out / "stats.json")
    (args.out / "stats.txt").write_text(render(report))


def cmd_train(cfg, args) -> None:
    recs = prepared(cfg, args.dataset)
    name = cfg.train.subject or next(iter(recs))
    if name not in recs:
        raise DataError(f"subject {name!r} not in dataset")
    prep = cfg.preprocess.build()
    ds = imagery_epochs(recs[name], prep)
    model, metrics = train_cell(ds, cfg.train.channels, prep, cfg.train.build(cfg.seed), cfg.seed)
    save_model(model, args.out / "model", cfg.train.channels)
    report = {"kind": "train", "seed": cfg.seed, "subject": name,
              "channels": list(cfg.train.channels), "metrics": metrics.to_dict()}
    dump_json(report, args.out / "train.json")
    (args.out / "train.txt").write_text(render_train(report))


def _epoched(cfg, dataset):
    prep = cfg.preprocess.build()
    return {k: imagery_epochs(r, prep) for k, r in prepared(cfg, dataset).items()}


def _write_scan(report: ScanReport, out: Path, stem: str) -> None:
    dump_json(report.to_dict(), out / f"{stem}.json")
    (out / f"{stem}.txt").write_text(format_table(report))


def cmd_channel_scan(cfg, args) -> None:
    report = scan_single_channels(
        _epoched(cfg, args.dataset), cfg.scan.channels, cfg.train.build(cfg.seed),
        cfg.scan.repetitions, cfg.preprocess.build(), cfg.seed, args.jobs,
    )
    _write_scan(report, args.out, "channel_scan")


def cmd_pair_scan(cfg, args) -> None:
    datasets = _epoched(cfg, args.dataset)
    train_cfg, prep = cfg.train.build(cfg.seed), cfg.preprocess.build()
    channel_report = None
    pairs = [tuple(p) for p in cfg.scan.pairs] if cfg.scan.pairs is not None else None
    if pairs is None:
        if args.channel_report is not None:
            channel_report = ScanReport.from_dict(json.loads(args.channel_report.read_text()))
        else:
            channel_report = scan_single_channels(
                datasets, cfg.scan.channels, train_cfg, cfg.scan.repetitions, prep, cfg.seed, args.jobs
            )
            _write_scan(channel_report, args.out, "channel_scan")
    report = scan_pairs(datasets, pairs, train_cfg, cfg.scan.repetitions, prep, cfg.seed,
                        args.jobs, channel_report)
    _write_scan(report, args.out, "pair_scan")


def cmd_online_sim(cfg, args) -> None:
    prep = cfg.preprocess.build()
    if args.model is not None:
        model = load_model(args.model)
        channels = model_channels(args.model) or list(cfg.train.channels)
    else:
        recs = prepared(cfg, args.dataset)
        name = cfg.train.subject or next(iter(recs))
        channels = list(cfg.train.channels)
        model, _ = train_cell(imagery_epochs(recs[name], prep), channels, prep,
                              cfg.train.build(cfg.seed), cfg.seed)
    protocol = cfg.online.build()
    spec = cfg.synth.subject_spec()
    runs, traces = [], []
    for r in range(protocol.runs):
        seed = derive_seed(cfg.seed, "online-run", r)
        report, trace = run_online_session(model, session_stream(spec, protocol, channels, seed),
                                           protocol, prep, seed)
        runs.append(report)
        traces.append(trace)
    column = "-".join(channels)
    out = {
        "kind": "online",
        "seed": cfg.seed,
        "channels": channels,
        "runs": [dict(r.to_dict(), arm=t.to_dict()) for r, t in zip(runs, traces)],
    }
    dump_json(out, args.out / "online.json")
    (args.out / "online.txt").write_text(format_runs(column, runs))


# -- report rendering ------------------------------------------------------------


def render_stats(report: dict) -> str:
    lines = []
    order = [lab.name for lab in IMAGERY_LABELS]
    for cls, stats in sorted(report["classes"].items(), key=lambda kv: order.index(kv[0])):
        hits = [s for s in stats if s["significant"]]
        hits.sort(key=lambda s: (s["p_value"], -abs(s["t_value"])))
        cells = ", ".join(f"{s['channel']} (t={s['t_value']:.2f}, p={s['p_value']:.4f})" for s in hits)
        lines.append(f"  {cls}: {cells or 'none'}")
    lines.append(f"  selected ({report['selection_mode']}): {', '.join(report['selected_channels']) or 'none'}")
    return "\n".join(lines) + "\n"


def render_train(report: dict) -> str:
    m = report["metrics"]
    rows = [" ".join(f"{v:3d}" for v in row) for row in m["trial_confusion"]]
    return (
        f"{report['subject']} {'-'.join(report['channels'])}\n"
        f"trial accuracy  {m['trial_accuracy']:.3f} ({m['n_trials']} trials)\n"
        f"window accuracy {m['window_accuracy']:.3f} ({m['n_windows']} windows)\n"
        "trial confusion (rows true, columns decoded):\n" + "\n".join(rows) + "\n"
    )


def render(report: dict) -> str:
    kind = report.get("kind")
    if kind in ("channel", "pair"):
        return format_table(ScanReport.from_dict(report))
    if kind == "stats":
        return "".join(f"{name}\n" + render_stats(r) for name, r in report["subjects"].items())
    if kind == "train":
        return render_train(report)
    if kind == "online":
        runs = [
            RunReport([TrialResult(t["index"], t["true"], t["decoded"], t["window_decisions"])
                       for t in r["trials"]], r["seed"])
            for r in report["runs"]
        ]
        return format_runs("-".join(report["channels"]), runs)
    raise DataError(f"unrecognized report kind {kind!r}")


def cmd_report(cfg, args) -> None:
    text = render(json.loads(args.report.read_text()))
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / (args.report.stem + ".txt")).write_text(text)


# -- argument parsing ------------------------------------------------------------

COMMANDS = {
    "synth": cmd_synth,
    "preprocess": cmd_preprocess,
    "stats": cmd_stats,
    "train": cmd_train,
    "channel-scan": cmd_channel_scan,
    "pair-scan": cmd_pair_scan,
    "online-sim": cmd_online_sim,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config (defaults used when omitted)")
    common.add_argument("--seed", type=int, help="master seed, overrides the config")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for scans")

    parser = argparse.ArgumentParser(prog="vibci", description=__doc__.splitlines()[0])
    parser.add_argument("--print-default-config", action="store_true",
                        help="print the default JSON config and exit")
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "report":
            p.add_argument("report", type=Path, help="JSON report written by another command")
        elif name != "synth":
            p.add_argument("dataset", type=Path, nargs="?",
                           help="dataset directory; synthesized from the config when omitted")
        if name == "pair-scan":
            p.add_argument("--channel-report", type=Path,
                           help="channel_scan.json to rank when no pairs are configured")
        if name == "online-sim":
            p.add_argument("--model", type=Path, help="saved model directory; trained when omitted")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_default_config:
        sys.stdout.write(PipelineConfig().to_json())
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        cfg.validate()
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if args.out is None and args.command != "report":
            raise ConfigError(f"{args.command} needs --out")
        COMMANDS[args.command](cfg, args)
    except (ConfigError, DataError, FilterError, ModelError, ArmError,
            FileNotFoundError, ValueError, KeyError) as e:
        print(f"vibci {args.command}: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
