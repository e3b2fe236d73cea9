"""Single-channel and channel-pair decoder scans with per-subject accuracy tables."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import constants as K
from .cnn import TrainConfig
from .data import DataError, EpochedDataset
from .pipeline import Preprocessing, train_cell


@dataclass
class ScanRow:
    subject: str
    channels: tuple[str, ...]
    trial_accuracies: list[float]
    window_accuracies: list[float]

    @property
    def label(self) -> str:
        return "-".join(self.channels)

    @property
    def mean(self) -> float:
        return float(np.mean(self.trial_accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.trial_accuracies))

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "channels": list(self.channels),
            "mean": self.mean,
            "std": self.std,
            "trial_accuracies": self.trial_accuracies,
            "window_accuracies": self.window_accuracies,
            "window_mean": float(np.mean(self.window_accuracies)),
        }


@dataclass
class ScanReport:
    """Rows per (subject, channel set). ``kind`` is "channel" or "pair"."""

    kind: str
    columns: list[tuple[str, ...]]
    subjects: list[str]
    rows: list[ScanRow] = field(default_factory=list)
    repetitions: int = 1
    master_seed: int = 0

    def row(self, subject: str, column: tuple[str, ...]) -> ScanRow:
        for r in self.rows:
            if r.subject == subject and r.channels == tuple(column):
                return r
        raise KeyError((subject, column))

    def column_average(self, column) -> float:
        """Mean over subjects of the per-subject mean accuracy."""
        means = {r.subject: r.mean for r in self.rows if r.channels == tuple(column)}
        return float(np.mean(list(means.values())))

    def column_std(self, column) -> float:
        stds = {r.subject: r.std for r in self.rows if r.channels == tuple(column)}
        return float(np.mean(list(stds.values())))

    def subject_average(self, subject: str) -> float:
        return float(np.mean([self.row(subject, c).mean for c in self.columns]))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "repetitions": self.repetitions,
            "master_seed": self.master_seed,
            "columns": ["-".join(c) for c in self.columns],
            "subjects": self.subjects,
            "rows": [r.to_dict() for r in self.rows],
            "averages": {"-".join(c): self.column_average(c) for c in self.columns},
            "subject_averages": {s: self.subject_average(s) for s in self.subjects},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScanReport":
        rows = [
            ScanRow(r["subject"], tuple(r["channels"]), r["trial_accuracies"], r["window_accuracies"])
            for r in d["rows"]
        ]
        cols = [tuple(c.split("-")) for c in d["columns"]]
        return cls(d["kind"], cols, d["subjects"], rows, d["repetitions"], d["master_seed"])


ChannelReport = PairReport = ScanReport


def _cell(args):
    dataset, channels, prep, config, seed = args
    _, metrics = train_cell(dataset, channels, prep, config, seed)
    return metrics.trial_accuracy, metrics.window_accuracy


def _scan(kind, datasets, columns, prep, config, repetitions, master_seed, jobs) -> ScanReport:
    if repetitions < 1:
        raise DataError("repetitions must be >= 1")
    if isinstance(datasets, EpochedDataset):
        datasets = {"Sub01": datasets}
    for ds in datasets.values():
        for col in columns:
            ds.montage.indices(col)
    # (subject x column x repetition) grid; cell seed = master_seed + rep, shared by columns
    grid = [
        (subj, col, rep)
        for subj in datasets
        for col in columns
        for rep in range(repetitions)
    ]
    tasks = [(datasets[s].pick(list(c)), list(c), prep, config, master_seed + r) for s, c, r in grid]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell, tasks))
    else:
        results = [_cell(t) for t in tasks]
    report = ScanReport(kind, [tuple(c) for c in columns], list(datasets), [], repetitions, master_seed)
    for subj in datasets:
        for col in columns:
            accs = [res for (s, c, _), res in zip(grid, results) if s == subj and c == col]
            report.rows.append(ScanRow(subj, tuple(col), [a for a, _ in accs], [w for _, w in accs]))
    return report


def scan_single_channels(
    datasets: Mapping[str, EpochedDataset] | EpochedDataset,
    channels: Sequence[str] = K.SHORTLIST,
    config: TrainConfig = TrainConfig(),
    repetitions: int = K.REPETITIONS,
    prep: Preprocessing = Preprocessing(),
    master_seed: int = 0,
    jobs: int = 1,
) -> ScanReport:
    """Decode each channel alone, ``repetitions`` times per subject."""
    columns = [(ch,) for ch in channels]
    return _scan("channel", datasets, columns, prep, config, repetitions, master_seed, jobs)


def rank_channels(report: ScanReport, k: int, montage_order: Sequence[str] = K.MONTAGE_64) -> list[str]:
    """Top-k by average accuracy; ties by lower mean std, then montage order."""
    chans = [c[0] for c in report.columns]
    if k > len(chans):
        raise ValueError(f"k={k} exceeds {len(chans)} channels")
    order = {ch: i for i, ch in enumerate(montage_order)}

    def key(ch):
        pos = order.get(ch, len(order) + chans.index(ch))
        return (-report.column_average((ch,)), report.column_std((ch,)), pos)

    return sorted(chans, key=key)[:k]


def default_pairs(top: Sequence[str]) -> list[tuple[str, str]]:
    return list(itertools.combinations(top, 2))


def scan_pairs(
    datasets: Mapping[str, EpochedDataset] | EpochedDataset,
    pairs: Sequence[tuple[str, str]] | None = None,
    config: TrainConfig = TrainConfig(),
    repetitions: int = K.REPETITIONS,
    prep: Preprocessing = Preprocessing(),
    master_seed: int = 0,
    jobs: int = 1,
    channel_report: ScanReport | None = None,
) -> ScanReport:
    """Decode channel pairs; defaults to all pairs among the top-3 single channels."""
    if pairs is None:
        if channel_report is None:
            raise ValueError("pairs or a channel report to rank is required")
        pairs = default_pairs(rank_channels(channel_report, 3))
    for a, b in pairs:
        if a == b:
            raise DataError(f"pair ({a}, {b}) repeats a channel")
    return _scan("pair", datasets, [tuple(p) for p in pairs], prep, config, repetitions, master_seed, jobs)


def format_table(report: ScanReport) -> str:
    """Aligned plain-text table: subjects as rows, channel sets as columns."""
    heads = ["-".join(c) for c in report.columns]
    with_avg_col = report.kind == "pair"
    if with_avg_col:
        heads.append("Avg.")
    cells = []
    for subj in report.subjects:
        line = []
        for col in report.columns:
            r = report.row(subj, col)
            line.append(f"{r.mean:.3f} (±{r.std:.3f})" if report.kind == "channel" else f"{r.mean:.3f}")
        if with_avg_col:
            line.append(f"{report.subject_average(subj):.3f}")
        cells.append((subj, line))
    if report.kind == "channel":
        cells.append(("Avg.", [f"{report.column_average(c):.3f}" for c in report.columns]))
    else:
        avgs = [report.column_average(c) for c in report.columns]
        cells.append(("Avg.", [f"{a:.3f}" for a in avgs] + [f"{np.mean(avgs):.3f}"]))
    width0 = max(len("Avg."), *(len(s) for s in report.subjects))
    widths = [max(len(h), *(len(line[i]) for _, line in cells)) for i, h in enumerate(heads)]
    out = [" " * width0 + "  " + "  ".join(h.rjust(w) for h, w in zip(heads, widths))]
    for name, line in cells:
        out.append(name.ljust(width0) + "  " + "  ".join(c.rjust(w) for c, w in zip(line, widths)))
    return "\n".join(out) + "\n"
