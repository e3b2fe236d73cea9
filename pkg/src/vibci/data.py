"""Recordings, montages, epochs and the on-disk dataset format."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .constants import MONTAGE_64

FORMAT_VERSION = 1
META_FILE = "meta.json"
SAMPLES_FILE = "samples.f32le"


class DataError(ValueError):
    """Raised when a recording or dataset violates its invariants."""


class ClassLabel(enum.IntEnum):
    PourWater = 0
    OpenDoor = 1
    EatFood = 2
    PickUpPhone = 3
    Rest = 4

    @property
    def is_imagery(self) -> bool:
        return self is not ClassLabel.Rest


IMAGERY_LABELS = tuple(lab for lab in ClassLabel if lab.is_imagery)
N_CLASSES = len(IMAGERY_LABELS)


@dataclass(frozen=True)
class Montage:
    channel_names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.channel_names)
        object.__setattr__(self, "channel_names", names)
        if len(set(names)) != len(names):
            raise DataError(f"duplicate channel names in montage: {names}")
        if not names:
            raise DataError("empty montage")

    def __len__(self):
        return len(self.channel_names)

    def index(self, name: str) -> int:
        try:
            return self.channel_names.index(name)
        except ValueError:
            raise DataError(f"unknown channel {name!r}") from None

    def indices(self, names: Iterable[str]) -> list[int]:
        return [self.index(n) for n in names]

    def pick(self, names: Sequence[str]) -> "Montage":
        self.indices(names)
        return Montage(tuple(names))


FULL_MONTAGE = Montage(MONTAGE_64)


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _check_rate_len(fs_hz: float, seconds: float, what: str) -> int:
    n = fs_hz * seconds
    if n <= 0 or abs(n - round(n)) > 1e-9:
        raise DataError(f"{what}: fs_hz*seconds = {n} is not a positive integer")
    return int(round(n))


@dataclass(frozen=True)
class Recording:
    """Continuous multichannel signal. Samples are float32 microvolts, channels x time."""

    montage: Montage
    fs_hz: float
    samples: np.ndarray
    markers: tuple[tuple[int, ClassLabel], ...] = ()

    def __post_init__(self):
        samples = _frozen(self.samples, np.float32)
        if samples.ndim != 2:
            raise DataError("samples must be 2-D (channels x time)")
        if samples.shape[0] != len(self.montage):
            raise DataError(
                f"{samples.shape[0]} sample rows for a {len(self.montage)}-channel montage"
            )
        if not self.fs_hz > 0:
            raise DataError("fs_hz must be positive")
        markers = tuple((int(o), ClassLabel(lab)) for o, lab in self.markers)
        onsets = [o for o, _ in markers]
        if onsets != sorted(onsets):
            raise DataError("markers must be sorted by onset")
        if onsets and (onsets[0] < 0 or onsets[-1] >= samples.shape[1]):
            raise DataError("marker onset outside the recording")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "markers", markers)
        object.__setattr__(self, "fs_hz", float(self.fs_hz))

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs_hz

    def pick(self, channels: Sequence[str]) -> "Recording":
        idx = self.montage.indices(channels)
        return Recording(self.montage.pick(channels), self.fs_hz, self.samples[idx], self.markers)

    def __eq__(self, other):
        if not isinstance(other, Recording):
            return NotImplemented
        return (
            self.montage == other.montage
            and self.fs_hz == other.fs_hz
            and self.markers == other.markers
            and self.samples.shape == other.samples.shape
            and self.samples.tobytes() == other.samples.tobytes()
        )

    __hash__ = None


@dataclass(frozen=True)
class EpochedDataset:
    """Labeled trials of identical shape. ``trial_ids`` survive splitting."""

    montage: Montage
    fs_hz: float
    data: np.ndarray  # trials x channels x samples
    labels: np.ndarray
    epoch_len_s: float
    trial_ids: np.ndarray = None

    def __post_init__(self):
        data = _frozen(self.data, np.float64)
        if data.ndim != 3:
            raise DataError("epoch data must be trials x channels x samples")
        labels = _frozen(self.labels, np.int64)
        if labels.shape != (data.shape[0],):
            raise DataError("one label per trial required")
        ids = np.arange(data.shape[0]) if self.trial_ids is None else self.trial_ids
        ids = _frozen(ids, np.int64)
        if ids.shape != labels.shape or len(set(ids.tolist())) != len(ids):
            raise DataError("trial_ids must be unique, one per trial")
        if data.shape[0] and data.shape[1] != len(self.montage):
            raise DataError("channel count does not match montage")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "trial_ids", ids)

    def __len__(self):
        return len(self.labels)

    @property
    def class_counts(self) -> dict[ClassLabel, int]:
        return {lab: int(np.sum(self.labels == lab)) for lab in ClassLabel}

    def subset(self, mask_or_idx) -> "EpochedDataset":
        idx = np.arange(len(self))[mask_or_idx]
        return EpochedDataset(
            self.montage, self.fs_hz, self.data[idx], self.labels[idx],
            self.epoch_len_s, self.trial_ids[idx],
        )

    def pick(self, channels: Sequence[str]) -> "EpochedDataset":
        idx = self.montage.indices(channels)
        return EpochedDataset(
            self.montage.pick(channels), self.fs_hz, self.data[:, idx],
            self.labels, self.epoch_len_s, self.trial_ids,
        )

    def with_labels(self, labels) -> "EpochedDataset":
        return EpochedDataset(
            self.montage, self.fs_hz, self.data, labels, self.epoch_len_s, self.trial_ids
        )


@dataclass(frozen=True)
class WindowedDataset:
    windows: np.ndarray  # n x channels x win_samples
    labels: np.ndarray
    trial_ids: np.ndarray
    win_len_s: float
    overlap_fraction: float
    fs_hz: float = 0.0
    montage: Montage | None = field(default=None, compare=False)

    def __post_init__(self):
        w = _frozen(self.windows, np.float64)
        if w.ndim != 3:
            raise DataError("windows must be n x channels x samples")
        labels = _frozen(self.labels, np.int64)
        ids = _frozen(self.trial_ids, np.int64)
        if labels.shape != (w.shape[0],) or ids.shape != labels.shape:
            raise DataError("one label and one source trial per window")
        object.__setattr__(self, "windows", w)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "trial_ids", ids)

    def __len__(self):
        return len(self.labels)

    def with_labels(self, labels) -> "WindowedDataset":
        return WindowedDataset(
            self.windows, labels, self.trial_ids, self.win_len_s,
            self.overlap_fraction, self.fs_hz, self.montage,
        )


# -- persistence --------------------------------------------------------------


def save_recording(recording: Recording, path) -> Path:
    """Write ``meta.json`` plus a raw little-endian float32 payload into ``path``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {
        "format_version": FORMAT_VERSION,
        "channel_names": list(recording.montage.channel_names),
        "fs_hz": recording.fs_hz,
        "n_channels": len(recording.montage),
        "n_samples": recording.n_samples,
        "byte_order": "little",
        "dtype": "float32",
        "markers": [[onset, label.name] for onset, label in recording.markers],
    }
    payload = np.ascontiguousarray(recording.samples, dtype="<f4")
    (path / SAMPLES_FILE).write_bytes(payload.tobytes(order="C"))
    (path / META_FILE).write_text(json.dumps(meta, indent=1) + "\n")
    return path


def load_recording(path) -> Recording:
    path = Path(path)
    meta_path, samples_path = path / META_FILE, path / SAMPLES_FILE
    if not meta_path.is_file() or not samples_path.is_file():
        raise FileNotFoundError(f"{path} is not a recording directory")
    meta = json.loads(meta_path.read_text())
    if meta.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unknown format version {meta.get('format_version')!r}")
    if meta.get("byte_order") != "little" or meta.get("dtype") != "float32":
        raise DataError("only little-endian float32 payloads are supported")
    names = meta["channel_names"]
    n_ch, n_s = int(meta["n_channels"]), int(meta["n_samples"])
    if n_ch != len(names):
        raise DataError(f"meta declares {n_ch} channels but lists {len(names)} names")
    raw = samples_path.read_bytes()
    if len(raw) != n_ch * n_s * 4:
        raise DataError(
            f"payload has {len(raw)} bytes, metadata implies {n_ch * n_s * 4}"
        )
    samples = np.frombuffer(raw, dtype="<f4").reshape(n_ch, n_s)
    markers = [(int(o), ClassLabel[name]) for o, name in meta["markers"]]
    return Recording(Montage(tuple(names)), float(meta["fs_hz"]), samples, tuple(markers))


# -- epoching and splitting ---------------------------------------------------


def epoch(
    recording: Recording,
    epoch_len_s: float,
    offset_s: float = 0.0,
    labels: Iterable[ClassLabel] | None = None,
) -> EpochedDataset:
    """Cut one epoch per marker (optionally only markers with the given labels)."""
    n = _check_rate_len(recording.fs_hz, epoch_len_s, "epoch length")
    off = recording.fs_hz * offset_s
    if abs(off - round(off)) > 1e-9:
        raise DataError("offset must be a whole number of samples")
    off = int(round(off))
    keep = None if labels is None else {ClassLabel(lab) for lab in labels}
    chunks, labs = [], []
    for onset, label in recording.markers:
        if keep is not None and label not in keep:
            continue
        start = onset + off
        if start < 0 or start + n > recording.n_samples:
            raise DataError(
                f"epoch at sample {start} (+{n}) overruns recording of {recording.n_samples}"
            )
        chunks.append(recording.samples[:, start:start + n])
        labs.append(int(label))
    data = (
        np.stack(chunks).astype(np.float64)
        if chunks
        else np.zeros((0, len(recording.montage), n))
    )
    return EpochedDataset(recording.montage, recording.fs_hz, data, np.array(labs, dtype=np.int64), epoch_len_s)


def split_trials(
    dataset: EpochedDataset, train_fraction: float, seed: int
) -> tuple[EpochedDataset, EpochedDataset]:
    """Stratified trial-level split; each class contributes round(fraction*n) trials to train."""
    if not 0 < train_fraction < 1:
        raise DataError("train_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for lab in np.unique(dataset.labels):
        idx = np.flatnonzero(dataset.labels == lab)
        if len(idx) < 2:
            raise DataError(f"class {ClassLabel(lab).name} has fewer than 2 trials")
        idx = rng.permutation(idx)
        n_train = min(max(int(round(train_fraction * len(idx))), 1), len(idx) - 1)
        train_idx.extend(idx[:n_train])
        test_idx.extend(idx[n_train:])
    return dataset.subset(np.sort(train_idx)), dataset.subset(np.sort(test_idx))
