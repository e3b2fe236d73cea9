"""Shared preprocessing and one train/evaluate cell, used offline and online."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import constants as K
from .augment import augment_dataset, window_geometry
from .cnn import Metrics, Model, TrainConfig, evaluate, train
from .data import IMAGERY_LABELS, DataError, EpochedDataset, Recording, epoch, split_trials
from .dsp import Band, FirFilter, bandpass_recording, decimate, design_bandpass_fir
from .seeding import derive_seed


@dataclass(frozen=True)
class Preprocessing:
    band: tuple[float, float] = K.BAND_HZ
    decimation: int = K.DECIMATION
    filter_order: int = K.PIPELINE_FIR_ORDER
    epoch_len_s: float = K.EPOCH_LEN_S
    offset_s: float = 0.0
    win_len_s: float = K.WINDOW_S
    overlap: float = K.OVERLAP
    train_fraction: float = K.TRAIN_FRACTION

    def validate(self, fs_hz: float) -> None:
        """Check every downstream precondition for a recording sampled at ``fs_hz``."""
        if int(self.decimation) != self.decimation or self.decimation < 1:
            raise DataError("decimation must be a positive integer")
        rate = fs_hz / self.decimation
        self.fir(rate)
        for what, sec in (("epoch", self.epoch_len_s), ("offset", self.offset_s)):
            n = rate * sec
            if abs(n - round(n)) > 1e-9 or (what == "epoch" and n <= 0):
                raise DataError(f"{what} of {sec} s is not a whole number of samples at {rate} Hz")
        win, _ = window_geometry(rate, self.win_len_s, self.overlap)
        if win > round(rate * self.epoch_len_s):
            raise DataError("window longer than the epoch")
        if not 0 < self.train_fraction < 1:
            raise DataError("train_fraction must lie strictly between 0 and 1")

    def fir(self, fs_hz: float) -> FirFilter:
        return design_bandpass_fir(Band(*self.band), fs_hz, self.filter_order)


def preprocess(recording: Recording, prep: Preprocessing) -> Recording:
    """Decimate, then zero-phase band-pass every channel."""
    rec = decimate(recording, prep.decimation)
    return bandpass_recording(rec, prep.fir(rec.fs_hz))


def imagery_epochs(recording: Recording, prep: Preprocessing) -> EpochedDataset:
    """Imagery trials of an already preprocessed recording."""
    return epoch(recording, prep.epoch_len_s, prep.offset_s, IMAGERY_LABELS)


def train_cell(
    dataset: EpochedDataset,
    channels,
    prep: Preprocessing,
    config: TrainConfig,
    seed: int,
    shuffle_labels: bool = False,
) -> tuple[Model, Metrics]:
    """Split, augment, train and evaluate one channel set with seeds derived from ``seed``."""
    ds = dataset.pick(list(channels))
    train_set, test_set = split_trials(ds, prep.train_fraction, derive_seed(seed, "split"))
    if shuffle_labels:
        rng = np.random.default_rng(derive_seed(seed, "label-shuffle"))
        train_set = train_set.with_labels(rng.permutation(train_set.labels))
    train_w = augment_dataset(train_set, prep.win_len_s, prep.overlap)
    test_w = augment_dataset(test_set, prep.win_len_s, prep.overlap)
    model, history = train(train_w, replace(config, seed=derive_seed(seed, "train")))
    metrics = evaluate(model, test_w)
    metrics.loss_history = history
    return model, metrics
