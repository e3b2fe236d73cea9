"""Sliding-window augmentation of epoched trials."""

from __future__ import annotations

import numpy as np

from .data import DataError, EpochedDataset, WindowedDataset


def window_geometry(fs_hz: float, win_len_s: float, overlap: float) -> tuple[int, int]:
    """Return (window samples, step samples); both must be positive integers."""
    if not 0 <= overlap < 1:
        raise DataError(f"overlap must be in [0, 1), got {overlap}")
    win = fs_hz * win_len_s
    step = (1 - overlap) * win
    for name, v in (("window", win), ("step", step)):
        if v < 1 - 1e-9 or abs(v - round(v)) > 1e-6:
            raise DataError(f"{name} length {v} samples is not a positive integer")
    return int(round(win)), int(round(step))


def window_count(n_samples: int, win: int, step: int) -> int:
    if n_samples < win:
        return 0
    return (n_samples - win) // step + 1


def sliding_windows(trial, fs_hz: float, win_len_s: float, overlap: float) -> list[np.ndarray]:
    """Complete windows starting at 0, step, 2*step, ...; any remainder is dropped."""
    trial = np.asarray(trial)
    win, step = window_geometry(fs_hz, win_len_s, overlap)
    n = trial.shape[-1]
    if n < win:
        raise DataError(f"trial of {n} samples shorter than a {win}-sample window")
    return [trial[..., s:s + win] for s in range(0, n - win + 1, step)]


def augment_dataset(dataset: EpochedDataset, win_len_s: float, overlap: float) -> WindowedDataset:
    win, step = window_geometry(dataset.fs_hz, win_len_s, overlap)
    n_ch = len(dataset.montage)
    if len(dataset) == 0:
        return WindowedDataset(
            np.zeros((0, n_ch, win)), np.zeros(0, int), np.zeros(0, int),
            win_len_s, overlap, dataset.fs_hz, dataset.montage,
        )
    n = dataset.data.shape[-1]
    if n < win:
        raise DataError(f"trial of {n} samples shorter than a {win}-sample window")
    starts = np.arange(0, n - win + 1, step)
    # trials x starts x channels x win, trial-major then start time
    view = np.lib.stride_tricks.sliding_window_view(dataset.data, win, axis=-1)[:, :, starts]
    windows = view.transpose(0, 2, 1, 3).reshape(-1, n_ch, win)
    k = len(starts)
    return WindowedDataset(
        windows,
        np.repeat(dataset.labels, k),
        np.repeat(dataset.trial_ids, k),
        win_len_s,
        overlap,
        dataset.fs_hz,
        dataset.montage,
    )
