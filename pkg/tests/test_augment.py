import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vibci.augment import augment_dataset, sliding_windows, window_count, window_geometry
from vibci.data import DataError, EpochedDataset, Montage


def test_four_second_trial_gives_three_windows():
    trial = np.arange(400.0)[None]
    wins = sliding_windows(trial, 100.0, 2.0, 0.5)
    assert len(wins) == 3
    assert [w[0, 0] for w in wins] == [0.0, 100.0, 200.0]


def test_exact_length_gives_one_window():
    assert len(sliding_windows(np.zeros((2, 200)), 100.0, 2.0, 0.5)) == 1


def test_remainder_is_dropped():
    wins = sliding_windows(np.arange(550.0)[None], 100.0, 2.0, 0.5)
    assert len(wins) == 4
    assert wins[-1][0, -1] == 499.0


def test_geometry_errors():
    with pytest.raises(DataError):
        window_geometry(100.0, 2.0, 1.0)
    with pytest.raises(DataError):
        window_geometry(100.0, 2.005, 0.5)
    with pytest.raises(DataError):
        window_geometry(100.0, 0.03, 0.5)  # 3-sample window, 1.5-sample step
    with pytest.raises(DataError):
        sliding_windows(np.zeros((1, 150)), 100.0, 2.0, 0.5)


@settings(max_examples=1200, deadline=None)
@given(st.integers(1, 400), st.integers(1, 60), st.integers(1, 60))
def test_window_count_formula(n, win, step):
    step = min(step, win)
    trial = np.arange(n)[None]
    fs = 1.0
    overlap = 1 - step / win
    if n < win:
        assert window_count(n, win, step) == 0
        return
    wins = sliding_windows(trial, fs, float(win), overlap)
    assert len(wins) == window_count(n, win, step) == (n - win) // step + 1
    for i, w in enumerate(wins):
        np.testing.assert_array_equal(w[0], np.arange(i * step, i * step + win))


def _epochs(n_trials, n_samples=400, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.arange(n_trials) % 4
    data = rng.standard_normal((n_trials, 2, n_samples))
    return EpochedDataset(Montage(("a", "b")), 100.0, data, labels, n_samples / 100, np.arange(n_trials) * 3 + 7)


def test_160_trials_give_480_windows():
    ds = _epochs(160)
    w = augment_dataset(ds, 2.0, 0.5)
    assert len(w) == 480
    assert w.windows.shape == (480, 2, 200)
    for k in range(4):
        assert np.sum(w.labels == k) == 3 * np.sum(ds.labels == k)


def test_windows_are_exact_slices_in_trial_then_time_order():
    ds = _epochs(5, n_samples=550)
    w = augment_dataset(ds, 2.0, 0.5)
    assert len(w) == 20
    i = 0
    for t in range(5):
        for s in range(4):
            assert w.trial_ids[i] == ds.trial_ids[t] and w.labels[i] == ds.labels[t]
            np.testing.assert_array_equal(w.windows[i], ds.data[t, :, 100 * s:100 * s + 200])
            i += 1


def test_empty_dataset():
    ds = EpochedDataset(Montage(("a",)), 100.0, np.zeros((0, 1, 400)), np.zeros(0, int), 4.0)
    w = augment_dataset(ds, 2.0, 0.5)
    assert len(w) == 0 and w.windows.shape == (0, 1, 200)
