"""One-vs-rest electrode statistics: permutation tests on log band power."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np

from . import constants as K
from .data import IMAGERY_LABELS, ClassLabel, EpochedDataset, Recording, epoch
from .dsp import Band, band_power
from .seeding import derive_seed


@dataclass(frozen=True)
class ChannelStat:
    channel: str
    t_value: float
    p_value: float
    significant: bool

    def to_dict(self) -> dict:
        return asdict(self)


def welch_t(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Welch two-sample t along the last axis; 0 where both variances vanish."""
    na, nb = a.shape[-1], b.shape[-1]
    va = a.var(axis=-1, ddof=1)
    vb = b.var(axis=-1, ddof=1)
    se = np.sqrt(va / na + vb / nb)
    diff = a.mean(axis=-1) - b.mean(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, diff / np.where(se > 0, se, 1.0), 0.0)
    return t


def _channel_test(x: np.ndarray, y: np.ndarray, n_perm: int, seed: int) -> tuple[float, float]:
    t_obs = float(welch_t(x, y))
    # canonical group order and value order, so p depends only on the two
    # multisets: swapping conditions or reordering epochs leaves it unchanged
    a, b = sorted((np.sort(x), np.sort(y)), key=lambda v: (len(v), v.tobytes()))
    pooled = np.concatenate([a, b])
    # zero-variance input gives t = 0 for every split, hence p = 1 below
    rng = np.random.default_rng(seed)
    perms = np.argsort(rng.random((n_perm, len(pooled))), axis=1)
    shuffled = pooled[perms]
    t_perm = welch_t(shuffled[:, : len(a)], shuffled[:, len(a):])
    # tolerance keeps exact ties (e.g. a permutation reproducing the observed split) counted
    hits = np.sum(np.abs(t_perm) >= abs(t_obs) * (1 - 1e-12))
    return t_obs, float((1 + hits) / (n_perm + 1))


def permutation_test(
    imagery_powers,
    rest_powers,
    channels: Sequence[str],
    n_perm: int = K.N_PERM,
    seed: int = 0,
    alpha: float = K.ALPHA,
    bonferroni: bool = False,
) -> list[ChannelStat]:
    """Per-channel Welch t on log power with a label-permutation p-value.

    ``imagery_powers`` and ``rest_powers`` are channels x epochs. Channel i
    uses seed + i, so results do not depend on evaluation order.
    """
    a = np.asarray(imagery_powers, dtype=np.float64)
    b = np.asarray(rest_powers, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] != b.shape[0] or a.shape[0] != len(channels):
        raise ValueError("powers must be channels x epochs for the same channels")
    if a.shape[1] < 2 or b.shape[1] < 2:
        raise ValueError("need at least 2 epochs per condition")
    if n_perm < 100:
        raise ValueError("n_perm must be >= 100")
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("band powers must be positive to take logs")
    threshold = alpha / len(channels) if bonferroni else alpha
    la, lb = np.log(a), np.log(b)
    out = []
    for i, ch in enumerate(channels):
        t, p = _channel_test(la[i], lb[i], n_perm, seed + i)
        out.append(ChannelStat(ch, t, p, p <= threshold))
    return out


def significant_channels(stats: Sequence[ChannelStat], alpha: float) -> list[str]:
    """Channels with p <= alpha, by ascending p then descending |t|."""
    if not stats:
        raise ValueError("no statistics given")
    hits = [s for s in stats if s.p_value <= alpha]
    return [s.channel for s in sorted(hits, key=lambda s: (s.p_value, -abs(s.t_value)))]


def epoch_powers(dataset: EpochedDataset, band: Band) -> np.ndarray:
    """Band power per channel and epoch, channels x epochs."""
    return band_power(dataset.data, dataset.fs_hz, band).T


def one_vs_rest(
    recording: Recording,
    epoch_len_s: float = K.STATS_EPOCH_LEN_S,
    band: Band = Band(*K.BAND_HZ),
    n_perm: int = K.N_PERM,
    seed: int = 0,
    alpha: float = K.ALPHA,
    bonferroni: bool = False,
) -> dict[str, list[ChannelStat]]:
    """Each imagery class against the Rest epochs of a preprocessed recording."""
    rest = epoch_powers(epoch(recording, epoch_len_s, 0.0, [ClassLabel.Rest]), band)
    names = recording.montage.channel_names
    out = {}
    for lab in IMAGERY_LABELS:
        imag = epoch_powers(epoch(recording, epoch_len_s, 0.0, [lab]), band)
        out[lab.name] = permutation_test(
            imag, rest, names, n_perm, derive_seed(seed, "stats", int(lab)), alpha, bonferroni
        )
    return out


def select_channels(
    per_class: Mapping[str, Sequence[ChannelStat]], alpha: float, mode: str = "union"
) -> list[str]:
    """Combine per-class significant sets; order follows the channel order of the stats."""
    if mode not in ("union", "intersection"):
        raise ValueError(f"unknown selection mode {mode!r}")
    sets = [set(significant_channels(s, alpha)) for s in per_class.values()]
    chosen = set.union(*sets) if mode == "union" else set.intersection(*sets)
    order = [s.channel for s in next(iter(per_class.values()))]
    return [ch for ch in order if ch in chosen]


def stats_report(per_class: Mapping[str, Sequence[ChannelStat]], alpha: float, mode: str) -> dict:
    return {
        "alpha": alpha,
        "selection_mode": mode,
        "classes": {
            name: [s.to_dict() for s in stats] for name, stats in per_class.items()
        },
        "selected_channels": select_channels(per_class, alpha, mode),
    }
