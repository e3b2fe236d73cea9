"""Seeded class-conditional synthetic EEG.

Background (per channel, independent): the sum of equal-variance AR(1)
processes with corner frequencies ``NOISE_CORNERS_HZ``. An AR(1) with pole
p = exp(-2*pi*fc/fs) and unit variance has a low-frequency plateau
proportional to 1/fc, so summing log-spaced corners gives a roughly 1/f
spectrum. The sum is scaled to unit RMS, then to ``background_uv``.

Imagery epochs of class k add two tapered sinusoidal bursts spanning the
epoch: an alpha burst weighted by the alpha topography and a delta burst
weighted by the delta topography, with class-k frequencies and amplitude
multipliers. Burst amplitude is ``snr * background_uv * weight * multiplier``,
with small per-trial frequency and amplitude jitter and one random phase per
trial and rhythm (shared across channels). Rest epochs carry background only.

Timeline: pad, then per trial [rest rest_len_s][imagery epoch_len_s], then pad.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from . import constants as K
from .data import IMAGERY_LABELS, ClassLabel, DataError, Montage, Recording, FULL_MONTAGE


@dataclass(frozen=True)
class ClassSignature:
    alpha_hz: float
    delta_hz: float
    alpha_amp: float = 1.0
    delta_amp: float = 1.0

    def __post_init__(self):
        if not 8 <= self.alpha_hz <= 13:
            raise DataError(f"alpha_hz {self.alpha_hz} outside [8, 13]")
        if not 0.5 <= self.delta_hz <= 4:
            raise DataError(f"delta_hz {self.delta_hz} outside [0.5, 4]")
        if self.alpha_amp < 0 or self.delta_amp < 0:
            raise DataError("amplitude multipliers must be nonnegative")


def default_signatures() -> dict[str, ClassSignature]:
    return {name: ClassSignature(*vals) for name, vals in K.CLASS_SIGNATURES.items()}


@dataclass(frozen=True)
class SubjectSpec:
    montage: Montage = FULL_MONTAGE
    fs_hz: float = K.RECORDING_FS_HZ
    trials_per_class: int = K.TRIALS_PER_CLASS
    epoch_len_s: float = K.EPOCH_LEN_S
    rest_len_s: float = K.REST_LEN_S
    snr: float = 2.0
    alpha_topography: dict = field(default_factory=lambda: dict(K.ALPHA_TOPOGRAPHY))
    delta_topography: dict = field(default_factory=lambda: dict(K.DELTA_TOPOGRAPHY))
    class_signatures: dict = field(default_factory=default_signatures)
    background_uv: float = K.BACKGROUND_UV

    def __post_init__(self):
        if self.trials_per_class < 1:
            raise DataError("trials_per_class must be >= 1")
        if self.snr < 0:
            raise DataError("snr must be nonnegative")
        if self.fs_hz <= 0 or self.epoch_len_s <= 0 or self.rest_len_s <= 0:
            raise DataError("fs_hz, epoch_len_s and rest_len_s must be positive")
        for topo in (self.alpha_topography, self.delta_topography):
            for ch, w in topo.items():
                if not 0 <= w <= 1:
                    raise DataError(f"topography weight {ch}={w} outside [0, 1]")
        sigs = {
            k: v if isinstance(v, ClassSignature) else ClassSignature(*v)
            for k, v in self.class_signatures.items()
        }
        if sorted(sigs) != sorted(lab.name for lab in IMAGERY_LABELS):
            raise DataError("class_signatures needs exactly the four imagery classes")
        object.__setattr__(self, "class_signatures", sigs)

    def weights(self, topo: dict) -> np.ndarray:
        return np.array([topo.get(ch, 0.0) for ch in self.montage.channel_names])

    def replace(self, **changes) -> "SubjectSpec":
        return dataclasses.replace(self, **changes)


def pink_background(n_channels: int, n_samples: int, fs_hz: float, rng) -> np.ndarray:
    """Unit-RMS approximately-1/f noise, channels x samples (float32).

    Channels are generated one at a time to bound memory at 1000 Hz.
    """
    corners = [fc for fc in K.NOISE_CORNERS_HZ if fc < fs_hz / 2] or [fs_hz / 4]
    out = np.empty((n_channels, n_samples), dtype=np.float32)
    for ch in range(n_channels):
        acc = np.zeros(n_samples)
        for fc in corners:
            p = np.exp(-2 * np.pi * fc / fs_hz)
            white = rng.standard_normal(n_samples)
            # stationary start: previous output ~ N(0, 1)
            zi = [p * rng.standard_normal()]
            acc += lfilter([np.sqrt(1 - p * p)], [1, -p], white, zi=zi)[0]
        out[ch] = acc / np.sqrt(np.mean(acc**2))
    return out


def burst_envelope(n: int) -> np.ndarray:
    """Tukey envelope: flat with cosine ramps over BURST_TAPER of the epoch at each end."""
    env = np.ones(n)
    m = max(int(K.BURST_TAPER * n), 1)
    ramp = 0.5 * (1 - np.cos(np.pi * np.arange(m) / m))
    env[:m] = ramp
    env[n - m:] = ramp[::-1]
    return env


def imagery_signal(spec: SubjectSpec, label: ClassLabel, rng) -> np.ndarray:
    """Class-specific burst added to one imagery epoch, channels x samples."""
    n = int(round(spec.epoch_len_s * spec.fs_hz))
    sig = spec.class_signatures[label.name]
    t = np.arange(n) / spec.fs_hz
    env = burst_envelope(n)
    scale = spec.snr * spec.background_uv
    out = np.zeros((len(spec.montage), n))
    for freq, amp, topo in (
        (sig.alpha_hz, sig.alpha_amp, spec.alpha_topography),
        (sig.delta_hz, sig.delta_amp, spec.delta_topography),
    ):
        f = freq + K.FREQ_JITTER_HZ * rng.standard_normal()
        a = amp * np.exp(K.AMP_JITTER * rng.standard_normal())
        phase = rng.uniform(0, 2 * np.pi)
        wave = env * np.sin(2 * np.pi * f * t + phase)
        out += np.outer(scale * a * spec.weights(topo), wave)
    return out


def trial_order(trials_per_class: int, rng) -> list[ClassLabel]:
    labels = [lab for lab in IMAGERY_LABELS for _ in range(trials_per_class)]
    return [labels[i] for i in rng.permutation(len(labels))]


def generate_subject(spec: SubjectSpec, seed: int) -> Recording:
    """Continuous recording with Rest and imagery markers; a pure function of (spec, seed)."""
    fs = spec.fs_hz
    n_rest = int(round(spec.rest_len_s * fs))
    n_epoch = int(round(spec.epoch_len_s * fs))
    n_pad = int(round(K.RECORDING_PAD_S * fs))
    noise_rng, trial_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))

    order = trial_order(spec.trials_per_class, trial_rng)
    total = 2 * n_pad + len(order) * (n_rest + n_epoch)
    samples = pink_background(len(spec.montage), total, fs, noise_rng)
    samples *= np.float32(spec.background_uv)

    markers = []
    pos = n_pad
    for label in order:
        markers.append((pos, ClassLabel.Rest))
        pos += n_rest
        markers.append((pos, label))
        if spec.snr > 0:
            samples[:, pos:pos + n_epoch] += imagery_signal(spec, label, trial_rng)
        pos += n_epoch
    return Recording(spec.montage, fs, samples, tuple(markers))


def generate_trials(spec: SubjectSpec, labels, seed: int, lead_s: float, tail_s: float):
    """Independent per-trial snippets [lead rest][imagery][tail] for streaming.

    Returns a list of (channels x samples array, imagery onset sample).
    """
    fs = spec.fs_hz
    n_lead, n_tail = int(round(lead_s * fs)), int(round(tail_s * fs))
    n_epoch = int(round(spec.epoch_len_s * fs))
    out = []
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(len(labels))):
        noise_rng, sig_rng = (np.random.default_rng(s) for s in child.spawn(2))
        x = pink_background(len(spec.montage), n_lead + n_epoch + n_tail, fs, noise_rng)
        x = x.astype(np.float64) * spec.background_uv
        if spec.snr > 0:
            x[:, n_lead:n_lead + n_epoch] += imagery_signal(spec, ClassLabel(labels[i]), sig_rng)
        out.append((x.astype(np.float32), n_lead))
    return out
