"""Window-method FIR design, forward-backward filtering, decimation, band power."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import oaconvolve

from .data import Recording


class FilterError(ValueError):
    pass


@dataclass(frozen=True)
class Band:
    low_hz: float
    high_hz: float

    def __post_init__(self):
        if not 0 <= self.low_hz < self.high_hz:
            raise FilterError(f"invalid band {self.low_hz}-{self.high_hz} Hz")

    def check(self, fs_hz: float) -> None:
        if self.high_hz >= fs_hz / 2:
            raise FilterError(
                f"band edge {self.high_hz} Hz at or above Nyquist ({fs_hz / 2} Hz)"
            )


@dataclass(frozen=True)
class FirFilter:
    taps: np.ndarray
    order: int
    low_hz: float
    high_hz: float
    fs_hz: float

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float64)
        taps.setflags(write=False)
        if len(taps) != self.order + 1:
            raise FilterError("tap count must be order + 1")
        object.__setattr__(self, "taps", taps)

    def response(self, freqs_hz) -> np.ndarray:
        """Complex frequency response at the given frequencies."""
        n = np.arange(len(self.taps))
        f = np.atleast_1d(np.asarray(freqs_hz, dtype=np.float64))
        return np.exp(-2j * np.pi * np.outer(f, n) / self.fs_hz) @ self.taps


def _ideal_lowpass(cutoff_hz: float, fs_hz: float, order: int) -> np.ndarray:
    n = np.arange(order + 1) - order / 2
    return 2 * cutoff_hz / fs_hz * np.sinc(2 * cutoff_hz * n / fs_hz)


def _hamming(length: int) -> np.ndarray:
    n = np.arange(length)
    return 0.54 - 0.46 * np.cos(2 * np.pi * n / (length - 1))


def _check_order(order: int) -> None:
    if order < 2 or order % 2:
        raise FilterError(f"order must be even and >= 2, got {order}")


def design_bandpass_fir(band: Band, fs_hz: float, order: int) -> FirFilter:
    """Hamming-windowed band-pass: difference of two ideal low-passes at the band edges.

    With a low edge above 0 Hz the windowed taps are DC-nulled by subtracting a
    scaled copy of the window, so the taps sum to zero. Without this a short
    filter leaks most of its DC gain through the low edge (e.g. |H(0)| ~ 0.59
    for order 200, fs 250, 0.5 Hz). The window's own spectrum is negligible
    a few bins above DC, so the passband is unaffected.
    """
    _check_order(order)
    band.check(fs_hz)
    window = _hamming(order + 1)
    ideal = _ideal_lowpass(band.high_hz, fs_hz, order)
    if band.low_hz > 0:
        ideal = ideal - _ideal_lowpass(band.low_hz, fs_hz, order)
    taps = ideal * window
    if band.low_hz > 0:
        taps = taps - window * (taps.sum() / window.sum())
    # exact even symmetry
    taps = 0.5 * (taps + taps[::-1])
    return FirFilter(taps, order, band.low_hz, band.high_hz, fs_hz)


def design_lowpass_fir(cutoff_hz: float, fs_hz: float, order: int) -> FirFilter:
    _check_order(order)
    Band(0.0, cutoff_hz).check(fs_hz)
    taps = _ideal_lowpass(cutoff_hz, fs_hz, order) * _hamming(order + 1)
    taps = 0.5 * (taps + taps[::-1])
    return FirFilter(taps, order, 0.0, cutoff_hz, fs_hz)


def _causal(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    shape = (1,) * (x.ndim - 1) + (len(taps),)
    return oaconvolve(x, taps.reshape(shape), mode="full", axes=-1)[..., : x.shape[-1]]


def zero_phase_filter(signal, fir: FirFilter) -> np.ndarray:
    """Forward-backward FIR filtering along the last axis.

    The signal is reflect-padded by order+1 samples on each side, convolved,
    reversed, convolved again and reversed back; the padding is then trimmed.
    Net magnitude response is |H(f)|^2 with zero phase.
    """
    x = np.asarray(signal, dtype=np.float64)
    n = x.shape[-1]
    pad = fir.order + 1
    if n <= 3 * pad:
        raise FilterError(f"signal of {n} samples too short for order {fir.order} (need > {3 * pad})")
    widths = [(0, 0)] * (x.ndim - 1) + [(pad, pad)]
    y = np.pad(x, widths, mode="reflect")
    y = _causal(y, fir.taps)[..., ::-1]
    y = _causal(y, fir.taps)[..., ::-1]
    return np.ascontiguousarray(y[..., pad:pad + n])


def antialias_filter(fs_hz: float, factor: int) -> FirFilter:
    """Low-pass used before subsampling: cutoff at 0.4 of the new Nyquist rate."""
    new_nyquist = fs_hz / factor / 2
    return design_lowpass_fir(0.4 * new_nyquist, fs_hz, 40 * factor)


def decimate(recording: Recording, factor: int) -> Recording:
    if int(factor) != factor or factor < 1:
        raise FilterError(f"decimation factor must be a positive integer, got {factor}")
    factor = int(factor)
    if factor == 1:
        return recording
    x = zero_phase_filter(recording.samples, antialias_filter(recording.fs_hz, factor))
    n_out = recording.n_samples // factor
    markers = tuple((onset // factor, lab) for onset, lab in recording.markers)
    return Recording(recording.montage, recording.fs_hz / factor, x[:, ::factor][:, :n_out], markers)


def bandpass_recording(recording: Recording, fir: FirFilter) -> Recording:
    if fir.fs_hz != recording.fs_hz:
        raise FilterError(f"filter designed for {fir.fs_hz} Hz, recording is {recording.fs_hz} Hz")
    return Recording(
        recording.montage, recording.fs_hz, zero_phase_filter(recording.samples, fir), recording.markers
    )


def periodogram(signal, fs_hz: float) -> tuple[np.ndarray, np.ndarray]:
    """One-sided rectangular-window periodogram scaled so its bins sum to mean(x**2)."""
    x = np.asarray(signal, dtype=np.float64)
    n = x.shape[-1]
    spec = np.abs(np.fft.rfft(x, axis=-1)) ** 2 / n**2
    spec[..., 1 : (n + 1) // 2] *= 2
    return np.fft.rfftfreq(n, 1 / fs_hz), spec


def band_power(signal, fs_hz: float, band: Band) -> np.ndarray | float:
    """Periodogram power summed over bins with low_hz <= f <= high_hz (last axis).

    A pure tone sitting on a bin contributes its mean power A**2/2.
    """
    band.check(fs_hz)
    x = np.asarray(signal, dtype=np.float64)
    if x.shape[-1] < 2 * fs_hz:
        raise FilterError("band_power needs at least 2 s of signal")
    freqs, spec = periodogram(x, fs_hz)
    sel = (freqs >= band.low_hz) & (freqs <= band.high_hz)
    out = spec[..., sel].sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out
