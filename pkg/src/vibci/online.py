"""Simulated online session: cued trials are streamed, decoded by window vote,
and executed on a logged robotic-arm state machine."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import binom

from . import constants as K
from .augment import sliding_windows
from .cnn import Model, predict_proba, vote
from .data import IMAGERY_LABELS, ClassLabel, DataError, Montage, Recording
from .pipeline import Preprocessing, preprocess
from .seeding import derive_seed
from .synthgen import SubjectSpec, generate_trials, trial_order

IDLE, EXECUTING = "Idle", "Executing"


class ArmError(RuntimeError):
    pass


@dataclass(frozen=True)
class SessionProtocol:
    trials_per_class: int = K.SESSION_TRIALS_PER_CLASS
    runs: int = K.SESSION_RUNS
    # context streamed around each cued epoch so the filters have room to settle
    lead_s: float = 2.0
    tail_s: float = 1.0

    def __post_init__(self):
        if self.trials_per_class < 1 or self.runs < 1:
            raise DataError("trials_per_class and runs must be >= 1")
        if self.lead_s < 0 or self.tail_s < 0:
            raise DataError("lead_s and tail_s must be nonnegative")

    @property
    def total_trials(self) -> int:
        return len(IMAGERY_LABELS) * self.trials_per_class


@dataclass(frozen=True)
class SessionTrial:
    index: int
    label: ClassLabel
    samples: np.ndarray  # channels x samples, raw
    onset: int  # first sample of the imagery epoch
    fs_hz: float
    channels: tuple[str, ...]


@dataclass
class ArmTrace:
    transitions: list = field(default_factory=list)  # (trial, action, from, to)

    @property
    def state(self) -> str:
        return self.transitions[-1][3] if self.transitions else IDLE

    def begin(self, action: ClassLabel, trial: int) -> None:
        if self.state != IDLE:
            raise ArmError("arm is already executing an action")
        self.transitions.append((trial, action.name, IDLE, EXECUTING))

    def finish(self) -> None:
        if self.state != EXECUTING:
            raise ArmError("arm is not executing")
        trial, action, _, _ = self.transitions[-1]
        self.transitions.append((trial, action, EXECUTING, IDLE))

    def actions(self) -> list[tuple[int, str]]:
        return [(t, a) for t, a, _, to in self.transitions if to == EXECUTING]

    def to_dict(self) -> dict:
        return {
            "final_state": self.state,
            "transitions": [
                {"trial": t, "action": a, "from": f, "to": to} for t, a, f, to in self.transitions
            ],
        }


def arm_execute(action: ClassLabel, trace: ArmTrace, trial: int = 0) -> ArmTrace:
    """Run one action to completion: Idle -> Executing -> Idle."""
    action = ClassLabel(action)
    if not action.is_imagery:
        raise ArmError("Rest is not an arm action")
    trace.begin(action, trial)
    trace.finish()
    return trace


def success_rate(correct: int, total: int) -> float:
    if total <= 0:
        raise ValueError("total must be positive")
    if not 0 <= correct <= total:
        raise ValueError("need 0 <= correct <= total")
    return correct / total


def format_rate(correct: int, total: int) -> str:
    """Two-decimal rate with counts, rounding halves up: 29/40 -> '0.73 (29/40)'."""
    success_rate(correct, total)
    rate = (Decimal(correct) / Decimal(total)).quantize(Decimal("0.01"), ROUND_HALF_UP)
    return f"{rate} ({correct}/{total})"


@dataclass
class TrialResult:
    index: int
    true_label: str
    decoded_label: str
    window_decisions: list

    @property
    def correct(self) -> bool:
        return self.true_label == self.decoded_label


@dataclass
class RunReport:
    trials: list[TrialResult]
    seed: int = 0

    @property
    def correct(self) -> int:
        return sum(t.correct for t in self.trials)

    @property
    def total(self) -> int:
        return len(self.trials)

    @property
    def success_rate(self) -> float:
        return success_rate(self.correct, self.total)

    def summary(self) -> str:
        return format_rate(self.correct, self.total)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "correct": self.correct,
            "total": self.total,
            "success_rate": self.success_rate,
            "display": self.summary(),
            "trials": [
                {
                    "index": t.index,
                    "true": t.true_label,
                    "decoded": t.decoded_label,
                    "window_decisions": t.window_decisions,
                }
                for t in self.trials
            ],
        }


def session_stream(
    spec: SubjectSpec, protocol: SessionProtocol, channels: Sequence[str], seed: int
) -> list[SessionTrial]:
    """Fresh synthetic cued trials in a seeded, class-balanced order."""
    rng = np.random.default_rng(derive_seed(seed, "session-order"))
    labels = trial_order(protocol.trials_per_class, rng)
    sub = spec.replace(montage=Montage(tuple(channels)))
    snippets = generate_trials(
        sub, labels, derive_seed(seed, "session-trials"), protocol.lead_s, protocol.tail_s
    )
    return [
        SessionTrial(i, lab, x, onset, sub.fs_hz, tuple(channels))
        for i, (lab, (x, onset)) in enumerate(zip(labels, snippets))
    ]


def trial_windows(trial: SessionTrial, prep: Preprocessing, epoch_len_s: float) -> np.ndarray:
    """Preprocess one streamed buffer exactly as offline and cut its decision windows."""
    rec = Recording(Montage(trial.channels), trial.fs_hz, trial.samples, ((trial.onset, trial.label),))
    rec = preprocess(rec, prep)
    onset = rec.markers[0][0]
    n = int(round(epoch_len_s * rec.fs_hz))
    if onset + n > rec.n_samples:
        raise DataError("streamed buffer ends before the imagery epoch does")
    epoch = rec.samples[:, onset:onset + n].astype(np.float64)
    return np.stack(sliding_windows(epoch, rec.fs_hz, prep.win_len_s, prep.overlap))


def run_online_session(
    decoder: Model | Callable[[np.ndarray], np.ndarray],
    stream: Iterable[SessionTrial],
    protocol: SessionProtocol = SessionProtocol(),
    prep: Preprocessing = Preprocessing(),
    seed: int = 0,
) -> tuple[RunReport, ArmTrace]:
    """Decode each cued trial (majority vote over its windows) and drive the arm."""
    if isinstance(decoder, Model):
        model = decoder
        predict = lambda w: predict_proba(model, w)  # noqa: E731
        n_inputs = model.arch.input_channels
    else:
        predict, n_inputs = decoder, None
    trace = ArmTrace()
    results = []
    it = iter(stream)
    for i in range(protocol.total_trials):
        try:
            trial = next(it)
        except StopIteration:
            raise DataError(f"stream exhausted after {i} of {protocol.total_trials} trials") from None
        if n_inputs is not None and len(trial.channels) != n_inputs:
            raise DataError(
                f"stream has {len(trial.channels)} channels, model expects {n_inputs}"
            )
        windows = trial_windows(trial, prep, prep.epoch_len_s)
        probs = predict(windows)
        decoded = ClassLabel(vote(probs))
        arm_execute(decoded, trace, trial.index)
        results.append(
            TrialResult(trial.index, trial.label.name, decoded.name,
                        [ClassLabel(int(k)).name for k in probs.argmax(axis=1)])
        )
    return RunReport(results, seed), trace


def binomial_interval(p: float, n: int, level: float = 0.95) -> tuple[float, float]:
    """Central interval of k/n for k ~ Binomial(n, p)."""
    tail = (1 - level) / 2
    lo = binom.ppf(tail, n, p)
    hi = binom.ppf(1 - tail, n, p)
    return float(lo) / n, float(hi) / n


def format_runs(column: str, reports: Sequence[RunReport], subject: str = "") -> str:
    """Per-run block: one 'RunN  x.xx (k/n)' line per run under a channel-set header."""
    lead = max(len(subject), len(f"Run{len(reports)}"))
    width = max(len(column), *(len(r.summary()) for r in reports))
    lines = [subject.ljust(lead) + "  " + column.rjust(width)]
    for i, r in enumerate(reports, 1):
        lines.append(f"Run{i}".ljust(lead) + "  " + r.summary().rjust(width))
    return "\n".join(lines) + "\n"
