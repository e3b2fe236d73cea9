"""Pipeline configuration: one JSON file of defaults, validated before any compute."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

from . import constants as K
from .cnn import Architecture, ModelError, TrainConfig
from .data import FULL_MONTAGE, DataError, Montage
from .dsp import Band
from .online import SessionProtocol
from .pipeline import Preprocessing
from .synthgen import SubjectSpec


class ConfigError(ValueError):
    pass


@dataclass
class SynthSection:
    n_subjects: int = K.N_SUBJECTS
    channels: list | None = None  # None: full 64-channel montage
    fs_hz: float = K.RECORDING_FS_HZ
    trials_per_class: int = K.TRIALS_PER_CLASS
    epoch_len_s: float = K.EPOCH_LEN_S
    rest_len_s: float = K.REST_LEN_S
    snr: float = 2.0
    background_uv: float = K.BACKGROUND_UV
    alpha_topography: dict = field(default_factory=lambda: dict(K.ALPHA_TOPOGRAPHY))
    delta_topography: dict = field(default_factory=lambda: dict(K.DELTA_TOPOGRAPHY))
    class_signatures: dict = field(
        default_factory=lambda: {k: list(v) for k, v in K.CLASS_SIGNATURES.items()}
    )

    def subject_spec(self) -> SubjectSpec:
        montage = FULL_MONTAGE if self.channels is None else Montage(tuple(self.channels))
        return SubjectSpec(
            montage=montage,
            fs_hz=self.fs_hz,
            trials_per_class=self.trials_per_class,
            epoch_len_s=self.epoch_len_s,
            rest_len_s=self.rest_len_s,
            snr=self.snr,
            alpha_topography=dict(self.alpha_topography),
            delta_topography=dict(self.delta_topography),
            class_signatures={k: tuple(v) for k, v in self.class_signatures.items()},
            background_uv=self.background_uv,
        )


@dataclass
class PreprocessSection:
    band: list = field(default_factory=lambda: list(K.BAND_HZ))
    decimation: int = K.DECIMATION
    filter_order: int = K.PIPELINE_FIR_ORDER
    epoch_len_s: float = K.EPOCH_LEN_S
    offset_s: float = 0.0
    win_len_s: float = K.WINDOW_S
    overlap: float = K.OVERLAP
    train_fraction: float = K.TRAIN_FRACTION

    def build(self) -> Preprocessing:
        return Preprocessing(tuple(self.band), self.decimation, self.filter_order, self.epoch_len_s,
                             self.offset_s, self.win_len_s, self.overlap, self.train_fraction)


@dataclass
class TrainSection:
    epochs: int = K.EPOCHS
    batch_size: int = K.BATCH_SIZE
    learning_rate: float = K.LEARNING_RATE
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    blocks: list = field(default_factory=lambda: [[25, 8, 4], [11, 16, 4], [7, 32, 2]])
    # channels and subject used by the `train` command
    channels: list = field(default_factory=lambda: ["AF3", "Oz"])
    subject: str | None = None

    def build(self, seed: int) -> TrainConfig:
        return TrainConfig(self.epochs, self.batch_size, self.learning_rate, self.beta1,
                           self.beta2, self.eps, seed, tuple(tuple(b) for b in self.blocks))


@dataclass
class ScanSection:
    channels: list = field(default_factory=lambda: list(K.SHORTLIST))
    repetitions: int = K.REPETITIONS
    pairs: list | None = None  # None: all pairs of the top-3 single channels


@dataclass
class StatsSection:
    alpha: float = K.ALPHA
    n_perm: int = K.N_PERM
    band: list = field(default_factory=lambda: list(K.BAND_HZ))
    epoch_len_s: float = K.STATS_EPOCH_LEN_S
    selection: str = "union"
    bonferroni: bool = False


@dataclass
class OnlineSection:
    trials_per_class: int = K.SESSION_TRIALS_PER_CLASS
    runs: int = K.SESSION_RUNS
    lead_s: float = 2.0
    tail_s: float = 1.0

    def build(self) -> SessionProtocol:
        return SessionProtocol(self.trials_per_class, self.runs, self.lead_s, self.tail_s)


@dataclass
class PipelineConfig:
    seed: int = 0
    synth: SynthSection = field(default_factory=SynthSection)
    preprocess: PreprocessSection = field(default_factory=PreprocessSection)
    train: TrainSection = field(default_factory=TrainSection)
    scan: ScanSection = field(default_factory=ScanSection)
    stats: StatsSection = field(default_factory=StatsSection)
    online: OnlineSection = field(default_factory=OnlineSection)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        return _build(cls, d, "config")

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from None
        cfg = cls.from_dict(raw)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        """Run every module precondition this config will reach; raise ConfigError."""
        try:
            if int(self.seed) != self.seed or self.seed < 0:
                raise ConfigError("seed must be a nonnegative integer")
            if self.synth.n_subjects < 1:
                raise ConfigError("synth.n_subjects must be >= 1")
            spec = self.synth.subject_spec()
            prep = self.preprocess.build()
            prep.validate(spec.fs_hz)
            if self.preprocess.epoch_len_s + self.preprocess.offset_s > spec.epoch_len_s + 1e-9:
                raise ConfigError("preprocess epoch (offset + length) exceeds the synthetic imagery epoch")
            cfg = self.train.build(self.seed)
            rate = spec.fs_hz / prep.decimation
            Architecture(1, int(round(prep.win_len_s * rate)), cfg.blocks)
            for ch in list(self.scan.channels) + list(self.train.channels):
                spec.montage.index(ch)
            if self.scan.repetitions < 1:
                raise ConfigError("scan.repetitions must be >= 1")
            if len(self.scan.channels) < 3 and self.scan.pairs is None:
                raise ConfigError("need >= 3 scan channels to derive default pairs")
            for pair in self.scan.pairs or []:
                if len(pair) != 2 or pair[0] == pair[1]:
                    raise ConfigError(f"invalid pair {pair}")
                spec.montage.indices(pair)
            st = self.stats
            if not 0 < st.alpha <= 1:
                raise ConfigError("stats.alpha must be in (0, 1]")
            if st.n_perm < 100:
                raise ConfigError("stats.n_perm must be >= 100")
            if st.selection not in ("union", "intersection"):
                raise ConfigError("stats.selection must be 'union' or 'intersection'")
            Band(*st.band).check(rate)
            if st.epoch_len_s > spec.rest_len_s or st.epoch_len_s * rate < 2 * rate:
                raise ConfigError("stats.epoch_len_s must be >= 2 s and fit in the rest segment")
            self.online.build()
        except ConfigError:
            raise
        except (DataError, ModelError, ValueError, TypeError) as e:
            raise ConfigError(str(e)) from None


def _build(cls, d, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name: f for f in fields(cls)}
    unknown = set(d) - set(known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name, value in d.items():
        default = known[name].default_factory() if callable(known[name].default_factory) else None
        if is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{where}.{name}")
        else:
            kwargs[name] = value
    return cls(**kwargs)
