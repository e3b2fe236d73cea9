"""Compact three-block 1-D convolutional decoder written directly in numpy.

Each block is a valid cross-correlation over time, bias, ReLU and
non-overlapping average pooling; the head is a global average over time, an
affine map to four logits and a softmax. Gradients are hand-derived
(mean cross-entropy), parameters are float64 and updated with Adam.

Internally activations are kept time-major (batch, time, features) so every
convolution is a single matmul over im2col patches.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import as_strided

from . import constants as K
from .data import N_CLASSES, WindowedDataset

DEFAULT_BLOCKS = ((25, 8, 4), (11, 16, 4), (7, 32, 2))
VAR_FLOOR = 1e-8
MODEL_FORMAT_VERSION = 1


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Block:
    kernel_len: int
    out_features: int
    pool_len: int


@dataclass(frozen=True)
class Architecture:
    input_channels: int
    input_samples: int
    blocks: tuple[Block, ...] = tuple(Block(*b) for b in DEFAULT_BLOCKS)
    n_classes: int = N_CLASSES

    def __post_init__(self):
        blocks = tuple(b if isinstance(b, Block) else Block(*b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if len(blocks) != 3:
            raise ModelError("exactly 3 convolution blocks required")
        if self.input_channels < 1:
            raise ModelError("need at least one input channel")
        for b in blocks:
            if b.kernel_len < 1 or b.kernel_len % 2 == 0:
                raise ModelError(f"kernel length {b.kernel_len} must be odd")
            if b.out_features < 1 or b.pool_len < 1:
                raise ModelError("features and pool length must be positive")
        self.lengths()

    def lengths(self) -> list[int]:
        """Pooled output length after each block."""
        n, out = self.input_samples, []
        for b in self.blocks:
            n = (n - b.kernel_len + 1) // b.pool_len
            if n < 1:
                raise ModelError(f"input of {self.input_samples} samples too short for blocks")
            out.append(n)
        return out


@dataclass(frozen=True)
class Model:
    arch: Architecture
    kernels: tuple[np.ndarray, ...]  # out x in x kernel_len
    biases: tuple[np.ndarray, ...]
    head_weight: np.ndarray  # classes x last_features
    head_bias: np.ndarray

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.kernels, self.biases):
            out += [w, b]
        return out + [self.head_weight, self.head_bias]

    @classmethod
    def from_params(cls, arch: Architecture, params: Sequence[np.ndarray]) -> "Model":
        params = list(params)
        return cls(arch, tuple(params[0:6:2]), tuple(params[1:6:2]), params[6], params[7])

    def shapes(self) -> list[tuple[int, ...]]:
        return [p.shape for p in self.params()]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = K.EPOCHS
    batch_size: int = K.BATCH_SIZE
    learning_rate: float = K.LEARNING_RATE
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    blocks: tuple = DEFAULT_BLOCKS

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or not self.learning_rate > 0:
            raise ModelError("epochs, batch_size and learning_rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1 and self.eps > 0):
            raise ModelError("invalid Adam constants")
        blocks = tuple(
            (b.kernel_len, b.out_features, b.pool_len) if isinstance(b, Block) else tuple(b)
            for b in self.blocks
        )
        object.__setattr__(self, "blocks", blocks)


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0

    @classmethod
    def zeros_like(cls, model: Model) -> "AdamState":
        return cls([np.zeros_like(p) for p in model.params()], [np.zeros_like(p) for p in model.params()])


@dataclass
class Metrics:
    window_accuracy: float
    trial_accuracy: float
    per_class_accuracy: list
    confusion: list  # window level, rows = true class
    trial_confusion: list
    n_windows: int
    n_trials: int
    loss_history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


# -- construction -------------------------------------------------------------


def init_model(arch: Architecture, seed: int) -> Model:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    rng = np.random.default_rng(seed)
    kernels, biases = [], []
    c_in = arch.input_channels
    for b in arch.blocks:
        bound = 1 / np.sqrt(c_in * b.kernel_len)
        kernels.append(rng.uniform(-bound, bound, (b.out_features, c_in, b.kernel_len)))
        biases.append(np.zeros(b.out_features))
        c_in = b.out_features
    bound = 1 / np.sqrt(c_in)
    head = rng.uniform(-bound, bound, (arch.n_classes, c_in))
    return Model(arch, tuple(kernels), tuple(biases), head, np.zeros(arch.n_classes))


# -- forward / backward -------------------------------------------------------


def _check_batch(model: Model, batch) -> np.ndarray:
    x = np.asarray(batch, dtype=np.float64)
    want = (model.arch.input_channels, model.arch.input_samples)
    if x.ndim != 3 or x.shape[1:] != want:
        raise ModelError(f"batch shape {x.shape} does not match (B, {want[0]}, {want[1]})")
    return x


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _patches(h: np.ndarray, k: int) -> np.ndarray:
    """im2col over time: (B, T, C) -> (B*L, K*C) with L = T-K+1, tap-major columns."""
    n_b, n_t, c = h.shape
    n_l = n_t - k + 1
    s0, s1, s2 = h.strides
    view = as_strided(h, (n_b, n_l, k, c), (s0, s1, s1, s2), writeable=False)
    return view.reshape(n_b * n_l, k * c)


def _forward(model: Model, x: np.ndarray):
    h = np.ascontiguousarray(x.transpose(0, 2, 1))  # B x T x C
    n_b = h.shape[0]
    cache = []
    for w, b, blk in zip(model.kernels, model.biases, model.arch.blocks):
        n_l = h.shape[1] - blk.kernel_len + 1
        cols = _patches(h, blk.kernel_len)
        # out x in x K  ->  (K*in) x out, matching tap-major patches
        w2 = w.transpose(2, 1, 0).reshape(-1, blk.out_features)
        z = cols @ w2
        z += b
        a = np.maximum(z, 0).reshape(n_b, n_l, blk.out_features)
        n_p = n_l // blk.pool_len
        h = a[:, : n_p * blk.pool_len].reshape(n_b, n_p, blk.pool_len, -1).sum(axis=2)
        h *= 1.0 / blk.pool_len
        cache.append((cols, z, w2, n_l, w.shape[1]))
    feats = h.sum(axis=1) * (1.0 / h.shape[1])
    logits = feats @ model.head_weight.T + model.head_bias
    return _softmax(logits), feats, h.shape[1], cache


def forward(model: Model, batch) -> np.ndarray:
    """Class probabilities, B x 4."""
    return _forward(model, _check_batch(model, batch))[0]


def loss_and_grad(model: Model, batch, labels) -> tuple[float, list[np.ndarray]]:
    """Mean cross-entropy and its gradient, aligned with ``model.params()``."""
    x = _check_batch(model, batch)
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != (x.shape[0],):
        raise ModelError("one label per batch row required")
    if y.size and (y.min() < 0 or y.max() >= model.arch.n_classes):
        raise ModelError("labels must be in 0..3")
    probs, feats, n_last, cache = _forward(model, x)
    n_b = x.shape[0]
    rows = np.arange(n_b)
    loss = float(-np.mean(np.log(np.maximum(probs[rows, y], np.finfo(float).tiny))))

    dlogits = probs.copy()
    dlogits[rows, y] -= 1
    dlogits *= 1.0 / n_b
    dlogits = dlogits.astype(feats.dtype, copy=False)
    g_head_w = dlogits.T @ feats
    g_head_b = dlogits.sum(axis=0)
    # gradient w.r.t. the last pooled map, B x L x F
    dh = np.broadcast_to(((dlogits @ model.head_weight) * (1.0 / n_last))[:, None, :],
                         (n_b, n_last, model.head_weight.shape[1]))

    grads = []
    for i in reversed(range(3)):
        w, blk = model.kernels[i], model.arch.blocks[i]
        cols, z, w2, n_l, c_in = cache[i]
        k, f, pool = blk.kernel_len, blk.out_features, blk.pool_len
        n_p = dh.shape[1]
        if n_p * pool == n_l:
            dz = np.repeat(dh, pool, axis=1)
        else:
            dz = np.zeros((n_b, n_l, f), dtype=z.dtype)
            dz[:, : n_p * pool] = np.repeat(dh, pool, axis=1)
        dz = dz.reshape(-1, f)
        dz *= (1.0 / pool) * (z > 0)
        grads.append(dz.sum(axis=0))
        grads.append((cols.T @ dz).reshape(k, c_in, f).transpose(2, 1, 0))
        if i > 0:
            # full correlation with the time-flipped kernel gives dL/d(input)
            padded = np.zeros((n_b, n_l + 2 * (k - 1), f), dtype=z.dtype)
            padded[:, k - 1 : k - 1 + n_l] = dz.reshape(n_b, n_l, f)
            wf = w[:, :, ::-1].transpose(2, 0, 1).reshape(k * f, c_in)
            dh = (_patches(padded, k) @ wf).reshape(n_b, n_l + k - 1, c_in)
    grads.reverse()  # appended as b3 w3 b2 w2 b1 w1
    return loss, grads + [g_head_w, g_head_b]


def adam_step(model: Model, grads, state: AdamState, config: TrainConfig) -> tuple[Model, AdamState]:
    """One bias-corrected Adam update; inputs are left untouched."""
    t = state.step + 1
    b1, b2 = config.beta1, config.beta2
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(model.params(), grads, state.m, state.v):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        new_params.append(p - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps))
        new_m.append(m)
        new_v.append(v)
    return Model.from_params(model.arch, new_params), AdamState(new_m, new_v, t)


# -- data handling ------------------------------------------------------------


def standardize(windows) -> np.ndarray:
    """Per-window, per-channel zero mean and unit variance."""
    x = np.asarray(windows, dtype=np.float64)
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(np.maximum(var, VAR_FLOOR))


def predict_proba(model: Model, windows, chunk: int = 512) -> np.ndarray:
    """Probabilities for raw (unstandardized) windows."""
    x = standardize(windows)
    if len(x) == 0:
        return np.zeros((0, model.arch.n_classes))
    return np.concatenate([forward(model, x[i:i + chunk]) for i in range(0, len(x), chunk)])


def architecture_for(windows: WindowedDataset, config: TrainConfig) -> Architecture:
    _, c, t = windows.windows.shape
    return Architecture(c, t, config.blocks)


def train(train_windows: WindowedDataset, config: TrainConfig) -> tuple[Model, list[float]]:
    """Mini-batch Adam on standardized windows; returns the final-epoch model.

    Windows are reshuffled every epoch; the last short batch is kept.
    """
    if len(train_windows) == 0:
        raise ModelError("empty training set")
    init_seq, shuffle_seq = np.random.SeedSequence(config.seed).spawn(2)
    model = init_model(architecture_for(train_windows, config), init_seq)
    rng = np.random.default_rng(shuffle_seq)
    x = standardize(train_windows.windows)
    y = train_windows.labels
    state = AdamState.zeros_like(model)
    history = []
    n = len(y)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = loss_and_grad(model, x[idx], y[idx])
            model, state = adam_step(model, grads, state, config)
            total += loss * len(idx)
        history.append(total / n)
    return model, history


def vote(probs: np.ndarray) -> int:
    """Majority vote over window argmaxes; ties go to the highest mean probability."""
    votes = np.bincount(probs.argmax(axis=1), minlength=probs.shape[1])
    tied = np.flatnonzero(votes == votes.max())
    if len(tied) == 1:
        return int(tied[0])
    return int(tied[np.argmax(probs[:, tied].mean(axis=0))])


def metrics_from_probs(probs: np.ndarray, labels, trial_ids, n_classes: int = N_CLASSES) -> Metrics:
    labels = np.asarray(labels)
    trial_ids = np.asarray(trial_ids)
    if len(labels) == 0:
        raise ModelError("empty test set")
    pred = probs.argmax(axis=1)
    conf = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(conf, (labels, pred), 1)
    per_class = [
        float(conf[k, k] / conf[k].sum()) if conf[k].sum() else None for k in range(n_classes)
    ]
    tconf = np.zeros((n_classes, n_classes), dtype=int)
    for tid in np.unique(trial_ids):
        sel = trial_ids == tid
        tconf[labels[sel][0], vote(probs[sel])] += 1
    n_trials = int(tconf.sum())
    return Metrics(
        window_accuracy=float(np.trace(conf) / len(labels)),
        trial_accuracy=float(np.trace(tconf) / n_trials),
        per_class_accuracy=per_class,
        confusion=conf.tolist(),
        trial_confusion=tconf.tolist(),
        n_windows=int(len(labels)),
        n_trials=n_trials,
    )


def evaluate(model: Model | Callable, test_windows: WindowedDataset) -> Metrics:
    """Window- and trial-level accuracy; ``model`` may also be a probability callable."""
    if len(test_windows) == 0:
        raise ModelError("empty test set")
    predict = model if callable(model) else (lambda w: predict_proba(model, w))
    probs = predict(test_windows.windows)
    return metrics_from_probs(probs, test_windows.labels, test_windows.trial_ids)


# -- serialization ------------------------------------------------------------


def save_model(model: Model, path, channels: Sequence[str] | None = None) -> Path:
    """``model.json`` (architecture, shapes, optional channel names) + ``params.f64le``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {
        "format_version": MODEL_FORMAT_VERSION,
        "input_channels": model.arch.input_channels,
        "input_samples": model.arch.input_samples,
        "blocks": [[b.kernel_len, b.out_features, b.pool_len] for b in model.arch.blocks],
        "n_classes": model.arch.n_classes,
        "shapes": [list(s) for s in model.shapes()],
        "byte_order": "little",
        "dtype": "float64",
    }
    if channels is not None:
        if len(channels) != model.arch.input_channels:
            raise ModelError("channel names do not match the model input")
        meta["channels"] = list(channels)
    blob = b"".join(np.ascontiguousarray(p, dtype="<f8").tobytes() for p in model.params())
    (path / "params.f64le").write_bytes(blob)
    (path / "model.json").write_text(json.dumps(meta, indent=1) + "\n")
    return path


def model_channels(path) -> list[str] | None:
    """Channel names stored with a saved model, if any."""
    return json.loads((Path(path) / "model.json").read_text()).get("channels")


def load_model(path) -> Model:
    path = Path(path)
    if not (path / "model.json").exists():
        raise FileNotFoundError(f"no model.json in {path}")
    meta = json.loads((path / "model.json").read_text())
    if meta.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelError(f"unknown model format {meta.get('format_version')!r}")
    arch = Architecture(
        meta["input_channels"], meta["input_samples"],
        tuple(Block(*b) for b in meta["blocks"]), meta["n_classes"],
    )
    flat = np.frombuffer((path / "params.f64le").read_bytes(), dtype="<f8")
    shapes = [tuple(s) for s in meta["shapes"]]
    if flat.size != sum(int(np.prod(s)) for s in shapes):
        raise ModelError("parameter payload size does not match metadata")
    params, pos = [], 0
    for s in shapes:
        n = int(np.prod(s))
        params.append(flat[pos:pos + n].reshape(s).astype(np.float64))
        pos += n
    model = Model.from_params(arch, params)
    if model.shapes() != [p.shape for p in init_model(arch, 0).params()]:
        raise ModelError("parameter shapes inconsistent with architecture")
    return model
