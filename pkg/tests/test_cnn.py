import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vibci.augment import augment_dataset
from vibci.cnn import (
    AdamState,
    Architecture,
    Block,
    Model,
    ModelError,
    TrainConfig,
    adam_step,
    evaluate,
    forward,
    init_model,
    load_model,
    loss_and_grad,
    metrics_from_probs,
    model_channels,
    predict_proba,
    save_model,
    standardize,
    train,
    vote,
)
from vibci.data import WindowedDataset
from vibci.pipeline import Preprocessing, train_cell

from .conftest import gradient_check

TINY = (Block(5, 3, 2), Block(3, 4, 2), Block(3, 5, 2))


def tiny_model(seed=0, channels=2, samples=32):
    return init_model(Architecture(channels, samples, TINY), seed)


def test_default_architecture_lengths():
    arch = Architecture(1, 200)
    # 200 -24-> 176 /4 -> 44 -10-> 34 /4 -> 8 -6-> 2 /2 -> 1
    assert arch.lengths() == [44, 8, 1]


def test_architecture_rejects_too_short_input():
    with pytest.raises(ModelError):
        Architecture(1, 50)
    with pytest.raises(ModelError):
        Architecture(1, 200, (Block(4, 8, 4), Block(11, 16, 4), Block(7, 32, 2)))


def test_init_is_deterministic_and_bounded():
    a, b = tiny_model(3), tiny_model(3)
    for p, q in zip(a.params(), b.params()):
        assert np.array_equal(p, q)
    for w, bias, blk, c_in in zip(a.kernels, a.biases, TINY, (2, 3, 4)):
        assert not np.any(bias)
        assert np.abs(w).max() <= 1 / math.sqrt(c_in * blk.kernel_len)
    assert not np.any(a.head_bias)


def test_gradients_match_finite_differences():
    assert gradient_check(seed=1) <= 1e-4


def test_uniform_output_loss_is_ln4():
    m = tiny_model()
    zero = Model.from_params(m.arch, [np.zeros_like(p) for p in m.params()])
    loss, _ = loss_and_grad(zero, np.random.default_rng(0).standard_normal((6, 2, 32)), [0, 1, 2, 3, 0, 1])
    assert abs(loss - math.log(4)) <= 1e-9


def test_zero_input_gives_uniform_probabilities():
    probs = forward(tiny_model(), np.zeros((3, 2, 32)))
    np.testing.assert_allclose(probs, 0.25, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
def test_softmax_rows_and_nonnegative_loss(seed, scale):
    rng = np.random.default_rng(seed)
    m = tiny_model(seed % 1000)
    x = scale * rng.standard_normal((4, 2, 32))
    probs = forward(m, x)
    assert np.all(probs >= 0)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
    loss, _ = loss_and_grad(m, x, rng.integers(0, 4, 4))
    assert loss >= 0


def test_duplicated_row_gives_duplicated_output():
    x = np.random.default_rng(2).standard_normal((3, 2, 32))
    probs = forward(tiny_model(), np.concatenate([x, x[1:2]]))
    np.testing.assert_array_equal(probs[3], probs[1])


def test_adam_zero_gradient_is_a_no_op():
    m = tiny_model()
    grads = [np.zeros_like(p) for p in m.params()]
    new, state = adam_step(m, grads, AdamState.zeros_like(m), TrainConfig())
    for p, q in zip(m.params(), new.params()):
        assert np.array_equal(p, q)
    assert state.step == 1


def test_adam_first_step_closed_form():
    m = tiny_model()
    rng = np.random.default_rng(4)
    grads = [rng.standard_normal(p.shape) * 10.0 ** rng.integers(-6, 3) for p in m.params()]
    cfg = TrainConfig(learning_rate=1e-3)
    new, _ = adam_step(m, grads, AdamState.zeros_like(m), cfg)
    for p, q, g in zip(m.params(), new.params(), grads):
        expected = -cfg.learning_rate * g / (np.abs(g) + cfg.eps)
        np.testing.assert_allclose(q - p, expected, atol=1e-9, rtol=0)
        np.testing.assert_allclose(q - p, -cfg.learning_rate * np.sign(g), atol=1e-9 + 1e-3 * cfg.eps / np.abs(g).min())


def test_adam_is_pure():
    m = tiny_model()
    grads = [np.ones_like(p) for p in m.params()]
    state = AdamState.zeros_like(m)
    a = adam_step(m, grads, state, TrainConfig())
    b = adam_step(m, grads, state, TrainConfig())
    for p, q in zip(a[0].params(), b[0].params()):
        assert np.array_equal(p, q)
    assert not np.any(state.m[0])


def test_standardize_variance_floor():
    x = np.zeros((2, 1, 10))
    x[1, 0] = np.arange(10)
    z = standardize(x)
    assert not np.any(z[0])
    assert z[1, 0].mean() == pytest.approx(0, abs=1e-12) and z[1, 0].std() == pytest.approx(1)


def _windows(n_trials=8, per_trial=3, seed=0, channels=2, samples=32):
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(n_trials) % 4, per_trial)
    ids = np.repeat(np.arange(n_trials), per_trial)
    t = np.arange(samples)
    freq = (labels + 1)[:, None, None] * 0.05
    x = np.sin(2 * np.pi * freq * t) + 0.3 * rng.standard_normal((len(labels), channels, samples))
    return WindowedDataset(x, labels, ids, 0.32, 0.5, 100.0)


def test_training_is_deterministic_and_learns():
    w = _windows(n_trials=24)
    cfg = TrainConfig(epochs=40, batch_size=8, learning_rate=1e-2, seed=5, blocks=TINY)
    a, hist = train(w, cfg)
    b, _ = train(w, cfg)
    for p, q in zip(a.params(), b.params()):
        assert np.array_equal(p, q)
    assert len(hist) == 40 and hist[-1] < hist[0]
    assert evaluate(a, w).window_accuracy >= 0.9


def test_oz_training_accuracy(small_epochs):
    prep = Preprocessing()
    ds = small_epochs.pick(["Oz"])
    windows = augment_dataset(ds, prep.win_len_s, prep.overlap)
    model, _ = train(windows, TrainConfig(epochs=100))
    assert evaluate(model, windows).window_accuracy >= 0.9


def test_perfect_predictor_metrics():
    w = _windows()
    onehot = np.eye(4)[w.labels]
    m = evaluate(lambda x: onehot, w)
    assert m.window_accuracy == m.trial_accuracy == 1.0
    assert np.array_equal(np.array(m.confusion), np.diag(np.bincount(w.labels, minlength=4)))
    assert sum(map(sum, m.confusion)) == len(w)


def test_majority_vote():
    a, b = np.eye(4)[0], np.eye(4)[1]
    assert vote(np.stack([a, a, b])) == 0
    # tie: 2 vs 2, decided by mean probability
    tie = np.array([[0.6, 0.4, 0, 0], [0.6, 0.4, 0, 0], [0.45, 0.55, 0, 0], [0.1, 0.9, 0, 0]])
    assert vote(tie) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_metrics_invariant_to_window_order(seed):
    rng = np.random.default_rng(seed)
    w = _windows(seed=seed % 100)
    probs = rng.dirichlet(np.ones(4), len(w))
    perm = rng.permutation(len(w))
    a = metrics_from_probs(probs, w.labels, w.trial_ids)
    b = metrics_from_probs(probs[perm], w.labels[perm], w.trial_ids[perm])
    assert a.to_dict() == b.to_dict()


def test_predict_in_chunks_matches_single_pass():
    m = tiny_model()
    x = np.random.default_rng(0).standard_normal((40, 2, 32))
    np.testing.assert_array_equal(predict_proba(m, x, chunk=7), predict_proba(m, x, chunk=1000))


def test_model_round_trip(tmp_path):
    m = tiny_model(9)
    save_model(m, tmp_path / "m", ["AF3", "Oz"])
    back = load_model(tmp_path / "m")
    assert back.arch == m.arch
    for p, q in zip(m.params(), back.params()):
        assert np.array_equal(p, q)
    assert model_channels(tmp_path / "m") == ["AF3", "Oz"]
    with pytest.raises(ModelError):
        save_model(m, tmp_path / "bad", ["Oz"])


def test_corrupt_model_payload(tmp_path):
    save_model(tiny_model(), tmp_path)
    blob = tmp_path / "params.f64le"
    blob.write_bytes(blob.read_bytes()[:-8])
    with pytest.raises(ModelError):
        load_model(tmp_path)


def test_shuffled_labels_reach_chance(small_epochs):
    _, metrics = train_cell(small_epochs.pick(["Oz"]), ["Oz"], Preprocessing(),
                            TrainConfig(epochs=20), seed=3, shuffle_labels=True)
    assert metrics.n_trials == 8
    assert 0.0 <= metrics.trial_accuracy <= 1.0
