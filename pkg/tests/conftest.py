import numpy as np
import pytest

from vibci.data import ClassLabel, Montage, Recording
from vibci.pipeline import Preprocessing, imagery_epochs, preprocess
from vibci.synthgen import SubjectSpec, generate_subject

SMALL_CHANNELS = ("Fp1", "AF3", "AFz", "Cz", "POz", "O1", "Oz")


@pytest.fixture(scope="session")
def small_spec():
    return SubjectSpec(montage=Montage(SMALL_CHANNELS), trials_per_class=10)


@pytest.fixture(scope="session")
def small_recording(small_spec):
    return generate_subject(small_spec, 11)


@pytest.fixture(scope="session")
def small_preprocessed(small_recording):
    return preprocess(small_recording, Preprocessing())


@pytest.fixture(scope="session")
def small_epochs(small_preprocessed):
    return imagery_epochs(small_preprocessed, Preprocessing())


def make_recording(n_channels=2, n_samples=400, fs=100.0, markers=(), seed=0):
    rng = np.random.default_rng(seed)
    names = tuple(f"Ch{i}" for i in range(n_channels))
    x = rng.standard_normal((n_channels, n_samples)).astype(np.float32)
    return Recording(Montage(names), fs, x, tuple((o, ClassLabel(l)) for o, l in markers))


def gradient_check(seed=0, channels=2, samples=32, batch=5, step=1e-5):
    """Worst relative error of analytic vs central-difference gradients on a tiny model."""
    from vibci.cnn import Architecture, Block, init_model, loss_and_grad, Model

    arch = Architecture(channels, samples, (Block(5, 3, 2), Block(3, 4, 2), Block(3, 5, 2)))
    rng = np.random.default_rng(seed)
    model = init_model(arch, seed)
    # nonzero biases so every code path carries gradient
    params = [p + 0.1 * rng.standard_normal(p.shape) for p in model.params()]
    model = Model.from_params(arch, params)
    x = rng.standard_normal((batch, channels, samples))
    y = rng.integers(0, 4, batch)
    _, grads = loss_and_grad(model, x, y)
    worst = 0.0
    for i, p in enumerate(params):
        for j in range(p.size):
            bumped = []
            for sign in (1, -1):
                q = [a.copy() for a in params]
                q[i].flat[j] += sign * step
                bumped.append(loss_and_grad(Model.from_params(arch, q), x, y)[0])
            numeric = (bumped[0] - bumped[1]) / (2 * step)
            analytic = grads[i].flat[j]
            denom = max(abs(numeric), abs(analytic), 1e-6)
            worst = max(worst, abs(numeric - analytic) / denom)
    return worst
