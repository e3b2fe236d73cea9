import dataclasses

import numpy as np
import pytest

from vibci.cnn import TrainConfig
from vibci.data import ClassLabel, DataError, Montage, epoch
from vibci.dsp import Band, periodogram
from vibci.pipeline import Preprocessing, imagery_epochs, preprocess, train_cell
from vibci.stats import epoch_powers
from vibci.synthgen import (
    ClassSignature,
    SubjectSpec,
    burst_envelope,
    generate_subject,
    generate_trials,
    pink_background,
)

ALPHA = Band(8.0, 13.0)
SPEC = SubjectSpec(montage=Montage(("Cz", "AF3", "Oz")), trials_per_class=25)


def alpha_powers(rec, label_set):
    return epoch_powers(epoch(rec, 2.0, 0.0, label_set), ALPHA)


def test_same_seed_is_bit_identical():
    a = generate_subject(SPEC.replace(trials_per_class=3), 5)
    b = generate_subject(SPEC.replace(trials_per_class=3), 5)
    assert a == b
    assert a != generate_subject(SPEC.replace(trials_per_class=3), 6)


def test_marker_layout():
    rec = generate_subject(SPEC.replace(trials_per_class=1), 0)
    labels = [lab for _, lab in rec.markers]
    assert labels[0::2] == [ClassLabel.Rest] * 4
    assert sorted(labels[1::2]) == [ClassLabel(k) for k in range(4)]
    onsets = [o for o, _ in rec.markers]
    assert onsets[0] == 1000 and np.diff(onsets).tolist() == [2000, 4000] * 3 + [2000]
    assert rec.n_samples == 1000 + 4 * 6000 + 1000


def test_default_subject_has_200_imagery_markers():
    spec = SubjectSpec(montage=Montage(("Oz",)))
    rec = generate_subject(spec, 0)
    imag = [lab for _, lab in rec.markers if lab.is_imagery]
    assert len(imag) == 200
    assert all(imag.count(ClassLabel(k)) == 50 for k in range(4))


def test_zero_snr_adds_nothing():
    rec = generate_subject(SPEC.replace(snr=0.0), 3)
    imag = alpha_powers(rec, [ClassLabel(k) for k in range(4)])[2]
    rest = alpha_powers(rec, [ClassLabel.Rest])[2]
    assert len(imag) == len(rest) == 100
    ratio = imag.mean() / rest.mean()
    assert 0.8 < ratio < 1.25


def test_alpha_ratio_at_oz_and_topographic_contrast():
    rec = generate_subject(SPEC.replace(trials_per_class=13), 4)  # 52 imagery trials
    imag = alpha_powers(rec, [ClassLabel(k) for k in range(4)])
    rest = alpha_powers(rec, [ClassLabel.Rest])
    ratio = imag.mean(axis=1) / rest.mean(axis=1)
    cz, oz = ratio[0], ratio[2]
    assert oz >= 2.0
    assert oz > cz
    assert 0.8 < cz < 1.25  # Cz carries no imagery weight


def test_background_spectrum_is_roughly_one_over_f():
    rng = np.random.default_rng(0)
    x = pink_background(1, 200_000, 1000.0, rng)[0].astype(float)
    assert np.sqrt(np.mean(x**2)) == pytest.approx(1.0, rel=1e-6)
    freqs, spec = periodogram(x, 1000.0)
    sel = (freqs >= 1) & (freqs <= 100)
    slope = np.polyfit(np.log(freqs[sel]), np.log(spec[sel]), 1)[0]
    assert -1.4 < slope < -0.6


def test_burst_envelope_is_tapered():
    env = burst_envelope(1000)
    assert env[0] == 0.0 and env[500] == 1.0 and env.max() == 1.0
    np.testing.assert_allclose(env, env[::-1], atol=1e-12)


def test_spec_validation():
    with pytest.raises(DataError):
        ClassSignature(14.0, 2.0)
    with pytest.raises(DataError):
        ClassSignature(10.0, 5.0)
    with pytest.raises(DataError):
        SubjectSpec(snr=-1)
    with pytest.raises(DataError):
        SubjectSpec(alpha_topography={"Oz": 1.5})
    with pytest.raises(DataError):
        SubjectSpec(class_signatures={"PourWater": (10, 1)})


def test_class_signatures_are_distinct():
    sigs = SubjectSpec().class_signatures
    pairs = {(s.alpha_hz, s.delta_hz) for s in sigs.values()}
    assert len(pairs) == 4
    assert all(8 <= s.alpha_hz <= 13 and 0.5 <= s.delta_hz <= 4 for s in sigs.values())


def test_generate_trials_layout_and_determinism():
    labels = [ClassLabel.EatFood, ClassLabel.PourWater]
    a = generate_trials(SPEC, labels, 9, 2.0, 1.0)
    b = generate_trials(SPEC, labels, 9, 2.0, 1.0)
    assert len(a) == 2
    for (xa, oa), (xb, ob) in zip(a, b):
        assert xa.shape == (3, 7000) and oa == 2000
        assert np.array_equal(xa, xb) and oa == ob


def test_decoding_improves_with_snr():
    prep = Preprocessing()
    cfg = TrainConfig(epochs=60)
    accs = {}
    for snr in (0.0, 2.0):
        spec = SubjectSpec(montage=Montage(("Oz",)), trials_per_class=15, snr=snr)
        ds = imagery_epochs(preprocess(generate_subject(spec, 21), prep), prep)
        accs[snr] = train_cell(ds, ["Oz"], prep, cfg, seed=0)[1].trial_accuracy
    assert accs[2.0] >= accs[0.0]
    assert accs[2.0] >= 0.75


def test_spec_replace_keeps_validation():
    with pytest.raises(DataError):
        SPEC.replace(trials_per_class=0)
    assert dataclasses.replace(SPEC, snr=1.0).snr == 1.0
