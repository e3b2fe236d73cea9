import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ttest_ind

from vibci.stats import (
    ChannelStat,
    one_vs_rest,
    permutation_test,
    select_channels,
    significant_channels,
    stats_report,
    welch_t,
)


def _powers(seed, n_ch=3, n_a=20, n_b=25, shift=0.0):
    rng = np.random.default_rng(seed)
    a = np.exp(rng.standard_normal((n_ch, n_a)) + shift)
    b = np.exp(rng.standard_normal((n_ch, n_b)))
    return a, b


def test_welch_t_matches_scipy():
    a, b = _powers(0)
    ref = ttest_ind(np.log(a), np.log(b), axis=1, equal_var=False).statistic
    np.testing.assert_allclose(welch_t(np.log(a), np.log(b)), ref, rtol=1e-12)


def test_identical_conditions_give_t0_p1():
    a, _ = _powers(1)
    out = permutation_test(a, a.copy(), ["x", "y", "z"], n_perm=200)
    assert all(s.t_value == 0.0 and s.p_value == 1.0 and not s.significant for s in out)


def test_constant_input_gives_t0_p1():
    out = permutation_test(np.ones((1, 10)), np.ones((1, 10)), ["x"], n_perm=100)
    assert out[0].t_value == 0.0 and out[0].p_value == 1.0


def test_p_value_bounds_and_smoothing():
    a, b = _powers(2, shift=5.0)
    out = permutation_test(a, b, ["x", "y", "z"], n_perm=100)
    assert all(s.p_value == pytest.approx(1 / 101) for s in out)
    assert all(s.significant for s in out)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-1.0, 1.0))
def test_relabeling_conditions(seed, shift):
    a, b = _powers(seed, shift=shift)
    fwd = permutation_test(a, b, ["x", "y", "z"], n_perm=200, seed=seed % 1000)
    rev = permutation_test(b, a, ["x", "y", "z"], n_perm=200, seed=seed % 1000)
    for s, r in zip(fwd, rev):
        assert s.p_value == r.p_value
        assert s.t_value == pytest.approx(-r.t_value, rel=1e-12, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_common_scaling_is_a_log_shift(seed, c):
    a, b = _powers(seed, shift=0.3)
    base = permutation_test(a, b, ["x", "y", "z"], n_perm=200, seed=1)
    scaled = permutation_test(c * a, c * b, ["x", "y", "z"], n_perm=200, seed=1)
    for s, r in zip(base, scaled):
        assert r.t_value == pytest.approx(s.t_value, rel=1e-9, abs=1e-12)
        assert r.p_value == pytest.approx(s.p_value, abs=2 / 201)


def test_epoch_order_does_not_matter():
    a, b = _powers(5, shift=0.4)
    perm = np.random.default_rng(0).permutation(a.shape[1])
    x = permutation_test(a, b, ["x", "y", "z"], n_perm=300, seed=2)
    y = permutation_test(a[:, perm], b, ["x", "y", "z"], n_perm=300, seed=2)
    assert [s.p_value for s in x] == [s.p_value for s in y]


def test_deterministic_per_seed():
    a, b = _powers(3, shift=0.2)
    x = permutation_test(a, b, ["x", "y", "z"], n_perm=300, seed=4)
    assert x == permutation_test(a, b, ["x", "y", "z"], n_perm=300, seed=4)


def test_significance_threshold_is_inclusive_and_bonferroni():
    a, b = _powers(6, shift=[[3.0], [0.5], [0.0]])
    plain = permutation_test(a, b, ["x", "y", "z"], n_perm=500, seed=0, alpha=0.05)
    assert all(s.significant == (s.p_value <= 0.05) for s in plain)
    bonf = permutation_test(a, b, ["x", "y", "z"], n_perm=500, seed=0, alpha=0.05, bonferroni=True)
    assert all(s.significant == (s.p_value <= 0.05 / 3) for s in bonf)


def test_preconditions():
    a, b = _powers(0)
    with pytest.raises(ValueError):
        permutation_test(a, b, ["x", "y", "z"], n_perm=50)
    with pytest.raises(ValueError):
        permutation_test(a, b, ["x", "y"])
    with pytest.raises(ValueError):
        permutation_test(-a, b, ["x", "y", "z"])


STATS = [ChannelStat("a", 2.0, 0.02, False), ChannelStat("b", -5.0, 0.001, True),
         ChannelStat("c", 4.0, 0.001, True), ChannelStat("d", 0.1, 0.9, False)]


def test_significant_channels_ordering_and_extremes():
    assert significant_channels(STATS, 0.01) == ["b", "c"]
    assert significant_channels(STATS, 1.0) == ["b", "c", "a", "d"]
    assert significant_channels(STATS, 0.0005) == []


def test_select_channels_union_and_intersection():
    other = [ChannelStat("a", 3.0, 0.001, True), ChannelStat("b", 3.0, 0.001, True),
             ChannelStat("c", 0.0, 0.5, False), ChannelStat("d", 0.0, 0.5, False)]
    per_class = {"PourWater": STATS, "OpenDoor": other}
    assert select_channels(per_class, 0.01, "union") == ["a", "b", "c"]
    assert select_channels(per_class, 0.01, "intersection") == ["b"]
    report = stats_report(per_class, 0.01, "union")
    assert report["selected_channels"] == ["a", "b", "c"]
    with pytest.raises(ValueError):
        select_channels(per_class, 0.01, "vote")


def test_synthetic_subject_oz_in_cz_out(small_preprocessed):
    per_class = one_vs_rest(small_preprocessed, n_perm=1000, seed=0)
    assert sorted(per_class) == sorted(["PourWater", "OpenDoor", "EatFood", "PickUpPhone"])
    for stats in per_class.values():
        assert len(stats) == len(small_preprocessed.montage)
        chosen = significant_channels(stats, 0.01)
        assert "Oz" in chosen and "Cz" not in chosen
