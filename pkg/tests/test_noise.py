import numpy as np
import pytest

from labelcal.errors import DimensionMismatch, LabelOutOfRange, LengthMismatch
from labelcal.noise import (
    NoiseSpec,
    empirical_transition_matrix,
    inject_asymmetric,
    inject_instance_dependent,
    inject_symmetric,
    noise_ratio,
)


def test_symmetric_r0_identity():
    labels = np.arange(100) % 5
    out = inject_symmetric(labels, NoiseSpec("symmetric", 0.0, 1), 5)
    assert np.array_equal(out, labels)


def test_symmetric_offdiagonal_law():
    # each off-diagonal row entry of the C=9 transition matrix approaches
    # 0.5 / 8 = 0.0625
    c, n, r = 9, 10_000, 0.5
    labels = np.repeat(np.arange(c), n // c + 1)[:n]
    noisy = inject_symmetric(labels, NoiseSpec("symmetric", r, 2), c)
    tm = empirical_transition_matrix(labels, noisy, c).normalized
    off = tm[~np.eye(c, dtype=bool)]
    assert np.max(np.abs(off - r / (c - 1))) < 0.02


def test_symmetric_transition_law():
    c, n, r = 4, 10_000, 0.5
    labels = np.repeat(np.arange(c), n // c)
    noisy = inject_symmetric(labels, NoiseSpec("symmetric", r, 2), c)
    tm = empirical_transition_matrix(labels, noisy, c).normalized
    target = np.full((c, c), r / (c - 1))
    np.fill_diagonal(target, 1 - r)
    assert np.max(np.abs(tm - target)) < 0.02


def test_asymmetric_forced_cycle():
    out = inject_asymmetric([0, 1, 2], NoiseSpec("asymmetric", 1.0, 0), 3)
    assert out.tolist() == [1, 2, 0]


def test_asymmetric_r0_identity():
    labels = np.arange(50) % 4
    out = inject_asymmetric(labels, NoiseSpec("asymmetric", 0.0, 0), 4)
    assert np.array_equal(out, labels)


def test_asymmetric_transition_law():
    c, n, r = 6, 10_000, 0.5
    labels = np.repeat(np.arange(c), n // c + 1)[:n]
    noisy = inject_asymmetric(labels, NoiseSpec("asymmetric", r, 2), c)
    tm = empirical_transition_matrix(labels, noisy, c).normalized
    target = np.zeros((c, c))
    for a in range(c):
        target[a, a] = 1 - r
        target[a, (a + 1) % c] = r
    assert np.max(np.abs(tm - target)) < 0.02


def test_idn_r0_identity():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(100, 8))
    labels = rng.integers(0, 4, 100)
    out = inject_instance_dependent(x, labels, NoiseSpec("instance_dependent", 0.0, 0), 4)
    assert np.array_equal(out, labels)


def test_idn_realized_ratio():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(10_000, 16))
    labels = rng.integers(0, 5, 10_000)
    noisy = inject_instance_dependent(
        x, labels, NoiseSpec("instance_dependent", 0.5, 11), 5
    )
    assert abs(noise_ratio(labels, noisy) - 0.5) < 0.03


def test_idn_seed_sensitivity():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(2000, 8))
    labels = rng.integers(0, 4, 2000)
    n1 = inject_instance_dependent(x, labels, NoiseSpec("instance_dependent", 0.4, 1), 4)
    n2 = inject_instance_dependent(x, labels, NoiseSpec("instance_dependent", 0.4, 2), 4)
    t1 = empirical_transition_matrix(labels, n1, 4).normalized
    t2 = empirical_transition_matrix(labels, n2, 4).normalized
    assert np.linalg.norm(t1 - t2) > 0


def test_idn_length_mismatch():
    with pytest.raises(DimensionMismatch):
        inject_instance_dependent(
            np.zeros((5, 2)), np.zeros(4, dtype=int),
            NoiseSpec("instance_dependent", 0.3, 0), 3,
        )


def test_injectors_deterministic_and_in_range():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(500, 6))
    labels = rng.integers(0, 7, 500)
    for kind, fn in [
        ("symmetric", lambda s: inject_symmetric(labels, s, 7)),
        ("asymmetric", lambda s: inject_asymmetric(labels, s, 7)),
        ("instance_dependent",
         lambda s: inject_instance_dependent(x, labels, s, 7)),
    ]:
        spec = NoiseSpec(kind, 0.4, 99)
        a, b = fn(spec), fn(spec)
        assert np.array_equal(a, b)
        assert a.min() >= 0 and a.max() < 7


# --- transition matrix / noise ratio ---------------------------------------

def test_transition_identity():
    labels = np.array([0, 1, 2, 0, 1, 2])
    tm = empirical_transition_matrix(labels, labels, 3)
    assert np.array_equal(tm.normalized, np.eye(3))


def test_transition_hand_example():
    tm = empirical_transition_matrix([0, 0, 1, 1], [0, 1, 1, 1], 2)
    assert tm.counts.tolist() == [[1, 1], [0, 2]]
    assert tm.normalized.tolist() == [[0.5, 0.5], [0.0, 1.0]]


def test_transition_row_sums_match_class_counts():
    rng = np.random.default_rng(6)
    t = rng.integers(0, 4, 300)
    o = rng.integers(0, 4, 300)
    tm = empirical_transition_matrix(t, o, 4)
    assert np.array_equal(tm.counts.sum(axis=1), np.bincount(t, minlength=4))


def test_transition_empty_row_flagged():
    tm = empirical_transition_matrix([0, 0], [1, 1], 3)
    assert tm.empty_rows.tolist() == [False, True, True]
    assert np.all(tm.normalized[1:] == 0)


def test_transition_label_out_of_range():
    with pytest.raises(LabelOutOfRange):
        empirical_transition_matrix([0, 3], [0, 1], 3)


def test_noise_ratio():
    assert noise_ratio([1, 2, 3], [1, 2, 3]) == 0.0
    assert noise_ratio([1, 2, 3], [2, 3, 1]) == 1.0
    assert noise_ratio([1, 2, 3, 4], [1, 2, 0, 0]) == 0.5
    with pytest.raises(LengthMismatch):
        noise_ratio([1, 2], [1])
