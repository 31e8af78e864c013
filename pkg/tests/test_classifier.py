import numpy as np
import pytest

from labelcal.classifier import (
    ClassifierParams,
    TrainConfig,
    TrainedEnsemble,
    ensemble_loss_and_grads,
    init_params,
    noisy_marker,
    predict_proba,
    train_with_dynamics,
)
from labelcal.coreg import coregularization_grad, coregularization_loss
from labelcal.errors import EmptySplit, EpochOutOfRange
from labelcal.optim import one_hot
from conftest import gaussian_mixture


def flatten(grads):
    return np.concatenate([g.ravel() for g in grads])


def finite_diff(loss_fn, tensors, step=1e-5):
    grads = []
    for tensor in tensors:
        g = np.zeros_like(tensor)
        it = np.nditer(tensor, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = tensor[idx]
            tensor[idx] = orig + step
            up = loss_fn()
            tensor[idx] = orig - step
            down = loss_fn()
            tensor[idx] = orig
            g[idx] = (up - down) / (2 * step)
        grads.append(g)
    return grads


def max_rel_error(analytic, numeric):
    a, n = flatten(analytic), flatten(numeric)
    denom = np.maximum(np.abs(a) + np.abs(n), 1e-8)
    return np.max(np.abs(a - n) / denom)


# --- co-regularization ------------------------------------------------------

def test_coreg_identical_branches_zero():
    rng = np.random.default_rng(0)
    raw = rng.random((4, 3)) + 0.1
    p = raw / raw.sum(axis=1, keepdims=True)
    probs = np.stack([p, p, p])
    assert coregularization_loss(probs) <= 1e-12


def test_coreg_hand_example():
    probs = np.array([[[1.0, 0.0]], [[0.0, 1.0]]])
    assert coregularization_loss(probs, eps=1e-8) == pytest.approx(8.516, abs=0.01)


def test_coreg_permutation_invariance():
    rng = np.random.default_rng(1)
    raw = rng.random((3, 5, 4)) + 0.05
    probs = raw / raw.sum(axis=2, keepdims=True)
    base = coregularization_loss(probs)
    for perm in ([1, 0, 2], [2, 1, 0], [1, 2, 0]):
        assert coregularization_loss(probs[perm]) == pytest.approx(base, rel=1e-12)


def test_coreg_near_nonnegative():
    rng = np.random.default_rng(2)
    for _ in range(20):
        raw = rng.random((2, 4, 3)) + 1e-6
        probs = raw / raw.sum(axis=2, keepdims=True)
        assert coregularization_loss(probs) >= -1e-7


def test_coreg_grad_matches_finite_differences():
    rng = np.random.default_rng(3)
    raw = rng.random((3, 4, 5)) + 0.05
    probs = raw / raw.sum(axis=2, keepdims=True)
    analytic = coregularization_grad(probs)
    step = 1e-6
    numeric = np.zeros_like(probs)
    it = np.nditer(probs, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = probs[idx]
        probs[idx] = orig + step
        up = coregularization_loss(probs)
        probs[idx] = orig - step
        down = coregularization_loss(probs)
        probs[idx] = orig
        numeric[idx] = (up - down) / (2 * step)
    assert np.max(np.abs(analytic - numeric)) < 1e-6


# --- gradients --------------------------------------------------------------

@pytest.mark.parametrize("hidden", [0, 6])
@pytest.mark.parametrize("branches", [1, 3])
def test_classifier_gradients_match_finite_differences(hidden, branches):
    rng = np.random.default_rng(10 + hidden + branches)
    n, d, c = 7, 4, 3
    x = rng.normal(size=(n, d))
    y = rng.integers(0, c, n)
    params = [init_params(d, c, hidden, rng) for _ in range(branches)]
    for p in params:
        for t in p.tensors:
            t += rng.normal(0, 0.3, t.shape)

    _, analytic = ensemble_loss_and_grads(params, x, y, coreg_weight=0.7)

    def loss_fn():
        return ensemble_loss_and_grads(params, x, y, coreg_weight=0.7)[0]

    for b in range(branches):
        numeric = finite_diff(loss_fn, params[b].tensors)
        assert max_rel_error(analytic[b], numeric) < 1e-4


def test_single_branch_loss_is_plain_cross_entropy():
    rng = np.random.default_rng(11)
    n, d, c = 12, 5, 4
    x = rng.normal(size=(n, d))
    y = rng.integers(0, c, n)
    params = [init_params(d, c, 0, rng)]
    loss_with, _ = ensemble_loss_and_grads(params, x, y, coreg_weight=5.0)
    loss_without, _ = ensemble_loss_and_grads(params, x, y, coreg_weight=0.0)
    assert loss_with == pytest.approx(loss_without, rel=1e-12)


# --- training ---------------------------------------------------------------

def make_splits(n_train, n_valid, n_test, c, d, seed, noise=0.0, spread=4.0):
    rng = np.random.default_rng(seed)
    xs, ys, ids = {}, {}, {}
    for split, n in (("train", n_train), ("valid", n_valid), ("test", n_test)):
        x, labels = gaussian_mixture(n, c, d, rng, spread)
        if noise > 0:
            flip = rng.random(n) < noise
            labels = np.where(flip, (labels + 1) % c, labels)
        xs[split] = x
        ys[split] = labels
        ids[split] = [f"{split}-{i}" for i in range(n)]
    return xs, ys, ids


def test_separable_data_fits():
    xs, ys, ids = make_splits(200, 40, 40, 2, 4, seed=0, spread=6.0)
    config = TrainConfig(epochs=10, batch_size=32, learning_rate=0.05,
                         branches=1, seed=0)
    ensemble = train_with_dynamics(xs, ys, ids, 2, config)
    final = ensemble.dynamics["train"][:, -1, :].argmax(axis=1)
    assert np.mean(final == ys["train"]) >= 0.99


def test_dynamics_rows_are_probability_vectors():
    xs, ys, ids = make_splits(60, 20, 20, 3, 5, seed=1)
    config = TrainConfig(epochs=4, batch_size=16, learning_rate=0.01,
                         branches=2, seed=1)
    ensemble = train_with_dynamics(xs, ys, ids, 3, config)
    for split in ("train", "valid", "test"):
        dyn = ensemble.dynamics[split]
        assert np.all(dyn >= 0) and np.all(dyn <= 1)
        np.testing.assert_allclose(dyn.sum(axis=2), 1.0, atol=1e-6)


def test_training_deterministic():
    xs, ys, ids = make_splits(50, 15, 15, 3, 4, seed=2)
    config = TrainConfig(epochs=3, batch_size=16, learning_rate=0.01,
                         branches=2, seed=7)
    e1 = train_with_dynamics(xs, ys, ids, 3, config)
    e2 = train_with_dynamics(xs, ys, ids, 3, config)
    np.testing.assert_array_equal(e1.dynamics["train"], e2.dynamics["train"])
    assert e1.epoch_valid_accuracy == e2.epoch_valid_accuracy


def test_selected_epoch_first_argmax():
    ensemble = TrainedEnsemble(
        branch_params=[ClassifierParams([np.zeros((2, 2)), np.zeros(2)])],
        epoch_params=[[ClassifierParams([np.zeros((2, 2)), np.zeros(2)])]] * 3,
        dynamics={}, dynamics_ids={},
        epoch_valid_accuracy=[0.5, 0.9, 0.9],
    )
    assert ensemble.selected_epoch == 1


def test_empty_split_raises():
    xs, ys, ids = make_splits(10, 0, 5, 2, 3, seed=3)
    with pytest.raises(EmptySplit):
        train_with_dynamics(xs, ys, ids, 2, TrainConfig(epochs=1))


def test_predict_proba_uniform_for_zero_params():
    zero = ClassifierParams([np.zeros((4, 3)), np.zeros(3)])
    ensemble = TrainedEnsemble(
        branch_params=[zero], epoch_params=[[zero]], dynamics={}, dynamics_ids={},
        epoch_valid_accuracy=[0.0],
    )
    p = predict_proba(ensemble, np.ones(4))
    np.testing.assert_allclose(p, np.full(3, 1 / 3), atol=1e-12)
    with pytest.raises(EpochOutOfRange):
        predict_proba(ensemble, np.ones(4), epoch=5)


def test_predict_proba_valid_distribution():
    xs, ys, ids = make_splits(60, 20, 20, 3, 5, seed=4)
    config = TrainConfig(epochs=3, batch_size=16, learning_rate=0.05, branches=2, seed=4)
    ensemble = train_with_dynamics(xs, ys, ids, 3, config)
    p = predict_proba(ensemble, xs["test"][0])
    assert np.all(p > 0) and np.all(p < 1)
    assert abs(p.sum() - 1.0) < 1e-9


def test_trained_blob_model_predicts_class0_point():
    rng = np.random.default_rng(5)
    centers = np.array([[5.0, 5.0], [-5.0, -5.0]])
    labels = rng.integers(0, 2, 200)
    x = centers[labels] + rng.normal(0, 0.5, (200, 2))
    xs = {"train": x, "valid": x[:40], "test": x[:10]}
    ys = {"train": labels, "valid": labels[:40], "test": labels[:10]}
    ids = {s: [f"{s}-{i}" for i in range(len(xs[s]))] for s in xs}
    ensemble = train_with_dynamics(
        xs, ys, ids, 2, TrainConfig(epochs=8, batch_size=32,
                                    learning_rate=0.05, branches=1, seed=5)
    )
    assert predict_proba(ensemble, np.array([5.0, 5.0])).argmax() == 0


# --- noisy marker -----------------------------------------------------------

def test_noisy_marker_extremes():
    rng = np.random.default_rng(6)
    raw = rng.random((10, 3, 4)) + 0.01
    dyn = raw / raw.sum(axis=2, keepdims=True)
    labels = rng.integers(0, 4, 10)
    assert not noisy_marker(dyn, labels, 0.0, 4).any()
    assert noisy_marker(dyn, labels, 1.0, 4).all()


def test_noisy_marker_counts():
    rng = np.random.default_rng(7)
    raw = rng.random((17, 5, 3)) + 0.01
    dyn = raw / raw.sum(axis=2, keepdims=True)
    labels = rng.integers(0, 3, 17)
    for sigma in (0.1, 0.3, 0.5, 0.77):
        mask = noisy_marker(dyn, labels, sigma, 3)
        assert mask.sum() == int(np.ceil(sigma * 17))


def test_noisy_marker_prefers_far_trajectory():
    # one trajectory glued to its noisy one-hot, one stuck at uniform
    onehot = np.tile([1.0, 0.0, 0.0], (4, 1))
    uniform = np.full((4, 3), 1 / 3)
    dyn = np.stack([onehot, uniform])
    mask = noisy_marker(dyn, np.array([0, 0]), 0.5, 3)
    assert mask.tolist() == [False, True]


def test_noisy_marker_tie_break_by_id():
    dyn = np.full((3, 2, 2), 0.5)
    labels = np.zeros(3, dtype=int)
    mask = noisy_marker(dyn, labels, 1 / 3, 2, ids=["b", "a", "c"])
    # all scores equal -> pick lexicographically smallest id, "a" (index 1)
    assert mask.tolist() == [False, True, False]
