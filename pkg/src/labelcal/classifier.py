"""Stage-I surrogate classifier: an ensemble of M co-regularized softmax
classifiers (optionally with one hidden tanh layer) trained on noisy labels,
recording the per-epoch consensus probability trajectory of every sample in
every split. Those trajectories are the training dynamics consumed by the
candidate retrieval and diffusion stages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coreg import DEFAULT_EPS, coregularization_grad, coregularization_loss, softmax_vjp
from .errors import EmptySplit, EpochOutOfRange, NonFiniteLoss
from .optim import Adam, one_hot, softmax


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 128
    learning_rate: float = 5e-5
    branches: int = 3
    coreg_weight: float = 1.0
    coreg_epsilon: float = DEFAULT_EPS
    hidden_units: int = 0  # 0 = linear softmax
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.branches < 1 or self.batch_size < 1:
            raise ValueError("epochs, branches and batch_size must be >= 1")


@dataclass
class ClassifierParams:
    """Either [W, b] (linear) or [W1, b1, W2, b2] (one hidden layer)."""
    tensors: list[np.ndarray]

    @property
    def hidden(self) -> bool:
        return len(self.tensors) == 4


@dataclass
class TrainedEnsemble:
    branch_params: list[ClassifierParams]
    epoch_params: list[list[ClassifierParams]]        # per epoch, per branch snapshots
    dynamics: dict[str, np.ndarray]                   # split -> (N_split, E, C)
    dynamics_ids: dict[str, list[str]]                # split -> sample ids, same order
    epoch_valid_accuracy: list[float]
    selected_epoch: int = field(init=False)

    def __post_init__(self):
        acc = np.asarray(self.epoch_valid_accuracy)
        self.selected_epoch = int(acc.argmax())  # first occurrence on ties


def init_params(feature_dim: int, num_classes: int, hidden_units: int,
                rng: np.random.Generator) -> ClassifierParams:
    scale = 0.01
    if hidden_units > 0:
        return ClassifierParams([
            rng.normal(0, scale, (feature_dim, hidden_units)),
            np.zeros(hidden_units),
            rng.normal(0, scale, (hidden_units, num_classes)),
            np.zeros(num_classes),
        ])
    return ClassifierParams([rng.normal(0, scale, (feature_dim, num_classes)),
                             np.zeros(num_classes)])


def forward(params: ClassifierParams, x: np.ndarray):
    """Return (probabilities, cache for backprop)."""
    if params.hidden:
        w1, b1, w2, b2 = params.tensors
        a1 = np.tanh(x @ w1 + b1)
        probs = softmax(a1 @ w2 + b2)
        return probs, (x, a1)
    w, b = params.tensors
    return softmax(x @ w + b), (x,)


def backward(params: ClassifierParams, cache, grad_logits: np.ndarray) -> list[np.ndarray]:
    if params.hidden:
        _, _, w2, _ = params.tensors
        x, a1 = cache
        gw2 = a1.T @ grad_logits
        gb2 = grad_logits.sum(axis=0)
        da1 = grad_logits @ w2.T
        dz1 = (1.0 - a1 * a1) * da1
        gw1 = x.T @ dz1
        gb1 = dz1.sum(axis=0)
        return [gw1, gb1, gw2, gb2]
    (x,) = cache
    return [x.T @ grad_logits, grad_logits.sum(axis=0)]


def ensemble_loss_and_grads(
    branch_params: list[ClassifierParams],
    x: np.ndarray,
    labels: np.ndarray,
    coreg_weight: float,
    coreg_epsilon: float = DEFAULT_EPS,
):
    """Mean branch cross-entropy plus the weighted co-regularization penalty.

    Returns (loss, per-branch gradient lists). With a single branch the
    co-regularization term vanishes identically.
    """
    m = len(branch_params)
    n = x.shape[0]
    num_classes = branch_params[0].tensors[-1].shape[-1]
    target = one_hot(labels, num_classes)

    probs = []
    caches = []
    for params in branch_params:
        p, cache = forward(params, x)
        probs.append(p)
        caches.append(cache)
    probs_arr = np.stack(probs)  # (M, N, C)

    ce = -np.mean(
        [np.log(p[np.arange(n), labels] + 1e-300).mean() for p in probs]
    )
    loss = ce
    if m > 1 and coreg_weight != 0.0:
        loss += coreg_weight * coregularization_loss(probs_arr, coreg_epsilon)
        grad_probs = coreg_weight * coregularization_grad(probs_arr, coreg_epsilon)
    else:
        grad_probs = None

    grads = []
    for b, (params, p, cache) in enumerate(zip(branch_params, probs, caches)):
        grad_logits = (p - target) / (m * n)
        if grad_probs is not None:
            grad_logits = grad_logits + softmax_vjp(p, grad_probs[b])
        grads.append(backward(params, cache, grad_logits))
    return float(loss), grads


def train_with_dynamics(
    splits_x: dict[str, np.ndarray],
    splits_y: dict[str, np.ndarray],
    split_ids: dict[str, list[str]],
    num_classes: int,
    config: TrainConfig,
) -> TrainedEnsemble:
    """Train the ensemble on the train split's noisy labels and record consensus
    probability trajectories for every sample in every split.

    Noisy-validation accuracy is recorded per epoch; ``selected_epoch`` is its
    first argmax, matching noisy-validation model selection.
    """
    for required in ("train", "valid"):
        if required not in splits_x or splits_x[required].shape[0] == 0:
            raise EmptySplit(f"split {required!r} is empty")
    x_train = np.asarray(splits_x["train"], dtype=float)
    y_train = np.asarray(splits_y["train"], dtype=int)
    rng = np.random.default_rng(config.seed)
    branch_params = [
        init_params(x_train.shape[1], num_classes, config.hidden_units, rng)
        for _ in range(config.branches)
    ]
    optimizers = [Adam(p.tensors, config.learning_rate) for p in branch_params]

    n = x_train.shape[0]
    trajectories = {
        split: np.zeros((splits_x[split].shape[0], config.epochs, num_classes))
        for split in splits_x
    }
    epoch_params: list[list[ClassifierParams]] = []
    valid_acc: list[float] = []

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = ensemble_loss_and_grads(
                branch_params, x_train[idx], y_train[idx],
                config.coreg_weight, config.coreg_epsilon,
            )
            if not math.isfinite(loss):
                raise NonFiniteLoss(f"loss diverged at epoch {epoch}")
            for opt, g in zip(optimizers, grads):
                opt.step(g)

        epoch_params.append(
            [ClassifierParams([t.copy() for t in p.tensors]) for p in branch_params]
        )
        for split, xs in splits_x.items():
            if xs.shape[0] == 0:
                continue
            consensus = np.mean([forward(p, xs)[0] for p in branch_params], axis=0)
            trajectories[split][:, epoch, :] = consensus
        valid_consensus = trajectories["valid"][:, epoch, :]
        valid_acc.append(float(np.mean(valid_consensus.argmax(axis=1) == splits_y["valid"])))

    return TrainedEnsemble(
        branch_params=branch_params,
        epoch_params=epoch_params,
        dynamics=trajectories,
        dynamics_ids=dict(split_ids),
        epoch_valid_accuracy=valid_acc,
    )


def predict_proba(ensemble: TrainedEnsemble, features: np.ndarray,
                  epoch: int | None = None) -> np.ndarray:
    """Consensus class probabilities at ``selected_epoch`` (default) or a given epoch."""
    if epoch is None:
        epoch = ensemble.selected_epoch
    if not 0 <= epoch < len(ensemble.epoch_params):
        raise EpochOutOfRange(f"epoch {epoch} outside [0, {len(ensemble.epoch_params)})")
    x = np.atleast_2d(np.asarray(features, dtype=float))
    probs = np.mean([forward(p, x)[0] for p in ensemble.epoch_params[epoch]], axis=0)
    return probs[0] if np.asarray(features).ndim == 1 else probs


def trajectory_scores(dynamics: np.ndarray, noisy_labels: np.ndarray,
                      num_classes: int, stat: str = "mean") -> np.ndarray:
    """Per-sample Euclidean distance statistics between the probability trajectory
    and the one-hot noisy label. ``stat`` is "mean" or "mean_std"."""
    target = one_hot(noisy_labels, num_classes)  # (N, C)
    dists = np.linalg.norm(dynamics - target[:, None, :], axis=2)  # (N, E)
    scores = dists.mean(axis=1)
    if stat == "mean_std":
        scores = scores + dists.std(axis=1)
    elif stat != "mean":
        raise ValueError(f"unknown trajectory statistic {stat!r}")
    return scores


def noisy_marker(dynamics: np.ndarray, noisy_labels: np.ndarray, sigma: float,
                 num_classes: int, ids: list[str] | None = None,
                 stat: str = "mean") -> np.ndarray:
    """Mark the ceil(sigma*N) samples with the largest trajectory scores as noisy.

    Ties at equal score are broken by sample id order (index order when ids are
    not given), so the mask is deterministic.
    """
    n = dynamics.shape[0]
    if not 0.0 <= sigma <= 1.0:
        raise ValueError(f"sigma must be in [0, 1], got {sigma}")
    k = math.ceil(sigma * n)
    mask = np.zeros(n, dtype=bool)
    if k == 0:
        return mask
    scores = trajectory_scores(dynamics, noisy_labels, num_classes, stat)
    keys = ids if ids is not None else list(range(n))
    order = sorted(range(n), key=lambda i: (-scores[i], keys[i]))
    mask[order[:k]] = True
    return mask
