"""Simplex label diffusion: k-logit representation, cosine-schedule forward
corruption, a conditional MLP denoiser with manual backprop, candidate
distillation, and iterative reverse inference.

Labels live in k-logit space: class c maps to a vector with +k at position c
and -k elsewhere. Forward corruption draws Gaussian noise with variance k^2
to match that scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .candidates import CandidateSet
from .coreg import DEFAULT_EPS, coregularization_grad, coregularization_loss, softmax_vjp
from .errors import (
    LabelOutOfRange,
    NoWarmupData,
    NonFiniteLoss,
    ShapeMismatch,
    TimestepOutOfRange,
)
from .optim import Adam, one_hot, softmax

TIME_EMBED_DIM = 64
DYNAMICS_EMBED_DIM = 64
HIDDEN_DIM = 128


# ---------------------------------------------------------------------------
# schedule
# ---------------------------------------------------------------------------

@dataclass
class DiffusionSchedule:
    T: int
    k: float = 5.0
    offset: float = 0.008
    alpha_bar: np.ndarray = field(init=False)
    alpha: np.ndarray = field(init=False)
    beta: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        t = np.arange(self.T + 1, dtype=float)
        f = np.cos(((t / self.T + self.offset) / (1.0 + self.offset)) * math.pi / 2.0) ** 2
        self.alpha_bar = f / f[0]
        self.alpha = np.ones(self.T + 1)
        self.alpha[1:] = self.alpha_bar[1:] / self.alpha_bar[:-1]
        self.beta = 1.0 - self.alpha


def alpha_bar(t: int, schedule: DiffusionSchedule) -> float:
    if not 0 <= t <= schedule.T:
        raise TimestepOutOfRange(f"t={t} outside [0, {schedule.T}]")
    return float(schedule.alpha_bar[t])


# ---------------------------------------------------------------------------
# k-logit simplex
# ---------------------------------------------------------------------------

def to_k_logit(label: int, num_classes: int, k: float) -> np.ndarray:
    if not 0 <= label < num_classes:
        raise LabelOutOfRange(f"label {label} outside [0, {num_classes})")
    s = np.full(num_classes, -k)
    s[label] = k
    return s


def labels_to_k_logit(labels, num_classes: int, k: float) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise LabelOutOfRange(f"labels outside [0, {num_classes})")
    return (2.0 * one_hot(labels, num_classes) - 1.0) * k


def project_argmax(logits: np.ndarray, k: float) -> np.ndarray:
    """Snap logits back onto the k-logit lattice at their argmax (lowest index wins ties)."""
    logits = np.atleast_2d(logits)
    out = np.full_like(logits, -k, dtype=float)
    out[np.arange(logits.shape[0]), logits.argmax(axis=1)] = k
    return out if out.shape[0] > 1 else out[0]


def forward_sample(s0: np.ndarray, t: int, schedule: DiffusionSchedule,
                   rng: np.random.Generator) -> np.ndarray:
    """Closed-form forward corruption: sqrt(abar_t)*s0 + sqrt(1-abar_t)*eps,
    eps ~ N(0, k^2 I)."""
    if not 1 <= t <= schedule.T:
        raise TimestepOutOfRange(f"t={t} outside [1, {schedule.T}]")
    ab = schedule.alpha_bar[t]
    eps = rng.normal(0.0, schedule.k, size=np.shape(s0))
    return math.sqrt(ab) * np.asarray(s0, dtype=float) + math.sqrt(1.0 - ab) * eps


def forward_sample_batch(s0: np.ndarray, t: np.ndarray, schedule: DiffusionSchedule,
                         rng: np.random.Generator) -> np.ndarray:
    ab = schedule.alpha_bar[t][:, None]
    eps = rng.normal(0.0, schedule.k, size=s0.shape)
    return np.sqrt(ab) * s0 + np.sqrt(1.0 - ab) * eps


# ---------------------------------------------------------------------------
# conditional denoiser
# ---------------------------------------------------------------------------

def time_embedding(t: np.ndarray, T: int, dim: int = TIME_EMBED_DIM) -> np.ndarray:
    """Sinusoidal embedding of the (normalized) timestep."""
    t = np.atleast_1d(np.asarray(t, dtype=float)) / max(T, 1)
    half = dim // 2
    freqs = np.exp(np.linspace(0.0, math.log(1000.0), half))
    angles = t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=1)


@dataclass
class DenoiserNet:
    """MLP mapping [s_t | time_emb(t) | s_noisy | encode(x)] to C logits.

    tensors: [We, be, W1, b1, W2, b2, W3, b3] where (We, be) is the dense
    dynamics encoder and the rest are two tanh hidden layers plus the head.
    """
    num_classes: int
    dynamics_dim: int
    tensors: list[np.ndarray]

    @staticmethod
    def create(num_classes: int, dynamics_dim: int,
               rng: np.random.Generator) -> "DenoiserNet":
        def glorot(n_in, n_out):
            limit = math.sqrt(6.0 / (n_in + n_out))
            return rng.uniform(-limit, limit, (n_in, n_out))

        d_in = 2 * num_classes + TIME_EMBED_DIM + DYNAMICS_EMBED_DIM
        tensors = [
            glorot(dynamics_dim, DYNAMICS_EMBED_DIM), np.zeros(DYNAMICS_EMBED_DIM),
            glorot(d_in, HIDDEN_DIM), np.zeros(HIDDEN_DIM),
            glorot(HIDDEN_DIM, HIDDEN_DIM), np.zeros(HIDDEN_DIM),
            glorot(HIDDEN_DIM, num_classes), np.zeros(num_classes),
        ]
        return DenoiserNet(num_classes, dynamics_dim, tensors)


def denoiser_forward(net: DenoiserNet, s_t: np.ndarray, t: np.ndarray,
                     s_noisy: np.ndarray, x_dyn: np.ndarray, T: int):
    """Return (logits, probs, cache). All inputs batched along axis 0."""
    s_t = np.atleast_2d(np.asarray(s_t, dtype=float))
    s_noisy = np.atleast_2d(np.asarray(s_noisy, dtype=float))
    x_dyn = np.atleast_2d(np.asarray(x_dyn, dtype=float))
    if s_t.shape[1] != net.num_classes or s_noisy.shape[1] != net.num_classes:
        raise ShapeMismatch(f"simplex width != {net.num_classes}")
    if x_dyn.shape[1] != net.dynamics_dim:
        raise ShapeMismatch(f"dynamics width {x_dyn.shape[1]} != {net.dynamics_dim}")
    we, be, w1, b1, w2, b2, w3, b3 = net.tensors
    enc = np.tanh(x_dyn @ we + be)
    h0 = np.concatenate([s_t, time_embedding(t, T), s_noisy, enc], axis=1)
    a1 = np.tanh(h0 @ w1 + b1)
    a2 = np.tanh(a1 @ w2 + b2)
    logits = a2 @ w3 + b3
    probs = softmax(logits)
    cache = (x_dyn, enc, h0, a1, a2)
    return logits, probs, cache


def denoiser_backward(net: DenoiserNet, cache, grad_logits: np.ndarray) -> list[np.ndarray]:
    we, be, w1, b1, w2, b2, w3, b3 = net.tensors
    x_dyn, enc, h0, a1, a2 = cache
    gw3 = a2.T @ grad_logits
    gb3 = grad_logits.sum(axis=0)
    da2 = grad_logits @ w3.T
    dz2 = (1 - a2 * a2) * da2
    gw2 = a1.T @ dz2
    gb2 = dz2.sum(axis=0)
    da1 = dz2 @ w2.T
    dz1 = (1 - a1 * a1) * da1
    gw1 = h0.T @ dz1
    gb1 = dz1.sum(axis=0)
    dh0 = dz1 @ w1.T
    denc = dh0[:, -DYNAMICS_EMBED_DIM:]
    dze = (1 - enc * enc) * denc
    gwe = x_dyn.T @ dze
    gbe = dze.sum(axis=0)
    return [gwe, gbe, gw1, gb1, gw2, gb2, gw3, gb3]


def branch_loss_and_grads(
    nets: list[DenoiserNet],
    s_t: np.ndarray,
    t: np.ndarray,
    y_target: np.ndarray,
    s_noisy: np.ndarray,
    x_dyn: np.ndarray,
    T: int,
    weights: np.ndarray | None = None,
    coreg_weight: float = 0.0,
    coreg_epsilon: float = DEFAULT_EPS,
):
    """Weighted cross-entropy over branches plus the co-regularization penalty.

    ``weights`` scales each item's loss (sampled-candidate weights during
    distillation); defaults to 1. Returns (loss, per-item mean CE, grads per
    branch).
    """
    n = s_t.shape[0]
    num_classes = nets[0].num_classes
    m = len(nets)
    if weights is None:
        weights = np.ones(n)
    target = one_hot(y_target, num_classes)

    probs_list = []
    caches = []
    for net in nets:
        _, probs, cache = denoiser_forward(net, s_t, t, s_noisy, x_dyn, T)
        probs_list.append(probs)
        caches.append(cache)
    probs_arr = np.stack(probs_list)

    per_item = np.mean(
        [-np.log(p[np.arange(n), y_target] + 1e-300) for p in probs_list], axis=0
    )
    loss = float(np.mean(weights * per_item))
    if m > 1 and coreg_weight != 0.0:
        loss += coreg_weight * coregularization_loss(probs_arr, coreg_epsilon)
        grad_probs = coreg_weight * coregularization_grad(probs_arr, coreg_epsilon)
    else:
        grad_probs = None

    grads = []
    for b, (net, probs, cache) in enumerate(zip(nets, probs_list, caches)):
        grad_logits = weights[:, None] * (probs - target) / (m * n)
        if grad_probs is not None:
            grad_logits = grad_logits + softmax_vjp(probs, grad_probs[b])
        grads.append(denoiser_backward(net, cache, grad_logits))
    return loss, per_item, grads


def training_loss(
    nets: list[DenoiserNet],
    y_target: np.ndarray,
    noisy_labels: np.ndarray,
    x_dyn: np.ndarray,
    schedule: DiffusionSchedule,
    rng: np.random.Generator,
    weights: np.ndarray | None = None,
    coreg_weight: float = 0.0,
    coreg_epsilon: float = DEFAULT_EPS,
):
    """Draw t uniform on {1..T}, corrupt the target k-logit point, and return
    (loss, per-item losses, grads per branch)."""
    y_target = np.asarray(y_target, dtype=int)
    n = y_target.shape[0]
    t = rng.integers(1, schedule.T + 1, size=n)
    s0 = labels_to_k_logit(y_target, nets[0].num_classes, schedule.k)
    s_t = forward_sample_batch(s0, t, schedule, rng)
    s_noisy = labels_to_k_logit(noisy_labels, nets[0].num_classes, schedule.k)
    return branch_loss_and_grads(
        nets, s_t, t, y_target, s_noisy, x_dyn, schedule.T,
        weights, coreg_weight, coreg_epsilon,
    )


# ---------------------------------------------------------------------------
# inference
# ---------------------------------------------------------------------------

def inference_grid(T: int, n_steps: int) -> np.ndarray:
    """Decreasing grid of n_steps timesteps, evenly spaced over {1..T}."""
    if not 1 <= n_steps <= T:
        raise TimestepOutOfRange(f"inference_timesteps={n_steps} outside [1, {T}]")
    return np.unique(np.round(np.linspace(T, 1, n_steps)).astype(int))[::-1]


def infer_reverse(
    nets: list[DenoiserNet],
    s_noisy: np.ndarray,
    x_dyn: np.ndarray,
    schedule: DiffusionSchedule,
    inference_timesteps: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Iterative reverse denoising from the N(0, k^2 I) prior.

    At each grid step, the branch-averaged prediction is projected back onto
    the k-logit lattice and re-corrupted to the next (smaller) timestep. The
    output is the branch-averaged softmax at the final step.
    """
    s_noisy = np.atleast_2d(np.asarray(s_noisy, dtype=float))
    x_dyn = np.atleast_2d(np.asarray(x_dyn, dtype=float))
    n = s_noisy.shape[0]
    num_classes = nets[0].num_classes
    grid = inference_grid(schedule.T, inference_timesteps)
    s = rng.normal(0.0, schedule.k, size=(n, num_classes))
    consensus = None
    for j, t in enumerate(grid):
        t_arr = np.full(n, t)
        consensus = np.mean(
            [denoiser_forward(net, s, t_arr, s_noisy, x_dyn, schedule.T)[1] for net in nets],
            axis=0,
        )
        if j == len(grid) - 1:
            break
        t_next = int(grid[j + 1])
        s_hat = np.atleast_2d(project_argmax(consensus, schedule.k))
        ab = schedule.alpha_bar[t_next]
        eps = rng.normal(0.0, schedule.k, size=s.shape)
        s = math.sqrt(ab) * s_hat + math.sqrt(1.0 - ab) * eps
    return consensus


# ---------------------------------------------------------------------------
# candidate distillation
# ---------------------------------------------------------------------------

@dataclass
class DistillConfig:
    warmup_epochs: int = 2          # alpha
    eval_rounds: int = 2            # beta
    total_epochs: int = 10
    inference_timesteps: int = 10
    batch_size: int = 128
    learning_rate: float = 5e-4
    branches: int = 3
    coreg_weight: float = 1.0
    coreg_epsilon: float = DEFAULT_EPS
    seed: int = 0

    def __post_init__(self):
        if not self.warmup_epochs < self.total_epochs:
            raise ValueError("warmup_epochs must be < total_epochs")
        if self.eval_rounds < 1:
            raise ValueError("eval_rounds must be >= 1")


@dataclass
class DistillResult:
    nets: list[DenoiserNet]
    refined: list[CandidateSet]
    epoch_valid_accuracy: list[float]
    selected_epoch: int
    selected_nets: list[DenoiserNet]


def update_candidate_weights(cs: CandidateSet, predicted: int, beta: int) -> CandidateSet:
    """One distillation round: if the prediction is a candidate, raise its weight
    by (1 - w)/beta and renormalize; otherwise leave the set unchanged."""
    labels = cs.labels()
    if predicted not in labels:
        return cs
    idx = labels.index(predicted)
    weights = np.array([w for _, w in cs.candidates])
    weights[idx] += (1.0 - weights[idx]) / beta
    weights /= weights.sum()
    return CandidateSet(
        cs.sample_id, cs.kind,
        [(label, float(w)) for label, w in zip(labels, weights)],
        cs.noisy_label,
    )


def distill_train(
    candidate_sets: list[CandidateSet],
    x_dyn: np.ndarray,
    noisy_labels: np.ndarray,
    num_classes: int,
    schedule: DiffusionSchedule,
    config: DistillConfig,
    valid_x_dyn: np.ndarray | None = None,
    valid_cond_labels: np.ndarray | None = None,
    valid_noisy_labels: np.ndarray | None = None,
) -> DistillResult:
    """Train the M-branch denoiser with candidate distillation.

    Warmup epochs use only certain samples. Every later epoch runs
    ``eval_rounds`` inference passes over the uncertain samples to shift their
    candidate weights toward matched predictions, then trains on certain
    samples plus one multinomially sampled candidate per uncertain sample,
    with the uncertain losses scaled by the sampled weight.

    When a noisy validation split is supplied, per-epoch validation accuracy
    is recorded and the best epoch's parameters are kept for inference.
    """
    rng = np.random.default_rng(config.seed)
    x_dyn = np.asarray(x_dyn, dtype=float)
    noisy_labels = np.asarray(noisy_labels, dtype=int)

    certain_idx = [i for i, cs in enumerate(candidate_sets) if cs.kind == "certain"]
    uncertain_idx = [i for i, cs in enumerate(candidate_sets) if cs.kind == "uncertain"]
    if not certain_idx:
        raise NoWarmupData("candidate sets contain no certain samples to warm up on")

    sets = list(candidate_sets)
    nets = [DenoiserNet.create(num_classes, x_dyn.shape[1], rng)
            for _ in range(config.branches)]
    optimizers = [Adam(net.tensors, config.learning_rate) for net in nets]
    s_noisy_all = labels_to_k_logit(noisy_labels, num_classes, schedule.k)

    def run_epoch(indices, targets, weights):
        order = rng.permutation(len(indices))
        for start in range(0, len(indices), config.batch_size):
            sel = order[start:start + config.batch_size]
            idx = indices[sel]
            loss, _, grads = training_loss(
                nets, targets[sel], noisy_labels[idx], x_dyn[idx], schedule, rng,
                weights=weights[sel], coreg_weight=config.coreg_weight,
                coreg_epsilon=config.coreg_epsilon,
            )
            if not math.isfinite(loss):
                raise NonFiniteLoss("diffusion loss diverged")
            for opt, g in zip(optimizers, grads):
                opt.step(g)

    certain_targets = np.array([sets[i].candidates[0][0] for i in certain_idx])
    certain_arr = np.array(certain_idx)
    uncertain_arr = np.array(uncertain_idx, dtype=int)

    valid_acc: list[float] = []
    snapshots: list[list[DenoiserNet]] = []

    for epoch in range(config.total_epochs):
        if epoch < config.warmup_epochs:
            run_epoch(certain_arr, certain_targets, np.ones(len(certain_idx)))
        else:
            if uncertain_arr.size:
                for _ in range(config.eval_rounds):
                    preds = infer_reverse(
                        nets, s_noisy_all[uncertain_arr], x_dyn[uncertain_arr],
                        schedule, config.inference_timesteps, rng,
                    ).argmax(axis=1)
                    for pos, i in enumerate(uncertain_arr):
                        sets[i] = update_candidate_weights(
                            sets[i], int(preds[pos]), config.eval_rounds
                        )
                sampled = np.array([
                    sets[i].labels()[
                        rng.choice(len(sets[i].candidates),
                                   p=[w for _, w in sets[i].candidates])
                    ]
                    for i in uncertain_arr
                ])
                sampled_w = np.array([
                    dict(sets[i].candidates)[int(lab)]
                    for i, lab in zip(uncertain_arr, sampled)
                ])
                indices = np.concatenate([certain_arr, uncertain_arr])
                targets = np.concatenate([certain_targets, sampled])
                weights = np.concatenate([np.ones(len(certain_idx)), sampled_w])
            else:
                indices, targets, weights = (
                    certain_arr, certain_targets, np.ones(len(certain_idx))
                )
            run_epoch(indices, targets, weights)

        snapshots.append([
            DenoiserNet(net.num_classes, net.dynamics_dim,
                        [w.copy() for w in net.tensors])
            for net in nets
        ])
        if valid_x_dyn is not None and valid_noisy_labels is not None:
            cond = valid_cond_labels if valid_cond_labels is not None else valid_noisy_labels
            probs = infer_reverse(
                nets, labels_to_k_logit(cond, num_classes, schedule.k),
                valid_x_dyn, schedule, config.inference_timesteps, rng,
            )
            valid_acc.append(float(np.mean(probs.argmax(axis=1) == valid_noisy_labels)))

    if valid_acc:
        selected = int(np.argmax(valid_acc))
    else:
        selected = config.total_epochs - 1
    return DistillResult(
        nets=nets,
        refined=sets,
        epoch_valid_accuracy=valid_acc,
        selected_epoch=selected,
        selected_nets=snapshots[selected],
    )
