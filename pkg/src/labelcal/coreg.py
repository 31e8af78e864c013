"""KL agreement penalty between ensemble branches and their consensus.

For branch probabilities p^(m) and consensus q = mean_m p^(m):

    L = (1/(M*N)) sum_i sum_m sum_c q_ic * log((q_ic + eps) / (p^m_ic + eps))

eps keeps the logarithm finite when a branch assigns zero probability.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch

DEFAULT_EPS = 1e-8


def coregularization_loss(branch_probs, eps: float = DEFAULT_EPS) -> float:
    p = np.asarray(branch_probs, dtype=float)
    if p.ndim != 3:
        raise ShapeMismatch(f"expected (M, N, C) probabilities, got shape {p.shape}")
    m, n, _ = p.shape
    q = p.mean(axis=0)
    log_ratio = np.log(q[None] + eps) - np.log(p + eps)
    return float(np.sum(q[None] * log_ratio) / (m * n))


def coregularization_grad(branch_probs, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Gradient of ``coregularization_loss`` w.r.t. the branch probabilities.

    The consensus q depends on every branch, so each branch's gradient carries
    a shared term (through q) plus its own -q/(p+eps) term.
    """
    p = np.asarray(branch_probs, dtype=float)
    if p.ndim != 3:
        raise ShapeMismatch(f"expected (M, N, C) probabilities, got shape {p.shape}")
    m, n, _ = p.shape
    q = p.mean(axis=0)
    log_ratio = np.log(q[None] + eps) - np.log(p + eps)
    # d/dq of q*log((q+eps)/(p+eps)) summed over branches, split evenly via dq/dp = 1/M
    shared = (log_ratio + (q / (q + eps))[None]).sum(axis=0) / m
    grad = (shared[None] - q[None] / (p + eps)) / (m * n)
    return grad


def softmax_vjp(probs: np.ndarray, grad_probs: np.ndarray) -> np.ndarray:
    """Backpropagate a gradient w.r.t. softmax outputs to the logits."""
    inner = np.sum(grad_probs * probs, axis=-1, keepdims=True)
    return probs * (grad_probs - inner)
