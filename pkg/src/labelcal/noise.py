"""Synthetic label-noise injection and empirical noise measurement.

Three injectors are provided: symmetric (uniform flips to other classes),
asymmetric (cyclic +1 shift), and instance-dependent (feature-driven flips
with per-instance rates). All are pure functions of (inputs, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, LabelOutOfRange, LengthMismatch

NOISE_KINDS = ("symmetric", "asymmetric", "instance_dependent")

# Spread of the per-instance flip rates before truncation to [0, 1].
IDN_RATE_STD = 0.1


@dataclass
class NoiseSpec:
    kind: str
    ratio: float
    seed: int

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"noise ratio must be in [0, 1], got {self.ratio}")


@dataclass
class TransitionMatrix:
    counts: np.ndarray       # C x C int, rows = true class
    normalized: np.ndarray   # row-stochastic; all-zero rows flagged below
    empty_rows: np.ndarray   # boolean mask of rows with zero count


def inject_symmetric(true_labels, spec: NoiseSpec, num_classes: int) -> np.ndarray:
    """Flip each label with probability ``spec.ratio`` to a uniformly random other class."""
    labels = np.asarray(true_labels, dtype=int)
    rng = np.random.default_rng(spec.seed)
    flip = rng.random(labels.shape[0]) < spec.ratio
    # uniform over the C-1 non-true classes: draw an offset in [1, C) and add mod C
    offsets = rng.integers(1, num_classes, size=labels.shape[0])
    noisy = labels.copy()
    noisy[flip] = (labels[flip] + offsets[flip]) % num_classes
    return noisy


def inject_asymmetric(true_labels, spec: NoiseSpec, num_classes: int) -> np.ndarray:
    """Flip each label with probability ``spec.ratio`` to the next class, cyclically."""
    labels = np.asarray(true_labels, dtype=int)
    rng = np.random.default_rng(spec.seed)
    flip = rng.random(labels.shape[0]) < spec.ratio
    noisy = labels.copy()
    noisy[flip] = (labels[flip] + 1) % num_classes
    return noisy


def inject_instance_dependent(
    features, true_labels, spec: NoiseSpec, num_classes: int
) -> np.ndarray:
    """Feature-driven noise: each instance flips to the non-true class whose random
    projection of its features is largest, with a per-instance rate q_i.

    The q_i are drawn from a normal with mean ``spec.ratio`` and std 0.1, truncated
    to [0, 1], then rescaled so the dataset-level expected flip rate is ratio.
    """
    x = np.asarray(features, dtype=float)
    labels = np.asarray(true_labels, dtype=int)
    if x.shape[0] != labels.shape[0]:
        raise DimensionMismatch(
            f"features ({x.shape[0]}) and labels ({labels.shape[0]}) differ in length"
        )
    n = labels.shape[0]
    if n == 0 or spec.ratio == 0.0:
        return labels.copy()
    rng = np.random.default_rng(spec.seed)
    rates = np.clip(rng.normal(spec.ratio, IDN_RATE_STD, size=n), 0.0, 1.0)
    mean_rate = rates.mean()
    if mean_rate > 0:
        rates = np.clip(rates * (spec.ratio / mean_rate), 0.0, 1.0)
    projections = x @ rng.normal(size=(x.shape[1], num_classes))  # N x C scores
    projections[np.arange(n), labels] = -np.inf
    targets = projections.argmax(axis=1)
    flip = rng.random(n) < rates
    noisy = labels.copy()
    noisy[flip] = targets[flip]
    return noisy


def inject(features, true_labels, spec: NoiseSpec, num_classes: int) -> np.ndarray:
    if spec.kind == "symmetric":
        return inject_symmetric(true_labels, spec, num_classes)
    if spec.kind == "asymmetric":
        return inject_asymmetric(true_labels, spec, num_classes)
    return inject_instance_dependent(features, true_labels, spec, num_classes)


def empirical_transition_matrix(
    true_labels, observed_labels, num_classes: int
) -> TransitionMatrix:
    """Count-based confusion matrix: rows index the true class, columns the observed."""
    t = np.asarray(true_labels, dtype=int)
    o = np.asarray(observed_labels, dtype=int)
    if t.shape != o.shape:
        raise LengthMismatch(f"length mismatch: {t.shape[0]} vs {o.shape[0]}")
    if t.size and (t.min() < 0 or t.max() >= num_classes or o.min() < 0 or o.max() >= num_classes):
        raise LabelOutOfRange(f"labels outside [0, {num_classes})")
    counts = np.zeros((num_classes, num_classes), dtype=int)
    np.add.at(counts, (t, o), 1)
    row_sums = counts.sum(axis=1)
    empty = row_sums == 0
    normalized = np.zeros((num_classes, num_classes), dtype=float)
    nonzero = ~empty
    normalized[nonzero] = counts[nonzero] / row_sums[nonzero, None]
    return TransitionMatrix(counts=counts, normalized=normalized, empty_rows=empty)


def noise_ratio(true_labels, observed_labels) -> float:
    """Fraction of positions where the two label sequences differ."""
    t = np.asarray(true_labels)
    o = np.asarray(observed_labels)
    if t.shape != o.shape:
        raise LengthMismatch(f"length mismatch: {t.shape[0]} vs {o.shape[0]}")
    if t.size == 0:
        return 0.0
    return float(np.mean(t != o))
