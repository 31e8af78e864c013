"""Per-sample true-label candidate retrieval.

Clean-marked samples form a k-NN reference labeled by their noisy labels.
Every sample queries that reference; the neighborhood label distribution is
thresholded into a *certain* prior (one dominant label) or an *uncertain*
prior (two dominant labels, or the full non-zero list).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyCleanSet, KTooLarge


@dataclass
class RetrievalConfig:
    K: int = 10
    lam: float = 0.9            # certainty threshold
    gamma: float = 0.8          # dominance threshold
    feature_space: str = "dynamics"          # or "raw_features"
    distance_weighting: str = "uniform"      # or "inverse_distance"

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not (0.0 <= self.lam <= 1.0 and 0.0 <= self.gamma <= 1.0):
            raise ValueError("lambda and gamma must lie in [0, 1]")
        if self.feature_space not in ("dynamics", "raw_features"):
            raise ValueError(f"unknown feature space {self.feature_space!r}")
        if self.distance_weighting not in ("uniform", "inverse_distance"):
            raise ValueError(f"unknown weighting {self.distance_weighting!r}")


@dataclass
class CandidateSet:
    sample_id: str
    kind: str                               # "certain" or "uncertain"
    candidates: list[tuple[int, float]]     # (label, weight), weights sum to 1
    noisy_label: int

    def labels(self) -> list[int]:
        return [label for label, _ in self.candidates]

    def argmax_label(self) -> int:
        return max(self.candidates, key=lambda lw: lw[1])[0]


def knn_label_distribution(
    query_features: np.ndarray,
    clean_features: np.ndarray,
    clean_labels: np.ndarray,
    num_classes: int,
    config: RetrievalConfig,
    exclude: int | None = None,
) -> np.ndarray:
    """Label distribution over the K Euclidean nearest clean neighbors.

    ``exclude`` removes one reference index (a query that is itself part of
    the clean set must not count itself). Distance ties break toward the
    smaller reference index.
    """
    if clean_features.shape[0] == 0:
        raise EmptyCleanSet("clean reference set is empty")
    available = clean_features.shape[0] - (1 if exclude is not None else 0)
    if config.K > available:
        raise KTooLarge(f"K={config.K} exceeds {available} available clean samples")
    dists = np.linalg.norm(clean_features - query_features[None, :], axis=1)
    if exclude is not None:
        dists = dists.copy()
        dists[exclude] = np.inf
    # stable sort on distance keeps index order among exact ties
    neighbors = np.argsort(dists, kind="stable")[: config.K]
    p = np.zeros(num_classes)
    if config.distance_weighting == "uniform":
        np.add.at(p, clean_labels[neighbors], 1.0)
    else:
        with np.errstate(divide="ignore"):
            w = 1.0 / dists[neighbors]
        if np.any(np.isinf(w)):  # exact-match neighbors dominate
            w = np.isinf(w).astype(float)
        np.add.at(p, clean_labels[neighbors], w)
    return p / p.sum()


def candidate_set_from_distribution(
    sample_id: str, p: np.ndarray, noisy_label: int, config: RetrievalConfig
) -> CandidateSet:
    """Threshold a neighborhood label distribution into a certain or uncertain prior."""
    order = np.argsort(-p, kind="stable")  # descending, ties toward smaller label
    top = order[0]
    if p[top] >= config.lam:
        return CandidateSet(sample_id, "certain", [(int(top), 1.0)], noisy_label)
    second = order[1]
    pair_mass = p[top] + p[second]
    if pair_mass >= config.gamma:
        cands = [(int(top), float(p[top] / pair_mass)),
                 (int(second), float(p[second] / pair_mass))]
        return CandidateSet(sample_id, "uncertain", cands, noisy_label)
    nonzero = [(int(c), float(p[c])) for c in order if p[c] > 0.0]
    total = sum(w for _, w in nonzero)
    cands = [(c, w / total) for c, w in nonzero]
    return CandidateSet(sample_id, "uncertain", cands, noisy_label)


def retrieve_candidates(
    features: np.ndarray,
    noisy_labels: np.ndarray,
    noisy_mask: np.ndarray,
    ids: list[str],
    num_classes: int,
    config: RetrievalConfig,
) -> list[CandidateSet]:
    """Build a candidate set for every sample.

    ``features`` is the configured retrieval space (flattened dynamics by
    default, raw inputs otherwise); ``noisy_mask`` comes from the trajectory
    marker. Clean-marked samples are the reference; each of them queries the
    reference with itself excluded.
    """
    features = np.asarray(features, dtype=float)
    noisy_labels = np.asarray(noisy_labels, dtype=int)
    clean_idx = np.flatnonzero(~np.asarray(noisy_mask, dtype=bool))
    if clean_idx.size == 0:
        raise EmptyCleanSet("noisy mask marks every sample as noisy")
    clean_features = features[clean_idx]
    clean_labels = noisy_labels[clean_idx]
    position_in_clean = {int(g): j for j, g in enumerate(clean_idx)}

    out = []
    for i in range(features.shape[0]):
        p = knn_label_distribution(
            features[i], clean_features, clean_labels, num_classes, config,
            exclude=position_in_clean.get(i),
        )
        out.append(candidate_set_from_distribution(ids[i], p, int(noisy_labels[i]), config))
    return out


def candidate_accuracy(candidate_sets: list[CandidateSet], true_labels,
                       mode: str = "argmax") -> float:
    """Fraction of samples whose candidate set matches the true label.

    argmax mode checks the maximum-weight candidate; contains mode checks
    membership in the candidate list (always at least as generous).
    """
    true_labels = np.asarray(true_labels, dtype=int)
    if len(candidate_sets) == 0:
        return 0.0
    if mode == "argmax":
        hits = sum(cs.argmax_label() == t for cs, t in zip(candidate_sets, true_labels))
    elif mode == "contains":
        hits = sum(int(t) in cs.labels() for cs, t in zip(candidate_sets, true_labels))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return hits / len(candidate_sets)
