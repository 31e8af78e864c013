import numpy as np
import pytest

from labelcal.data import DatasetManifest, SampleRecord


def gaussian_mixture(n, num_classes, dim, rng, spread=3.0, centers=None):
    """Well-separated class blobs: features and true labels."""
    if centers is None:
        centers = rng.normal(0, spread, (num_classes, dim))
    labels = rng.integers(0, num_classes, n)
    x = centers[labels] + rng.normal(0, 1.0, (n, dim))
    return x, labels


def make_dataset(n_train=200, n_valid=50, n_test=50, num_classes=3, dim=8,
                 noise_rate=0.3, seed=0, spread=3.0):
    """Manifest + records for a synthetic mixture with symmetric label noise.

    All splits share the same class centers so train and test are drawn from
    one distribution.
    """
    rng = np.random.default_rng(seed)
    centers = rng.normal(0, spread, (num_classes, dim))
    records = []
    counts = {"train": n_train, "valid": n_valid, "test": n_test}
    for split, n in counts.items():
        x, labels = gaussian_mixture(n, num_classes, dim, rng, spread, centers)
        flip = rng.random(n) < noise_rate
        offs = rng.integers(1, num_classes, n)
        noisy = np.where(flip, (labels + offs) % num_classes, labels)
        for i in range(n):
            records.append(SampleRecord(
                id=f"{split}-{i:05d}",
                features=[float(v) for v in x[i]],
                noisy_label=int(noisy[i]),
                true_label=int(labels[i]),
                split=split,
            ))
    manifest = DatasetManifest(
        num_classes=num_classes,
        feature_dim=dim,
        class_names=[f"class-{c}" for c in range(num_classes)],
        splits=counts,
    )
    return manifest, records


@pytest.fixture
def small_dataset():
    return make_dataset()
