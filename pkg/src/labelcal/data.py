"""On-disk dataset format shared by every pipeline stage.

A dataset directory contains:

  manifest.json            global metadata (num_classes, feature_dim, ...)
  train.jsonl / valid.jsonl / test.jsonl
                           one sample record per line
  dynamics.<split>.jsonl   optional per-sample training trajectories

Floats go through Python's json module, which emits shortest round-trip
decimal strings, so save -> load is bit-exact.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CountMismatch,
    FeatureDimMismatch,
    InvariantViolation,
    IoFailure,
    MalformedManifest,
    OrphanDynamics,
)

FORMAT_VERSION = "1"
SPLITS = ("train", "valid", "test")

MANIFEST_FILE = "manifest.json"

# noisy_label may be None (MISSING) before missing-label resolution;
# true_label may be None (absent) on purely noisy data.


@dataclass
class DatasetManifest:
    num_classes: int
    feature_dim: int
    class_names: list[str]
    splits: dict[str, int]
    dynamics_epochs: int = 0
    format_version: str = FORMAT_VERSION

    def validate(self) -> None:
        if self.num_classes < 2:
            raise MalformedManifest(f"num_classes must be >= 2, got {self.num_classes}")
        if self.feature_dim < 1:
            raise MalformedManifest(f"feature_dim must be >= 1, got {self.feature_dim}")
        if len(self.class_names) != self.num_classes:
            raise MalformedManifest(
                f"expected {self.num_classes} class names, got {len(self.class_names)}"
            )
        if len(set(self.class_names)) != self.num_classes:
            raise MalformedManifest("class_names must be distinct")
        if self.dynamics_epochs < 0:
            raise MalformedManifest("dynamics_epochs must be non-negative")
        for split in self.splits:
            if split not in SPLITS:
                raise MalformedManifest(f"unknown split {split!r}")


@dataclass
class SampleRecord:
    id: str
    features: list[float]
    noisy_label: int | None
    true_label: int | None
    split: str

    def validate(self, manifest: DatasetManifest) -> None:
        if len(self.features) != manifest.feature_dim:
            raise FeatureDimMismatch(
                f"record {self.id!r}: features length {len(self.features)} != "
                f"feature_dim {manifest.feature_dim}"
            )
        for label in (self.noisy_label, self.true_label):
            if label is not None and not 0 <= label < manifest.num_classes:
                raise InvariantViolation(
                    f"record {self.id!r}: label {label} outside [0, {manifest.num_classes})"
                )
        if self.split not in SPLITS:
            raise InvariantViolation(f"record {self.id!r}: unknown split {self.split!r}")


@dataclass
class DynamicsRecord:
    id: str
    trajectory: list[list[float]] = field(repr=False)

    def validate(self, manifest: DatasetManifest) -> None:
        traj = np.asarray(self.trajectory, dtype=float)
        if traj.ndim != 2 or traj.shape != (manifest.dynamics_epochs, manifest.num_classes):
            raise InvariantViolation(
                f"dynamics {self.id!r}: trajectory shape {traj.shape} != "
                f"({manifest.dynamics_epochs}, {manifest.num_classes})"
            )
        if np.any(traj < 0) or np.any(traj > 1):
            raise InvariantViolation(f"dynamics {self.id!r}: entries outside [0, 1]")
        if np.any(np.abs(traj.sum(axis=1) - 1.0) > 1e-6):
            raise InvariantViolation(f"dynamics {self.id!r}: rows do not sum to 1")


def _validate_dataset(
    manifest: DatasetManifest,
    records: list[SampleRecord],
    dynamics: list[DynamicsRecord] | None,
) -> None:
    manifest.validate()
    ids = set()
    per_split: dict[str, int] = {s: 0 for s in SPLITS}
    for rec in records:
        rec.validate(manifest)
        if rec.id in ids:
            raise InvariantViolation(f"duplicate record id {rec.id!r}")
        ids.add(rec.id)
        per_split[rec.split] += 1
    for split, count in manifest.splits.items():
        if per_split.get(split, 0) != count:
            raise CountMismatch(
                f"split {split!r}: manifest declares {count} records, found "
                f"{per_split.get(split, 0)}"
            )
    if dynamics:
        seen = set()
        for dyn in dynamics:
            dyn.validate(manifest)
            if dyn.id not in ids:
                raise OrphanDynamics(f"dynamics id {dyn.id!r} has no matching record")
            if dyn.id in seen:
                raise InvariantViolation(f"duplicate dynamics id {dyn.id!r}")
            seen.add(dyn.id)


def save_dataset(
    manifest: DatasetManifest,
    records: list[SampleRecord],
    dynamics: list[DynamicsRecord] | None,
    path: str,
) -> None:
    """Write a dataset directory; ``load_dataset`` reproduces the inputs bit-exactly.

    Record order within each split is preserved; splits come back in the
    canonical train/valid/test order.
    """
    _validate_dataset(manifest, records, dynamics)
    try:
        os.makedirs(path, exist_ok=True)
        with open(os.path.join(path, MANIFEST_FILE), "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "num_classes": manifest.num_classes,
                    "feature_dim": manifest.feature_dim,
                    "class_names": manifest.class_names,
                    "splits": manifest.splits,
                    "dynamics_epochs": manifest.dynamics_epochs,
                    "format_version": manifest.format_version,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
        by_split: dict[str, list[SampleRecord]] = {s: [] for s in SPLITS}
        for rec in records:
            by_split[rec.split].append(rec)
        for split, count in manifest.splits.items():
            with open(os.path.join(path, f"{split}.jsonl"), "w", encoding="utf-8") as fh:
                for rec in by_split[split]:
                    fh.write(
                        json.dumps(
                            {
                                "id": rec.id,
                                "features": rec.features,
                                "noisy_label": rec.noisy_label,
                                "true_label": rec.true_label,
                                "split": rec.split,
                            }
                        )
                    )
                    fh.write("\n")
        if dynamics:
            by_split_dyn: dict[str, list[DynamicsRecord]] = {s: [] for s in SPLITS}
            split_of = {rec.id: rec.split for rec in records}
            for dyn in dynamics:
                by_split_dyn[split_of[dyn.id]].append(dyn)
            for split, dyns in by_split_dyn.items():
                if not dyns:
                    continue
                fname = os.path.join(path, f"dynamics.{split}.jsonl")
                with open(fname, "w", encoding="utf-8") as fh:
                    for dyn in dyns:
                        fh.write(json.dumps({"id": dyn.id, "trajectory": dyn.trajectory}))
                        fh.write("\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def load_dataset(
    path: str,
) -> tuple[DatasetManifest, list[SampleRecord], list[DynamicsRecord] | None]:
    """Read and validate a dataset directory."""
    manifest_path = os.path.join(path, MANIFEST_FILE)
    try:
        with open(manifest_path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read {manifest_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedManifest(f"{manifest_path}: {exc}") from exc
    try:
        manifest = DatasetManifest(
            num_classes=raw["num_classes"],
            feature_dim=raw["feature_dim"],
            class_names=list(raw["class_names"]),
            splits={k: int(v) for k, v in raw["splits"].items()},
            dynamics_epochs=raw.get("dynamics_epochs", 0),
            format_version=raw.get("format_version", FORMAT_VERSION),
        )
    except (KeyError, TypeError) as exc:
        raise MalformedManifest(f"{manifest_path}: missing field {exc}") from exc

    records: list[SampleRecord] = []
    for split in (s for s in SPLITS if s in manifest.splits):
        fname = os.path.join(path, f"{split}.jsonl")
        try:
            with open(fname, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    obj = json.loads(line)
                    records.append(
                        SampleRecord(
                            id=obj["id"],
                            features=obj["features"],
                            noisy_label=obj["noisy_label"],
                            true_label=obj.get("true_label"),
                            split=obj.get("split", split),
                        )
                    )
        except OSError as exc:
            raise IoFailure(f"cannot read {fname}: {exc}") from exc

    dynamics: list[DynamicsRecord] = []
    for split in SPLITS:
        fname = os.path.join(path, f"dynamics.{split}.jsonl")
        if not os.path.exists(fname):
            continue
        try:
            with open(fname, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    obj = json.loads(line)
                    dynamics.append(DynamicsRecord(id=obj["id"], trajectory=obj["trajectory"]))
        except OSError as exc:
            raise IoFailure(f"cannot read {fname}: {exc}") from exc

    _validate_dataset(manifest, records, dynamics or None)
    return manifest, records, (dynamics or None)


def resolve_missing_labels(
    records: list[SampleRecord], rng_seed: int, num_classes: int
) -> list[SampleRecord]:
    """Assign uniformly random labels to train/valid records whose noisy label is missing.

    Test records are never touched; records without missing labels pass through
    unchanged. Deterministic given the seed and idempotent.
    """
    rng = np.random.default_rng(rng_seed)
    out = []
    for rec in records:
        if rec.noisy_label is None and rec.split in ("train", "valid"):
            label = int(rng.integers(0, num_classes))
            out.append(
                SampleRecord(
                    id=rec.id,
                    features=rec.features,
                    noisy_label=label,
                    true_label=rec.true_label,
                    split=rec.split,
                )
            )
        else:
            out.append(rec)
    return out
