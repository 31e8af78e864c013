"""End-to-end pipeline: ingest -> (noise) -> classifier -> candidates ->
diffusion -> calibrate -> evaluate, with every intermediate artifact persisted
under a stage directory named by the stage and a hash of the configuration."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import data as dio
from .calibration import (
    CalibrationConfig,
    EvalReport,
    aggregate_reports,
    calibrate_batch,
    corrected_uncertain_ratio,
    evaluate_labels,
)
from .candidates import CandidateSet, RetrievalConfig, retrieve_candidates
from .classifier import TrainConfig, noisy_marker, train_with_dynamics
from .diffusion import DiffusionSchedule, DistillConfig, distill_train
from .noise import NoiseSpec, inject


@dataclass
class PipelineConfig:
    dataset: str
    out_dir: str
    noise: NoiseSpec | None = None
    classifier: TrainConfig = field(default_factory=TrainConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    sigma: float = 0.5
    schedule_T: int = 800
    schedule_k: float = 5.0
    schedule_offset: float = 0.008
    distill: DistillConfig = field(default_factory=DistillConfig)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    trajectory_stat: str = "mean"

    def __post_init__(self):
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError(f"sigma must be in [0, 1], got {self.sigma}")

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        return out

    @staticmethod
    def from_dict(raw: dict) -> "PipelineConfig":
        noise = NoiseSpec(**raw["noise"]) if raw.get("noise") else None
        return PipelineConfig(
            dataset=raw["dataset"],
            out_dir=raw.get("out_dir", "runs"),
            noise=noise,
            classifier=TrainConfig(**raw.get("classifier", {})),
            retrieval=RetrievalConfig(**raw.get("retrieval", {})),
            sigma=raw.get("sigma", 0.5),
            schedule_T=raw.get("schedule_T", 800),
            schedule_k=raw.get("schedule_k", 5.0),
            schedule_offset=raw.get("schedule_offset", 0.008),
            distill=DistillConfig(**raw.get("distill", {})),
            calibration=CalibrationConfig(**raw.get("calibration", {})),
            trajectory_stat=raw.get("trajectory_stat", "mean"),
        )


def load_pipeline_config(path: str) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        return PipelineConfig.from_dict(json.load(fh))


def config_hash(config: PipelineConfig) -> str:
    canon = json.dumps(config.to_dict(), sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def split_arrays(manifest: dio.DatasetManifest, records: list[dio.SampleRecord]):
    """Group records by split into (ids, features, noisy, true) arrays."""
    out = {}
    for split in dio.SPLITS:
        recs = [r for r in records if r.split == split]
        ids = [r.id for r in recs]
        x = np.array([r.features for r in recs], dtype=float).reshape(
            len(recs), manifest.feature_dim
        )
        noisy = np.array(
            [r.noisy_label if r.noisy_label is not None else -1 for r in recs], dtype=int
        )
        has_true = all(r.true_label is not None for r in recs) and recs
        true = (
            np.array([r.true_label for r in recs], dtype=int) if has_true else None
        )
        out[split] = (ids, x, noisy, true)
    return out


def save_candidates(sets: list[CandidateSet], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for cs in sets:
            fh.write(json.dumps({
                "sample_id": cs.sample_id,
                "kind": cs.kind,
                "candidates": [[label, weight] for label, weight in cs.candidates],
                "noisy_label": cs.noisy_label,
            }))
            fh.write("\n")


def load_candidates(path: str) -> list[CandidateSet]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            out.append(CandidateSet(
                sample_id=obj["sample_id"],
                kind=obj["kind"],
                candidates=[(int(c), float(w)) for c, w in obj["candidates"]],
                noisy_label=obj["noisy_label"],
            ))
    return out


def write_transition_csv(matrix: np.ndarray, path: str) -> None:
    np.savetxt(path, matrix, delimiter=",", fmt="%.10g")


def report_text(report: EvalReport) -> str:
    lines = [
        "metric                        value",
        "-----------------------------------",
        f"calibrated accuracy   {report.accuracy_mean:.4f} +/- {report.accuracy_std:.4f}",
        f"classifier accuracy   {report.classifier_accuracy_mean:.4f} +/- "
        f"{report.classifier_accuracy_std:.4f}",
        f"corrected vs classifier        {report.corrected_vs_classifier:.4f}",
        f"corrected vs noisy labels      {report.corrected_vs_noisy:.4f}",
        f"corrected uncertain ratio      {report.corrected_uncertain_ratio:.4f}",
    ]
    return "\n".join(lines) + "\n"


def save_report(report: EvalReport, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report_text(report))
    write_transition_csv(report.transition_before.normalized,
                         os.path.join(out_dir, "transition_before.csv"))
    write_transition_csv(report.transition_after.normalized,
                         os.path.join(out_dir, "transition_after.csv"))


def run_single_seed(config: PipelineConfig, seed: int, stage_dir: str | None = None):
    """One pipeline pass under a fixed seed. Returns the per-seed metric dict
    plus the initial and refined candidate sets (for distillation statistics)."""
    manifest, records, _ = dio.load_dataset(config.dataset)
    num_classes = manifest.num_classes

    records = dio.resolve_missing_labels(records, seed, num_classes)
    splits = split_arrays(manifest, records)
    if config.noise is not None:
        spec = NoiseSpec(config.noise.kind, config.noise.ratio, config.noise.seed + seed)
        new_records = []
        for rec in records:
            new_records.append(rec)
        for split in ("train", "valid"):
            ids, x, noisy, true = splits[split]
            base = true if true is not None else noisy
            corrupted = inject(x, base, spec, num_classes)
            by_id = dict(zip(ids, corrupted))
            new_records = [
                dataclasses.replace(
                    r, noisy_label=int(by_id[r.id]),
                    true_label=r.true_label if r.true_label is not None else r.noisy_label,
                ) if r.id in by_id else r
                for r in new_records
            ]
        records = new_records
        splits = split_arrays(manifest, records)

    cls_config = dataclasses.replace(config.classifier, seed=seed)
    ensemble = train_with_dynamics(
        {s: splits[s][1] for s in dio.SPLITS},
        {s: splits[s][2] for s in dio.SPLITS},
        {s: splits[s][0] for s in dio.SPLITS},
        num_classes, cls_config,
    )

    train_ids, train_x, train_noisy, train_true = splits["train"]
    train_dyn = ensemble.dynamics["train"]  # (N, E, C)
    mask = noisy_marker(train_dyn, train_noisy, config.sigma, num_classes,
                        ids=train_ids, stat=config.trajectory_stat)

    if config.retrieval.feature_space == "dynamics":
        retrieval_features = train_dyn.reshape(train_dyn.shape[0], -1)
    else:
        retrieval_features = train_x
    initial_sets = retrieve_candidates(
        retrieval_features, train_noisy, mask, train_ids, num_classes, config.retrieval
    )

    schedule = DiffusionSchedule(config.schedule_T, config.schedule_k,
                                 config.schedule_offset)
    distill_config = dataclasses.replace(config.distill, seed=seed)
    valid_dyn = ensemble.dynamics["valid"].reshape(len(splits["valid"][0]), -1)
    # condition validation on the classifier's own predictions, not the noisy
    # labels: conditioning on the label being scored rewards nets that merely
    # echo their conditioning input
    valid_pred = ensemble.dynamics["valid"][:, ensemble.selected_epoch].argmax(axis=1)
    result = distill_train(
        initial_sets,
        train_dyn.reshape(train_dyn.shape[0], -1),
        train_noisy,
        num_classes,
        schedule,
        distill_config,
        valid_x_dyn=valid_dyn,
        valid_cond_labels=valid_pred,
        valid_noisy_labels=splits["valid"][2],
    )

    test_ids, test_x, test_noisy, test_true = splits["test"]
    test_dyn = ensemble.dynamics["test"].reshape(len(test_ids), -1)
    prior = np.stack([
        ensemble.dynamics["test"][i, ensemble.selected_epoch]
        for i in range(len(test_ids))
    ])
    rng = np.random.default_rng(seed + 1_000_003)
    calibrated = calibrate_batch(
        prior, result.selected_nets, test_dyn, schedule, config.calibration, rng
    )
    metrics = evaluate_labels(
        test_true,
        calibrated.argmax(axis=1),
        prior.argmax(axis=1),
        test_noisy if np.all(test_noisy >= 0) else None,
        num_classes,
    )

    if stage_dir is not None:
        seed_dir = os.path.join(stage_dir, f"seed-{seed}")
        os.makedirs(seed_dir, exist_ok=True)
        save_candidates(initial_sets, os.path.join(seed_dir, "candidates_initial.jsonl"))
        save_candidates(result.refined, os.path.join(seed_dir, "candidates_refined.jsonl"))
        dyn_records = [
            dio.DynamicsRecord(id=sid, trajectory=train_dyn[i].tolist())
            for i, sid in enumerate(train_ids)
        ]
        with open(os.path.join(seed_dir, "dynamics.train.jsonl"), "w",
                  encoding="utf-8") as fh:
            for dr in dyn_records:
                fh.write(json.dumps({"id": dr.id, "trajectory": dr.trajectory}))
                fh.write("\n")
    return metrics, initial_sets, result.refined, train_true


def run_pipeline(config: PipelineConfig) -> EvalReport:
    digest = config_hash(config)
    run_dir = os.path.join(config.out_dir, f"run-{digest}")
    os.makedirs(run_dir, exist_ok=True)
    with open(os.path.join(run_dir, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    per_seed = []
    ratios = []
    for seed in config.calibration.seeds:
        metrics, initial_sets, refined_sets, train_true = run_single_seed(
            config, seed, stage_dir=run_dir
        )
        per_seed.append(metrics)
        if train_true is not None:
            ratios.append(corrected_uncertain_ratio(initial_sets, refined_sets, train_true))
    report = aggregate_reports(per_seed, float(np.mean(ratios)) if ratios else 0.0)
    save_report(report, run_dir)
    return report
