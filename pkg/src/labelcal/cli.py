"""Command-line entry point. Every pipeline stage is independently invocable
on persisted artifacts; ``run`` executes them all. Stage logs go to standard
error as JSON lines."""

from __future__ import annotations

import dataclasses
import itertools
import json
import os
import sys

import click
import numpy as np

from . import data as dio
from .calibration import CalibrationConfig
from .classifier import TrainConfig, noisy_marker, train_with_dynamics
from .candidates import RetrievalConfig, retrieve_candidates
from .diffusion import DiffusionSchedule, DistillConfig, distill_train
from .errors import LabelcalError
from .models import load_denoiser, load_ensemble, save_denoiser, save_ensemble
from .noise import NoiseSpec, inject
from .pipeline import (
    PipelineConfig,
    load_candidates,
    load_pipeline_config,
    run_pipeline,
    save_candidates,
    save_report,
    split_arrays,
)

NOISE_KIND_ALIASES = {"sn": "symmetric", "asn": "asymmetric", "idn": "instance_dependent"}


def log_stage(stage: str, **fields) -> None:
    print(json.dumps({"stage": stage, **fields}, sort_keys=True), file=sys.stderr)


@click.group()
def main():
    """Noisy-label calibration pipeline."""


@main.command()
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
def ingest(in_dir, out_dir, seed):
    """Validate a dataset directory, resolve missing labels, and rewrite it."""
    manifest, records, dynamics = dio.load_dataset(in_dir)
    records = dio.resolve_missing_labels(records, seed, manifest.num_classes)
    dio.save_dataset(manifest, records, dynamics, out_dir)
    log_stage("ingest", records=len(records), out=out_dir)


@main.command()
@click.option("--kind", type=click.Choice(sorted(NOISE_KIND_ALIASES)), required=True)
@click.option("--ratio", type=float, required=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def noise(kind, ratio, seed, in_dir, out_dir):
    """Corrupt train/valid labels; true_label keeps the original label."""
    manifest, records, dynamics = dio.load_dataset(in_dir)
    spec = NoiseSpec(NOISE_KIND_ALIASES[kind], ratio, seed)
    splits = split_arrays(manifest, records)
    corrupted_by_id = {}
    for split in ("train", "valid"):
        ids, x, noisy, true = splits[split]
        if not ids:
            continue
        base = true if true is not None else noisy
        noisy_new = inject(x, base, spec, manifest.num_classes)
        corrupted_by_id.update(zip(ids, noisy_new.tolist()))
    out_records = []
    for rec in records:
        if rec.id in corrupted_by_id:
            out_records.append(dataclasses.replace(
                rec,
                noisy_label=corrupted_by_id[rec.id],
                true_label=rec.true_label if rec.true_label is not None else rec.noisy_label,
            ))
        else:
            out_records.append(rec)
    dio.save_dataset(manifest, out_records, dynamics, out_dir)
    log_stage("noise", kind=spec.kind, ratio=ratio, out=out_dir)


@main.command("train-classifier")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
def train_classifier(config_path, in_dir, out_dir, seed):
    """Train the co-regularized ensemble and write dynamics + model files."""
    cfg = TrainConfig(seed=seed)
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            cfg = TrainConfig(**{**json.load(fh), "seed": seed})
    manifest, records, _ = dio.load_dataset(in_dir)
    splits = split_arrays(manifest, records)
    ensemble = train_with_dynamics(
        {s: splits[s][1] for s in dio.SPLITS},
        {s: splits[s][2] for s in dio.SPLITS},
        {s: splits[s][0] for s in dio.SPLITS},
        manifest.num_classes, cfg,
    )
    os.makedirs(out_dir, exist_ok=True)
    manifest_out = dataclasses.replace(manifest, dynamics_epochs=cfg.epochs)
    dynamics = [
        dio.DynamicsRecord(id=sid, trajectory=ensemble.dynamics[split][i].tolist())
        for split in dio.SPLITS
        for i, sid in enumerate(ensemble.dynamics_ids[split])
    ]
    dio.save_dataset(manifest_out, records, dynamics, out_dir)
    save_ensemble(ensemble, os.path.join(out_dir, "classifier.npz"))
    with open(os.path.join(out_dir, "valid_curve.json"), "w", encoding="utf-8") as fh:
        json.dump({
            "epoch_valid_accuracy": ensemble.epoch_valid_accuracy,
            "selected_epoch": ensemble.selected_epoch,
        }, fh, indent=2, sort_keys=True)
    log_stage("train-classifier", selected_epoch=ensemble.selected_epoch,
              valid_accuracy=ensemble.epoch_valid_accuracy[ensemble.selected_epoch])


@main.command("retrieve-candidates")
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--lambda", "lam", default=0.9, show_default=True)
@click.option("--gamma", default=0.8, show_default=True)
@click.option("--k", "-K", "k_neighbors", default=10, show_default=True)
@click.option("--sigma", default=0.5, show_default=True)
@click.option("--feature-space", type=click.Choice(["dynamics", "raw_features"]),
              default="dynamics", show_default=True)
def retrieve_candidates_cmd(in_dir, out_path, lam, gamma, k_neighbors, sigma,
                            feature_space):
    """Build per-sample candidate sets from the train split's dynamics."""
    manifest, records, dynamics = dio.load_dataset(in_dir)
    splits = split_arrays(manifest, records)
    ids, x, noisy, _ = splits["train"]
    dyn_by_id = {d.id: np.asarray(d.trajectory) for d in (dynamics or [])}
    train_dyn = np.stack([dyn_by_id[i] for i in ids])
    mask = noisy_marker(train_dyn, noisy, sigma, manifest.num_classes, ids=ids)
    config = RetrievalConfig(K=k_neighbors, lam=lam, gamma=gamma,
                             feature_space=feature_space)
    features = (train_dyn.reshape(len(ids), -1)
                if feature_space == "dynamics" else x)
    sets = retrieve_candidates(features, noisy, mask, ids, manifest.num_classes, config)
    save_candidates(sets, out_path)
    certain = sum(cs.kind == "certain" for cs in sets)
    log_stage("retrieve-candidates", certain=certain, uncertain=len(sets) - certain)


@main.command("train-diffusion")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--candidates", "candidates_path", required=True,
              type=click.Path(exists=True))
@click.option("--dynamics", "dynamics_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--train-timesteps", "timesteps", default=800, show_default=True)
@click.option("--simplex-k", default=5.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
def train_diffusion(config_path, candidates_path, dynamics_dir, out_dir,
                    timesteps, simplex_k, seed):
    """Train the M-branch denoiser with candidate distillation."""
    cfg = DistillConfig(seed=seed)
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            cfg = DistillConfig(**{**json.load(fh), "seed": seed})
    manifest, records, dynamics = dio.load_dataset(dynamics_dir)
    splits = split_arrays(manifest, records)
    ids, _, noisy, _ = splits["train"]
    dyn_by_id = {d.id: np.asarray(d.trajectory) for d in (dynamics or [])}
    x_dyn = np.stack([dyn_by_id[i].reshape(-1) for i in ids])
    sets = load_candidates(candidates_path)
    schedule = DiffusionSchedule(timesteps, simplex_k)
    result = distill_train(sets, x_dyn, noisy, manifest.num_classes, schedule, cfg)
    os.makedirs(out_dir, exist_ok=True)
    save_denoiser(result.selected_nets, schedule, os.path.join(out_dir, "denoiser.npz"))
    save_candidates(result.refined, os.path.join(out_dir, "candidates_refined.jsonl"))
    log_stage("train-diffusion", selected_epoch=result.selected_epoch)


@main.command()
@click.option("--classifier", "classifier_path", required=True,
              type=click.Path(exists=True))
@click.option("--denoiser", "denoiser_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--split", default="test", show_default=True)
@click.option("--mode", type=click.Choice(["argmax_condition", "marginal_condition"]),
              default="argmax_condition", show_default=True)
@click.option("--inference-timesteps", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
def calibrate(classifier_path, denoiser_path, out_path, split, mode,
              inference_timesteps, seed):
    """Refine a split's labels with the trained prior + posterior pair."""
    from .calibration import calibrate_batch

    ensemble = load_ensemble(classifier_path)
    nets, schedule = load_denoiser(denoiser_path)
    dyn = ensemble.dynamics[split]
    prior = dyn[:, ensemble.selected_epoch, :]
    config = CalibrationConfig(mode=mode, inference_timesteps=inference_timesteps)
    rng = np.random.default_rng(seed)
    probs = calibrate_batch(prior, nets, dyn.reshape(dyn.shape[0], -1),
                            schedule, config, rng)
    with open(out_path, "w", encoding="utf-8") as fh:
        for sid, p in zip(ensemble.dynamics_ids[split], probs):
            fh.write(json.dumps({"id": sid, "probs": p.tolist(),
                                 "label": int(p.argmax())}))
            fh.write("\n")
    log_stage("calibrate", split=split, samples=probs.shape[0])


@main.command()
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True))
@click.option("--calibrated", "calibrated_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def evaluate(in_dir, calibrated_path, out_dir):
    """Score calibrated labels against the clean test split."""
    from .calibration import aggregate_reports, evaluate_labels

    manifest, records, _ = dio.load_dataset(in_dir)
    splits = split_arrays(manifest, records)
    ids, _, noisy, true = splits["test"]
    labels_by_id = {}
    with open(calibrated_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                labels_by_id[obj["id"]] = obj["label"]
    calibrated = np.array([labels_by_id[i] for i in ids])
    metrics = evaluate_labels(true, calibrated, calibrated,
                              noisy if np.all(noisy >= 0) else None,
                              manifest.num_classes)
    report = aggregate_reports([metrics], 0.0)
    save_report(report, out_dir)
    log_stage("evaluate", accuracy=metrics["accuracy"])


@main.command()
@click.option("--run-dir", required=True, type=click.Path(exists=True))
def report(run_dir):
    """Regenerate the text table and CSV grids from an existing report.json."""
    from .pipeline import report_text, write_transition_csv

    with open(os.path.join(run_dir, "report.json"), encoding="utf-8") as fh:
        raw = json.load(fh)
    from .calibration import EvalReport
    from .noise import TransitionMatrix

    def as_tm(rows):
        arr = np.asarray(rows, dtype=float)
        return TransitionMatrix(counts=np.zeros_like(arr, dtype=int), normalized=arr,
                                empty_rows=arr.sum(axis=1) == 0)

    rep = EvalReport(
        accuracy_mean=raw["accuracy_mean"],
        accuracy_std=raw["accuracy_std"],
        classifier_accuracy_mean=raw["classifier_accuracy_mean"],
        classifier_accuracy_std=raw["classifier_accuracy_std"],
        corrected_vs_classifier=raw["corrected_vs_classifier"],
        corrected_vs_noisy=raw["corrected_vs_noisy"],
        corrected_uncertain_ratio=raw["corrected_uncertain_ratio"],
        transition_before=as_tm(raw["transition_before"]),
        transition_after=as_tm(raw["transition_after"]),
        per_seed=raw["per_seed"],
    )
    with open(os.path.join(run_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report_text(rep))
    write_transition_csv(rep.transition_before.normalized,
                         os.path.join(run_dir, "transition_before.csv"))
    write_transition_csv(rep.transition_after.normalized,
                         os.path.join(run_dir, "transition_after.csv"))
    log_stage("report", run_dir=run_dir)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def run(config_path):
    """Run the full pipeline from a JSON config."""
    config = load_pipeline_config(config_path)
    rep = run_pipeline(config)
    log_stage("run", accuracy_mean=rep.accuracy_mean,
              classifier_accuracy_mean=rep.classifier_accuracy_mean)
    click.echo(json.dumps(rep.to_dict(), indent=2, sort_keys=True))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--grid", "grid_path", required=True, type=click.Path(exists=True))
def grid(config_path, grid_path):
    """Fan out run_pipeline over a grid of hyperparameter overrides.

    The grid file maps dotted config paths (e.g. "retrieval.lam") to lists of
    values; all combinations are run.
    """
    with open(config_path, encoding="utf-8") as fh:
        base = json.load(fh)
    with open(grid_path, encoding="utf-8") as fh:
        axes = json.load(fh)
    keys = sorted(axes)
    results = []
    for values in itertools.product(*(axes[k] for k in keys)):
        overrides = dict(zip(keys, values))
        raw = json.loads(json.dumps(base))
        for dotted, value in overrides.items():
            node = raw
            parts = dotted.split(".")
            for part in parts[:-1]:
                node = node.setdefault(part, {})
            node[parts[-1]] = value
        config = PipelineConfig.from_dict(raw)
        rep = run_pipeline(config)
        log_stage("grid", overrides=overrides, accuracy_mean=rep.accuracy_mean)
        results.append({"overrides": overrides, "accuracy_mean": rep.accuracy_mean})
    click.echo(json.dumps(results, indent=2, sort_keys=True))


def entrypoint():
    try:
        main(standalone_mode=True)
    except LabelcalError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        sys.exit(2)


if __name__ == "__main__":
    entrypoint()
