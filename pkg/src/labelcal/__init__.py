"""Noisy-label calibration toolkit: k-NN label candidate retrieval over
training dynamics plus simplex label diffusion with candidate distillation."""

from .calibration import CalibrationConfig, EvalReport, calibrate, calibrate_batch
from .candidates import CandidateSet, RetrievalConfig, retrieve_candidates
from .classifier import TrainConfig, TrainedEnsemble, predict_proba, train_with_dynamics
from .data import (
    DatasetManifest,
    DynamicsRecord,
    SampleRecord,
    load_dataset,
    resolve_missing_labels,
    save_dataset,
)
from .diffusion import (
    DenoiserNet,
    DiffusionSchedule,
    DistillConfig,
    distill_train,
    forward_sample,
    infer_reverse,
    project_argmax,
    to_k_logit,
)
from .noise import NoiseSpec, empirical_transition_matrix, inject, noise_ratio
from .pipeline import PipelineConfig, run_pipeline

__all__ = [
    "CalibrationConfig",
    "CandidateSet",
    "DatasetManifest",
    "DenoiserNet",
    "DiffusionSchedule",
    "DistillConfig",
    "DynamicsRecord",
    "EvalReport",
    "NoiseSpec",
    "PipelineConfig",
    "RetrievalConfig",
    "SampleRecord",
    "TrainConfig",
    "TrainedEnsemble",
    "calibrate",
    "calibrate_batch",
    "distill_train",
    "empirical_transition_matrix",
    "forward_sample",
    "infer_reverse",
    "inject",
    "load_dataset",
    "noise_ratio",
    "predict_proba",
    "project_argmax",
    "resolve_missing_labels",
    "retrieve_candidates",
    "run_pipeline",
    "save_dataset",
    "to_k_logit",
    "train_with_dynamics",
]

__version__ = "0.1.0"
