"""npz-based persistence for trained models (classifier ensemble and the
M-branch denoiser), used by the CLI stages."""

from __future__ import annotations

import json
import os

import numpy as np

from .classifier import ClassifierParams, TrainedEnsemble
from .diffusion import DenoiserNet, DiffusionSchedule


def save_ensemble(ensemble: TrainedEnsemble, path: str) -> None:
    arrays = {}
    for e, branches in enumerate(ensemble.epoch_params):
        for b, params in enumerate(branches):
            for i, tensor in enumerate(params.tensors):
                arrays[f"ep{e}_b{b}_t{i}"] = tensor
    for split, dyn in ensemble.dynamics.items():
        arrays[f"dyn_{split}"] = dyn
    meta = {
        "epochs": len(ensemble.epoch_params),
        "branches": len(ensemble.branch_params),
        "tensors": len(ensemble.branch_params[0].tensors),
        "epoch_valid_accuracy": ensemble.epoch_valid_accuracy,
        "dynamics_ids": ensemble.dynamics_ids,
    }
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    np.savez_compressed(path, **arrays)


def load_ensemble(path: str) -> TrainedEnsemble:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        epoch_params = [
            [
                ClassifierParams([
                    data[f"ep{e}_b{b}_t{i}"] for i in range(meta["tensors"])
                ])
                for b in range(meta["branches"])
            ]
            for e in range(meta["epochs"])
        ]
        dynamics = {
            split: data[f"dyn_{split}"]
            for split in meta["dynamics_ids"]
            if f"dyn_{split}" in data
        }
    return TrainedEnsemble(
        branch_params=epoch_params[-1],
        epoch_params=epoch_params,
        dynamics=dynamics,
        dynamics_ids=meta["dynamics_ids"],
        epoch_valid_accuracy=meta["epoch_valid_accuracy"],
    )


def save_denoiser(nets: list[DenoiserNet], schedule: DiffusionSchedule, path: str) -> None:
    arrays = {}
    for b, net in enumerate(nets):
        for i, tensor in enumerate(net.tensors):
            arrays[f"b{b}_t{i}"] = tensor
    meta = {
        "branches": len(nets),
        "tensors": len(nets[0].tensors),
        "num_classes": nets[0].num_classes,
        "dynamics_dim": nets[0].dynamics_dim,
        "T": schedule.T,
        "k": schedule.k,
        "offset": schedule.offset,
    }
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    np.savez_compressed(path, **arrays)


def load_denoiser(path: str) -> tuple[list[DenoiserNet], DiffusionSchedule]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        nets = [
            DenoiserNet(
                meta["num_classes"], meta["dynamics_dim"],
                [data[f"b{b}_t{i}"] for i in range(meta["tensors"])],
            )
            for b in range(meta["branches"])
        ]
    schedule = DiffusionSchedule(meta["T"], meta["k"], meta["offset"])
    return nets, schedule
