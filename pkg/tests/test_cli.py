import json
import os
import subprocess
import sys

import pytest
from click.testing import CliRunner

from labelcal.cli import main
from labelcal.data import load_dataset, save_dataset
from labelcal.pipeline import load_candidates
from conftest import make_dataset


@pytest.fixture
def runner():
    try:
        return CliRunner(mix_stderr=False)
    except TypeError:  # click >= 8.2 always separates the streams
        return CliRunner()


def write_dataset(path, **kwargs):
    manifest, records = make_dataset(**kwargs)
    save_dataset(manifest, records, None, str(path))
    return str(path)


def invoke(runner, args):
    result = runner.invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def test_full_cli_flow(runner, tmp_path):
    raw = write_dataset(tmp_path / "raw", n_train=60, n_valid=15, n_test=15,
                        num_classes=3, dim=5, noise_rate=0.0, spread=5.0)

    ingested = str(tmp_path / "ingested")
    invoke(runner, ["ingest", "--in", raw, "--out", ingested])
    manifest, records, _ = load_dataset(ingested)
    assert all(r.noisy_label is not None for r in records)

    noised = str(tmp_path / "noised")
    invoke(runner, ["noise", "--kind", "sn", "--ratio", "0.3", "--seed", "1",
                    "--in", ingested, "--out", noised])
    _, noisy_records, _ = load_dataset(noised)
    train = [r for r in noisy_records if r.split == "train"]
    flipped = sum(r.noisy_label != r.true_label for r in train)
    assert 0 < flipped < len(train)
    # test split untouched
    for r in noisy_records:
        if r.split == "test":
            assert r.noisy_label == r.true_label

    cls_cfg = str(tmp_path / "cls.json")
    with open(cls_cfg, "w", encoding="utf-8") as fh:
        json.dump({"epochs": 3, "batch_size": 32, "learning_rate": 0.05,
                   "branches": 2}, fh)
    trained = str(tmp_path / "trained")
    invoke(runner, ["train-classifier", "--config", cls_cfg,
                    "--in", noised, "--out", trained])
    manifest2, _, dynamics = load_dataset(trained)
    assert manifest2.dynamics_epochs == 3
    assert dynamics is not None and len(dynamics) == 90
    assert os.path.exists(os.path.join(trained, "classifier.npz"))
    assert os.path.exists(os.path.join(trained, "valid_curve.json"))

    cands = str(tmp_path / "candidates.jsonl")
    invoke(runner, ["retrieve-candidates", "--in", trained, "--out", cands,
                    "--lambda", "0.7", "--gamma", "0.6", "--k", "5",
                    "--sigma", "0.4"])
    sets = load_candidates(cands)
    assert len(sets) == 60
    assert {cs.kind for cs in sets} <= {"certain", "uncertain"}

    dif_cfg = str(tmp_path / "dif.json")
    with open(dif_cfg, "w", encoding="utf-8") as fh:
        json.dump({"warmup_epochs": 1, "eval_rounds": 1, "total_epochs": 3,
                   "inference_timesteps": 3, "batch_size": 32,
                   "learning_rate": 5e-3, "branches": 1}, fh)
    diffusion = str(tmp_path / "diffusion")
    invoke(runner, ["train-diffusion", "--config", dif_cfg,
                    "--candidates", cands, "--dynamics", trained,
                    "--out", diffusion, "--train-timesteps", "30"])
    assert os.path.exists(os.path.join(diffusion, "denoiser.npz"))
    refined = load_candidates(os.path.join(diffusion, "candidates_refined.jsonl"))
    assert len(refined) == 60

    calibrated = str(tmp_path / "calibrated.jsonl")
    invoke(runner, ["calibrate",
                    "--classifier", os.path.join(trained, "classifier.npz"),
                    "--denoiser", os.path.join(diffusion, "denoiser.npz"),
                    "--out", calibrated, "--inference-timesteps", "3"])
    lines = [json.loads(l) for l in open(calibrated, encoding="utf-8") if l.strip()]
    assert len(lines) == 15
    for obj in lines:
        assert abs(sum(obj["probs"]) - 1.0) < 1e-6
        assert obj["label"] == max(range(3), key=lambda c: obj["probs"][c])

    report_dir = str(tmp_path / "eval")
    invoke(runner, ["evaluate", "--in", noised, "--calibrated", calibrated,
                    "--out", report_dir])
    with open(os.path.join(report_dir, "report.json"), encoding="utf-8") as fh:
        rep = json.load(fh)
    assert 0.0 <= rep["accuracy_mean"] <= 1.0

    # regenerating derived files from report.json is byte-stable
    txt_path = os.path.join(report_dir, "report.txt")
    before = open(txt_path, "rb").read()
    os.remove(txt_path)
    invoke(runner, ["report", "--run-dir", report_dir])
    assert open(txt_path, "rb").read() == before


def test_run_and_grid_commands(runner, tmp_path):
    dataset = write_dataset(tmp_path / "ds", n_train=50, n_valid=12, n_test=12,
                            num_classes=3, dim=5, noise_rate=0.0, spread=5.0)
    base = {
        "dataset": dataset,
        "out_dir": str(tmp_path / "runs"),
        "noise": {"kind": "symmetric", "ratio": 0.3, "seed": 0},
        "classifier": {"epochs": 3, "batch_size": 32, "learning_rate": 0.05,
                       "branches": 2, "seed": 0},
        "retrieval": {"K": 5, "lam": 0.7, "gamma": 0.6},
        "sigma": 0.4,
        "schedule_T": 30,
        "distill": {"warmup_epochs": 1, "eval_rounds": 1, "total_epochs": 3,
                    "inference_timesteps": 3, "batch_size": 32,
                    "learning_rate": 5e-3, "branches": 1, "seed": 0},
        "calibration": {"inference_timesteps": 3, "seeds": [0]},
    }
    cfg_path = str(tmp_path / "config.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump(base, fh)

    result = invoke(runner, ["run", "--config", cfg_path])
    out = json.loads(result.stdout)
    assert "accuracy_mean" in out

    grid_path = str(tmp_path / "grid.json")
    with open(grid_path, "w", encoding="utf-8") as fh:
        json.dump({"retrieval.lam": [0.6, 0.8], "sigma": [0.4]}, fh)
    result = invoke(runner, ["grid", "--config", cfg_path, "--grid", grid_path])
    rows = json.loads(result.stdout)
    assert len(rows) == 2
    assert {tuple(sorted(r["overrides"].items())) for r in rows} == {
        (("retrieval.lam", 0.6), ("sigma", 0.4)),
        (("retrieval.lam", 0.8), ("sigma", 0.4)),
    }


def test_cli_error_exit_code(tmp_path):
    # malformed manifest must exit with code 2 and a JSON error line
    bad = tmp_path / "bad"
    bad.mkdir()
    (bad / "manifest.json").write_text("{not json")
    proc = subprocess.run(
        [sys.executable, "-m", "labelcal.cli", "ingest",
         "--in", str(bad), "--out", str(tmp_path / "out")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    err = json.loads(proc.stderr.strip().splitlines()[-1])
    assert err["error"] == "MalformedManifest"


def test_cli_help_lists_stages(runner):
    result = invoke(runner, ["--help"])
    for cmd in ("ingest", "noise", "train-classifier", "retrieve-candidates",
                "train-diffusion", "calibrate", "evaluate", "report", "run",
                "grid"):
        assert cmd in result.output
