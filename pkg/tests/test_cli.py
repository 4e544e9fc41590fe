import json
import os
import subprocess
import sys

import pytest

from tilesparse.cli import main


def test_synth_then_full_chain(tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["gen-synth", "--out-dir", str(data), "--n-per-class", "6", "--image-size", "32"]) == 0
    assert main(["ingest-check", "--data-dir", str(data)]) == 0
    st = str(tmp_path / "st")
    assert main(["build-dict", "--data-dir", str(data), "--out-dir", st, "--image-size", "32",
                 "--patch-size", "8", "--components", "3"]) == 0
    assert main(["encode", "--data-dir", str(data), "--dict", f"{st}/dictionary.bin", "--out-dir", st,
                 "--image-size", "32"]) == 0
    for clf in ("svm", "rf"):
        out = f"{st}/{clf}"
        assert main(["train", "--features", f"{st}/features.csv", "--out-dir", out, "--classifier", clf,
                     "--trees", "9"]) == 0
        assert main(["evaluate", "--features", f"{st}/features.csv", "--model", f"{out}/model.bin",
                     "--out-dir", out]) == 0
        metrics = json.loads(open(f"{out}/metrics.json").read())
        assert 0 <= metrics["bal_acc"] <= 1


def test_run_and_grid(blobs_dir, tmp_path, capsys):
    out = tmp_path / "o"
    args = ["--data-dir", str(blobs_dir), "--out-dir", str(out), "--image-size", "32", "--patch-size", "8,16",
            "--components", "2", "--folds", "5"]
    assert main(["grid"] + args) == 0
    assert not (out / "manifest.json").exists()
    assert main(["run"] + args) == 0
    assert (out / "manifest.json").exists()
    assert "best: patch" in capsys.readouterr().out


def test_config_file_and_env(blobs_dir, tmp_path, monkeypatch):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(f"image_size: 32\npatch_sizes: [16]\ncomponent_counts: [1]\ndata_dir: {blobs_dir}\n")
    monkeypatch.setenv("TILESPARSE_OUT_DIR", str(tmp_path / "env_out"))
    assert main(["run", "--config", str(cfg), "--classifier", "rf", "--trees", "5"]) == 0
    assert (tmp_path / "env_out" / "grid_bal_acc.csv").exists()


@pytest.mark.parametrize("argv, code", [
    (["run", "--data-dir", "x", "--patch-size", "10"], 2),
    (["run", "--data-dir", "x", "--cost", "-1"], 2),
    (["run", "--bogus"], 2),
    (["run", "--config", "/nonexistent.yaml"], 2),
    (["run", "--data-dir", "/nonexistent/dir", "--image-size", "32", "--patch-size", "8"], 3),
    (["ingest-check"], 2),
    (["encode", "--data-dir", "x", "--dict", "/nonexistent.bin"], 3),
    (["train", "--features", "/nonexistent.csv"], 3),
])
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code


def test_numerical_exit_code(blobs_dir, tmp_path, monkeypatch):
    from tilesparse import experiment
    from tilesparse.errors import ConvergenceError

    def boom(*a, **k):
        raise ConvergenceError("forced")

    monkeypatch.setattr(experiment, "svm_train", boom)
    argv = ["run", "--data-dir", str(blobs_dir), "--out-dir", str(tmp_path), "--image-size", "32",
            "--patch-size", "8", "--components", "1"]
    assert main(argv) == 4


def test_console_script_entry(tmp_path):
    env = dict(os.environ, PYTHONPATH=os.pathsep.join(sys.path))
    proc = subprocess.run([sys.executable, "-m", "tilesparse.cli", "--version"], capture_output=True, text=True,
                          env=env)
    assert proc.returncode == 0 and proc.stdout.strip()
