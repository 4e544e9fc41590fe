"""Report files for a grid run.

* ``grid_bal_acc.csv``: balanced accuracy "mean±std" (percent), one row per
  patch size and one column per component count.
* ``best_metrics.csv``: all metrics of the best cell.
* ``folds.json``: every cell's per-fold metrics, predictions and test ids.
* ``roc_points.csv``: per-fold ROC points of the best cell.
* ``manifest.json``: sha256 and size of every file above.

Nothing time- or host-dependent is written, so equal inputs give equal bytes.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os

import numpy as np

from .evaluation import METRIC_NAMES
from .experiment import GridResult, fold_roc_points

log = logging.getLogger(__name__)

METRIC_HEADERS = {
    "bal_acc": "Bal Acc (%)",
    "sens": "Sens (%)",
    "spec": "Spec (%)",
    "auc": "AUC (%)",
    "prec": "Prec (%)",
    "f1": "F1-score (%)",
}


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _dump_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True, default=_json_default)
        fh.write("\n")


def write_grid_csv(result: GridResult, path) -> None:
    ks = result.component_counts
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["patch_size"] + [f"N={k}" for k in ks])
        if not result.patch_sizes or not ks:
            log.warning("empty grid: %s has a header only", path)
            return
        for p in result.patch_sizes:
            row = [f"{p}x{p}"]
            for k in ks:
                cell = result.cells.get((p, k))
                row.append(cell.summary.formatted("bal_acc") if cell and cell.folds else "")
            writer.writerow(row)


def write_best_csv(result: GridResult, path, context: str = "") -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["context", "patch_size", "n_components"] + [METRIC_HEADERS[m] for m in METRIC_NAMES])
        best = result.best_cell()
        if best is None:
            log.warning("no evaluated cells: %s has a header only", path)
            return
        summary = best.summary
        writer.writerow([context or result.mode, best.patch_size, best.n_components]
                        + [summary.formatted(m) for m in METRIC_NAMES])


def write_folds_json(result: GridResult, path, config: dict | None = None) -> None:
    best = result.best_cell()
    cells = []
    for p in result.patch_sizes:
        for k in result.component_counts:
            cell = result.cells[(p, k)]
            s = cell.summary
            cells.append({
                "patch_size": p,
                "n_components": k,
                "mean": s.mean,
                "std": s.std,
                "folds": [{
                    "fold": f.fold,
                    "metrics": f.metrics,
                    "test_ids": f.test_ids,
                    "truth": f.truth,
                    "predictions": f.predictions,
                    "scores": f.scores,
                } for f in cell.folds],
            })
    _dump_json(path, {
        "mode": result.mode,
        "classes": result.classes,
        "positive": result.positive,
        "config": config,
        "best": None if best is None else {"patch_size": best.patch_size, "n_components": best.n_components},
        "cells": cells,
    })


def write_roc_csv(result: GridResult, path) -> None:
    best = result.best_cell()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if result.mode == "binary":
            writer.writerow(["fold", "fpr", "tpr", "threshold"])
        else:
            writer.writerow(["fold", "positive", "negative", "fpr", "tpr", "threshold"])
        if best is None:
            return
        classes_idx = None if result.mode == "binary" else list(range(len(result.classes)))
        for row in fold_roc_points(best, result.mode, classes_idx):
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, files, extra: dict | None = None) -> str:
    entries = [{"file": os.path.relpath(f, out_dir), "sha256": file_digest(f), "bytes": os.path.getsize(f)}
               for f in sorted(files)]
    path = os.path.join(out_dir, "manifest.json")
    _dump_json(path, {"files": entries, **(extra or {})})
    return path


def emit_report(result: GridResult, out_dir, config: dict | None = None, context: str = "",
                manifest: bool = True) -> list[str]:
    """Write all report files into ``out_dir`` and return their paths."""
    os.makedirs(out_dir, exist_ok=True)
    files = [os.path.join(out_dir, name) for name in
             ("grid_bal_acc.csv", "best_metrics.csv", "folds.json", "roc_points.csv")]
    write_grid_csv(result, files[0])
    write_best_csv(result, files[1], context)
    write_folds_json(result, files[2], config)
    write_roc_csv(result, files[3])
    if manifest:
        files.append(write_manifest(out_dir, files, {"config": config}))
    return files
