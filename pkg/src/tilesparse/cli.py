"""Command-line entry point: ``tilesparse <subcommand> [flags]``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .classify import load_model, model_to_json, rf_predict_batch, rf_train, save_model, svm_predict_batch, svm_train
from .classify.svm import SvmModel
from .config import load_config
from .dataset import ingest_dataset
from .eigenspace import build_dictionary, export_dictionary_csv, load_dictionary, save_dictionary
from .errors import ConfigError, DataError, TileSparseError
from .evaluation import binary_metrics, confusion, multiclass_metrics
from .experiment import binary_targets
from .imaging import load_image, tile
from .pipeline import StageError, load_preprocessed, run_pipeline
from .sparse import FeatureVector, SolverConfig, extract_features, read_features_csv, write_features_csv
from .synth import PRESETS, gen_synthetic

log = logging.getLogger("tilesparse")


def _add_common(p):
    p.add_argument("--config", help="YAML config file; flags override its values")
    p.add_argument("--data-dir", help="dataset root, one subdirectory per class")
    p.add_argument("--out-dir", help="output directory (default $TILESPARSE_OUT_DIR or ./out)")
    p.add_argument("--jobs", type=int, help="worker threads")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def _add_model_flags(p):
    p.add_argument("--classifier", choices=("svm", "rf"))
    p.add_argument("--cost", type=float, help="SVM cost C")
    p.add_argument("--trees", type=int, help="number of forest trees")
    p.add_argument("--mtry", type=int, help="features drawn per split")
    p.add_argument("--positive", help="comma-separated positive class names (binary context)")


def _add_solver_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--lambda", dest="lam", type=float, help="L1 penalty (per-pixel RMS units)")
    g.add_argument("--epsilon", type=float, help="residual bound (per-pixel RMS units)")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tilesparse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-check", help="list classes and verify every image decodes")
    _add_common(p)

    p = sub.add_parser("gen-synth", help="write a synthetic dataset")
    _add_common(p)
    p.add_argument("--preset", default="blobs2", choices=sorted(PRESETS))
    p.add_argument("--n-per-class", type=int, default=20)
    p.add_argument("--image-size", type=int, default=64)

    for name, helptext in (("build-dict", "fit a PCA dictionary on all images"),
                           ("encode", "write reconstruction-error features"),
                           ("grid", "cross-validated patch-size x component grid"),
                           ("run", "end-to-end pipeline with manifest")):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        p.add_argument("--image-size", type=int)
        if name in ("grid", "run"):
            p.add_argument("--patch-size", type=_int_list, help="comma-separated patch sizes")
            p.add_argument("--components", type=_int_list, help="comma-separated component counts")
            p.add_argument("--folds", type=int)
            _add_solver_flags(p)
            _add_model_flags(p)
        elif name == "build-dict":
            p.add_argument("--patch-size", type=int, required=True)
            p.add_argument("--components", type=int, required=True)
        else:
            p.add_argument("--dict", dest="dict_path", required=True, help="dictionary file from build-dict")
            _add_solver_flags(p)

    p = sub.add_parser("train", help="train a classifier on a feature CSV")
    _add_common(p)
    p.add_argument("--features", required=True)
    _add_model_flags(p)

    p = sub.add_parser("evaluate", help="score a trained model on a feature CSV")
    _add_common(p)
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--positive", help="comma-separated positive class names (binary context)")
    return parser


def _config(args, **extra):
    overrides = {
        "data_dir": getattr(args, "data_dir", None),
        "out_dir": getattr(args, "out_dir", None),
        "jobs": getattr(args, "jobs", None),
        "seed": getattr(args, "seed", None),
        "image_size": getattr(args, "image_size", None),
        "classifier": getattr(args, "classifier", None),
        "cost": getattr(args, "cost", None),
        "n_trees": getattr(args, "trees", None),
        "m_try": getattr(args, "mtry", None),
        "k_folds": getattr(args, "folds", None),
        "positive": getattr(args, "positive", None),
    }
    if getattr(args, "epsilon", None) is not None:
        overrides.update(solver_mode="epsilon", solver_value=args.epsilon)
    elif getattr(args, "lam", None) is not None:
        overrides.update(solver_mode="lambda", solver_value=args.lam)
    overrides.update(extra)
    return load_config(args.config, overrides)


def _out_dir(cfg):
    out = cfg.resolved_out_dir()
    os.makedirs(out, exist_ok=True)
    return out


def cmd_ingest_check(args):
    cfg = _config(args)
    if not cfg.data_dir:
        raise ConfigError("--data-dir is required")
    ds = ingest_dataset(cfg.data_dir)
    failures = []
    for s in ds.samples:
        try:
            load_image(s.path)
        except DataError as exc:
            failures.append(str(exc))
    for name, n in ds.counts().items():
        print(f"{name}\t{n}")
    for msg in failures:
        print(f"unreadable: {msg}", file=sys.stderr)
    if failures:
        raise DataError(f"{len(failures)} unreadable image(s)")
    print(f"{len(ds)} images in {len(ds.class_names)} classes")


def cmd_gen_synth(args):
    out = args.out_dir or os.environ.get("TILESPARSE_OUT_DIR") or "out"
    if args.n_per_class < 1:
        raise ConfigError("--n-per-class must be >= 1")
    try:
        paths = gen_synthetic(out, args.n_per_class, args.preset, args.image_size, args.seed or 0)
    except OSError as exc:
        raise DataError(f"cannot write to {out}: {exc}") from exc
    print(f"wrote {len(paths)} images under {out}")


def cmd_build_dict(args):
    cfg = _config(args, patch_sizes=[args.patch_size], component_counts=[args.components])
    if not cfg.data_dir:
        raise ConfigError("--data-dir is required")
    ds = ingest_dataset(cfg.data_dir)
    images = load_preprocessed(ds, cfg.image_size, cfg.jobs)
    patches = np.hstack([tile(img, args.patch_size).data for img in images])
    d = build_dictionary(patches, args.components, method=cfg.eigensolver, patch_size=args.patch_size)
    out = _out_dir(cfg)
    save_dictionary(d, os.path.join(out, "dictionary.bin"))
    export_dictionary_csv(d, os.path.join(out, "dictionary.csv"))
    print(f"dictionary p={d.patch_size} k={d.n_components} from {patches.shape[1]} patches -> {out}")


def _read_artifact(loader, path, what):
    try:
        return loader(path)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read {what} {path}: {exc}") from exc


def cmd_encode(args):
    d = _read_artifact(load_dictionary, args.dict_path, "dictionary")
    cfg = _config(args, patch_sizes=[d.patch_size], component_counts=[d.n_components])
    if not cfg.data_dir:
        raise ConfigError("--data-dir is required")
    ds = ingest_dataset(cfg.data_dir)
    images = load_preprocessed(ds, cfg.image_size, cfg.jobs)
    solver = SolverConfig(cfg.solver_mode, cfg.solver_value)
    feats = [extract_features(d, img, solver, s.image_id, s.label) for s, img in zip(ds.samples, images)]
    path = os.path.join(_out_dir(cfg), "features.csv")
    write_features_csv(path, feats)
    print(f"{len(feats)} feature vectors of length {len(feats[0].errors)} -> {path}")


def _labelled(features: list[FeatureVector]):
    if any(f.label is None for f in features):
        raise DataError("feature CSV has unlabelled rows")
    names = sorted({f.label for f in features})
    x = np.vstack([f.errors for f in features])
    idx = np.array([names.index(f.label) for f in features])
    return x, idx, names


def _scaler(x):
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd[sd == 0] = 1.0
    return mu, sd


def cmd_train(args):
    cfg = _config(args)
    x, idx, names = _labelled(_read_artifact(read_features_csv, args.features, "features"))
    out = _out_dir(cfg)
    meta = {"classes": names, "classifier": cfg.classifier}
    if cfg.classifier == "svm":
        y, pos = binary_targets(idx, names, cfg.positive)
        meta["positive"] = pos
        if cfg.scale_features:
            mu, sd = _scaler(x)
            x = (x - mu) / sd
            meta["scaler"] = {"mean": mu.tolist(), "std": sd.tolist()}
        model = svm_train(x, y, C=cfg.cost, class_weights="balanced" if cfg.class_weight == "balanced" else None)
    else:
        model = rf_train(x, idx, n_trees=cfg.n_trees, m_try=cfg.m_try, seed=cfg.seed, jobs=cfg.jobs)
    save_model(model, os.path.join(out, "model.bin"))
    with open(os.path.join(out, "model.json"), "w") as fh:
        json.dump({**meta, "model": model_to_json(model)}, fh, indent=1, sort_keys=True)
    print(f"trained {cfg.classifier} on {x.shape[0]} samples x {x.shape[1]} features -> {out}")


def cmd_evaluate(args):
    cfg = _config(args)
    x, idx, names = _labelled(_read_artifact(read_features_csv, args.features, "features"))
    model = _read_artifact(load_model, args.model, "model")
    meta_path = os.path.join(os.path.dirname(os.path.abspath(args.model)), "model.json")
    meta = {}
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
    if isinstance(model, SvmModel):
        y, _ = binary_targets(idx, names, cfg.positive or meta.get("positive"))
        if "scaler" in meta:
            x = (x - np.array(meta["scaler"]["mean"])) / np.array(meta["scaler"]["std"])
        scores, pred = svm_predict_batch(model, x)
        metrics = binary_metrics(confusion(pred, y, classes=[-1, 1]), scores, y, positive=1)
    else:
        pred, votes = rf_predict_batch(model, x)
        classes = model.classes.tolist()
        frac = votes / model.n_trees
        cm = confusion(pred, idx, classes=classes)
        if len(classes) == 2:
            metrics = binary_metrics(cm, frac[:, 1], idx, positive=classes[1])
        else:
            metrics = multiclass_metrics(cm, frac, idx)
        metrics["confusion"] = cm.counts.tolist()
    path = os.path.join(_out_dir(cfg), "metrics.json")
    with open(path, "w") as fh:
        json.dump(metrics, fh, indent=1, sort_keys=True)
    print(json.dumps({k: v for k, v in metrics.items() if k != "confusion"}, sort_keys=True))


def _grid_overrides(args):
    return {"patch_sizes": args.patch_size, "component_counts": args.components}


def cmd_grid(args):
    cfg = _config(args, **_grid_overrides(args))
    res = run_pipeline(cfg, manifest=False)
    _print_best(res)


def cmd_run(args):
    cfg = _config(args, **_grid_overrides(args))
    res = run_pipeline(cfg, manifest=True)
    _print_best(res)


def _print_best(res):
    best = res.grid.best_cell()
    if best is None:
        print("empty grid")
        return
    s = best.summary
    print(f"best: patch {best.patch_size} components {best.n_components} "
          f"balanced accuracy {s.formatted('bal_acc')}%")
    for f in res.files:
        print(f)


COMMANDS = {
    "ingest-check": cmd_ingest_check,
    "gen-synth": cmd_gen_synth,
    "build-dict": cmd_build_dict,
    "encode": cmd_encode,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "grid": cmd_grid,
    "run": cmd_run,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except TileSparseError as exc:
        print(f"error: [{args.command}] {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"error: [{args.command}] {exc}", file=sys.stderr)
        return 3 if isinstance(exc, OSError) else 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
