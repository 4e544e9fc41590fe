"""End-to-end orchestration: ingest, preprocess, cross-validated grid, reports."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .dataset import LabeledDataset, ingest_dataset
from .errors import ConfigError, DataError, NumericalError, TileSparseError
from .experiment import GridResult, ModelConfig, binary_targets, grid_search
from .imaging import GrayImage, load_images, preprocess
from .reports import emit_report
from .sparse import SolverConfig

log = logging.getLogger(__name__)

_STAGE_ERRORS = {"config": ConfigError, "ingest": DataError, "preprocess": DataError}


class StageError(TileSparseError):
    """Failure tagged with the pipeline stage it happened in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
        if isinstance(cause, TileSparseError):
            self.exit_code = cause.exit_code
        else:
            self.exit_code = _STAGE_ERRORS.get(stage, NumericalError).exit_code


class _stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError) and isinstance(exc, Exception):
            raise StageError(self.name, exc) from exc
        return False


@dataclass
class RunResult:
    grid: GridResult
    files: list
    dataset: LabeledDataset


def solver_from(config: PipelineConfig) -> SolverConfig:
    return SolverConfig(config.solver_mode, float(config.solver_value))


def model_from(config: PipelineConfig) -> ModelConfig:
    return ModelConfig(classifier=config.classifier, cost=float(config.cost), class_weight=config.class_weight,
                       n_trees=config.n_trees, m_try=config.m_try, scale_features=config.scale_features,
                       eigensolver=config.eigensolver)


def load_preprocessed(dataset: LabeledDataset, image_size: int | None, jobs: int = 1) -> list[GrayImage]:
    images = [preprocess(img, image_size) for img in load_images([s.path for s in dataset.samples], jobs)]
    flat = [s.image_id for s, img in zip(dataset.samples, images) if img.degenerate]
    if flat:
        log.warning("%d constant images standardized to zeros: %s", len(flat), ", ".join(flat[:5]))
    return images


def check_fold_counts(dataset: LabeledDataset, config: PipelineConfig) -> None:
    labels = np.asarray(dataset.label_indices())
    if config.classifier == "svm":
        groups, _ = binary_targets(labels, list(dataset.class_names), config.positive)
    else:
        groups = labels
    values, counts = np.unique(groups, return_counts=True)
    if values.size < 2:
        raise DataError("dataset needs at least two classes")
    if counts.min() < config.k_folds:
        raise DataError(f"every class needs at least k_folds={config.k_folds} images; counts are "
                        f"{dict(zip(values.tolist(), counts.tolist()))}")


def run_pipeline(config: PipelineConfig, manifest: bool = True) -> RunResult:
    """Run every stage; failures surface as StageError carrying an exit code."""
    with _stage("config"):
        config.validate()
        if not config.data_dir:
            raise ConfigError("data_dir is required")
    with _stage("ingest"):
        dataset = ingest_dataset(config.data_dir)
        check_fold_counts(dataset, config)
    with _stage("preprocess"):
        images = load_preprocessed(dataset, config.image_size, config.jobs)
    with _stage("grid"):
        result = grid_search(images, dataset.label_indices(), list(dataset.class_names), config.patch_sizes,
                             config.component_counts, config.k_folds, config.seed, solver_from(config),
                             model_from(config), [s.image_id for s in dataset.samples], config.positive,
                             config.jobs)
    with _stage("report"):
        cfg = config.to_dict()
        cfg.pop("out_dir")
        cfg.pop("data_dir")
        cfg.pop("jobs")
        files = emit_report(result, config.resolved_out_dir(), cfg, manifest=manifest)
    return RunResult(result, files, dataset)
