"""Pipeline configuration: YAML file plus command-line overrides.

Schema (all keys optional)::

    image_size: 224
    patch_sizes: [7, 8, 14, 16, 28, 32, 56]
    component_counts: [1, 2, 3, 4, 5, 6, 7, 8, 9]
    solver_mode: lambda        # or epsilon
    solver_value: 0.1          # per-pixel RMS units
    classifier: svm            # or rf
    cost: 1.0
    class_weight: balanced     # or none
    n_trees: 100
    m_try: null                # null -> floor(sqrt(n_features))
    k_folds: 5
    seed: 0
    jobs: 1
    positive: null             # list of class names for the binary context
    eigensolver: jacobi        # or lapack
    scale_features: true
    data_dir: null
    out_dir: null              # falls back to $TILESPARSE_OUT_DIR, then ./out
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError

OUT_DIR_ENV = "TILESPARSE_OUT_DIR"


@dataclass
class PipelineConfig:
    image_size: int = 224
    patch_sizes: list = field(default_factory=lambda: [7, 8, 14, 16, 28, 32, 56])
    component_counts: list = field(default_factory=lambda: list(range(1, 10)))
    solver_mode: str = "lambda"
    solver_value: float = 0.1
    classifier: str = "svm"
    cost: float = 1.0
    class_weight: str = "balanced"
    n_trees: int = 100
    m_try: int | None = None
    k_folds: int = 5
    seed: int = 0
    jobs: int = 1
    positive: list | None = None
    eigensolver: str = "jacobi"
    scale_features: bool = True
    data_dir: str | None = None
    out_dir: str | None = None

    def validate(self) -> "PipelineConfig":
        """Raise ConfigError naming the first violated constraint."""
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(isinstance(self.image_size, int) and self.image_size >= 1, "image_size must be a positive integer")
        need(all(isinstance(p, int) and p >= 1 for p in self.patch_sizes), "patch_sizes must be positive integers")
        bad = [p for p in self.patch_sizes if self.image_size % p]
        need(not bad, f"patch sizes {bad} do not divide image_size {self.image_size}")
        need(all(isinstance(k, int) and k >= 1 for k in self.component_counts),
             "component_counts must be integers >= 1")
        if self.patch_sizes and self.component_counts:
            smallest = min(self.patch_sizes)
            need(max(self.component_counts) <= smallest * smallest,
                 f"component count {max(self.component_counts)} exceeds patch dimension {smallest * smallest}")
        need(self.solver_mode in ("lambda", "epsilon"), "solver_mode must be 'lambda' or 'epsilon'")
        need(self.solver_value >= 0, "solver_value must be >= 0")
        need(self.classifier in ("svm", "rf"), "classifier must be 'svm' or 'rf'")
        need(self.cost > 0, "cost must be positive")
        need(self.class_weight in ("balanced", "none"), "class_weight must be 'balanced' or 'none'")
        need(isinstance(self.n_trees, int) and self.n_trees >= 1, "n_trees must be >= 1")
        need(self.m_try is None or (isinstance(self.m_try, int) and self.m_try >= 1), "m_try must be >= 1")
        need(isinstance(self.k_folds, int) and self.k_folds >= 2, "k_folds must be >= 2")
        need(isinstance(self.seed, int) and self.seed >= 0, "seed must be a non-negative integer")
        need(isinstance(self.jobs, int) and self.jobs >= 1, "jobs must be >= 1")
        need(self.eigensolver in ("jacobi", "lapack"), "eigensolver must be 'jacobi' or 'lapack'")
        return self

    def resolved_out_dir(self) -> str:
        return self.out_dir or os.environ.get(OUT_DIR_ENV) or "out"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _coerce(name, value):
    if name in ("patch_sizes", "component_counts"):
        if isinstance(value, (int, str)):
            value = [value]
        return [int(v) for v in value]
    if name == "positive" and isinstance(value, str):
        return [v for v in value.split(",") if v]
    return value


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    """Read the YAML file (if any), apply non-None overrides, validate."""
    values = {}
    if path is not None:
        try:
            with open(path) as fh:
                loaded = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {path} must be a mapping")
        values.update(loaded)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    try:
        cfg = PipelineConfig(**{k: _coerce(k, v) for k, v in values.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    return cfg.validate()
