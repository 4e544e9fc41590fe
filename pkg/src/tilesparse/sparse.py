"""L1 sparse coding of patches and reconstruction-error features.

The penalised problem ``min 0.5*||X a - y||^2 + lam*||a||_1`` is solved by
cyclic coordinate descent.  The residual-constrained form
``min ||a||_1 s.t. ||X a - y|| <= eps`` is reached by bisecting on ``lam``:
the lasso residual norm is non-decreasing in ``lam``.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .eigenspace import Dictionary
from .errors import ConvergenceError, DimensionError
from .imaging import GrayImage, tile

MAX_SWEEPS = 10_000
CHANGE_TOL = 1e-8
KKT_TOL = 1e-6
BISECTION_STEPS = 20
EPS_SLACK = 1e-6
# absolute floor under which a residual counts as exact reconstruction
ROUNDING_FLOOR = 1e-12


@dataclass(frozen=True)
class SparseCode:
    coefficients: np.ndarray
    lambda_used: float
    iterations: int
    residual_norm: float
    unreachable: bool = False


@dataclass
class FeatureVector:
    errors: np.ndarray
    image_id: str = ""
    label: str | None = None


@dataclass(frozen=True)
class SolverConfig:
    """How patches are encoded.

    ``mode`` is ``"lambda"`` (fixed penalty) or ``"epsilon"`` (residual
    bound).  With ``per_pixel`` the value is given per pixel RMS and scaled
    by sqrt(patch_dim) before use, so one setting fits every patch size.
    """

    mode: str = "lambda"
    value: float = 0.1
    per_pixel: bool = True

    def __post_init__(self):
        if self.mode not in ("lambda", "epsilon"):
            raise ValueError(f"solver mode must be 'lambda' or 'epsilon', got {self.mode!r}")
        if not np.isfinite(self.value) or self.value < 0:
            raise ValueError(f"solver value must be finite and >= 0, got {self.value}")

    def effective(self, patch_dim: int) -> float:
        return self.value * np.sqrt(patch_dim) if self.per_pixel else self.value


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def lasso_objective(x, y, coef, lam) -> float:
    r = x @ coef - y
    return 0.5 * float(r @ r) + lam * float(np.abs(coef).sum())


def kkt_violation(x, y, coef, lam) -> float:
    """Largest breach of the lasso optimality conditions at ``coef``."""
    corr = x.T @ (y - x @ coef)
    nz = coef != 0
    v_zero = np.maximum(np.abs(corr[~nz]) - lam, 0.0)
    v_nz = np.abs(corr[nz] - lam * np.sign(coef[nz]))
    return float(max(v_zero.max(initial=0.0), v_nz.max(initial=0.0)))


def _check_design(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"atom matrix must be 2-D, got shape {x.shape}")
    if y.shape[0] != x.shape[0]:
        raise DimensionError(f"patch has {y.shape[0]} entries, atoms have {x.shape[0]} rows")
    return x, y


def _polish(gram, xty, coef, lam):
    """Replace each column by the exact minimiser on its support when that checks out.

    Coordinate descent stops on a small step, not at the optimum.  With the
    support S and signs s fixed, optimality is the linear system
    G_SS a = (X^T y)_S - lam * s; the solve is kept only if the signs agree
    and every coordinate off S still satisfies |(X^T r)_j| <= lam.
    """
    nz = coef != 0
    patterns, inverse = np.unique(nz.T, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    out = coef.copy()
    slack = 1e-12 * (1.0 + np.abs(xty).max(initial=0.0))
    for i, support in enumerate(patterns):
        if not support.any():
            continue
        cols = np.flatnonzero(inverse == i)
        signs = np.sign(coef[np.ix_(support, cols)])
        try:
            sol = np.linalg.solve(gram[np.ix_(support, support)], xty[np.ix_(support, cols)] - lam * signs)
        except np.linalg.LinAlgError:
            continue
        ok = np.all(np.sign(sol) == signs, axis=0)
        corr = xty[np.ix_(~support, cols)] - gram[np.ix_(~support, support)] @ sol
        ok &= np.all(np.abs(corr) <= lam + slack, axis=0)
        out[np.ix_(support, cols[ok])] = sol[:, ok]
    return out


def lasso_batch(x, ys, lam: float):
    """Solve one lasso per column of ``ys``.

    Returns (coefficients k x n, residual norms, sweeps per column).
    Raises ConvergenceError if any column hits the sweep cap.
    """
    x, ys = _check_design(x, ys)
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    gram = np.ascontiguousarray(x.T @ x)
    xty = np.ascontiguousarray(x.T @ ys)
    tol = CHANGE_TOL * (1.0 + np.linalg.norm(ys, axis=0))
    coef, sweeps, change = kernels.lasso_cd_batch(gram, xty, float(lam), tol, MAX_SWEEPS)
    if np.any(change >= tol):
        bad = int(np.argmax(change - tol))
        raise ConvergenceError(
            f"coordinate descent hit {MAX_SWEEPS} sweeps on column {bad}",
            last_iterate=coef,
            violation=kkt_violation(x, ys[:, bad], coef[:, bad], lam),
        )
    coef = _polish(gram, xty, coef, float(lam))
    resid = np.linalg.norm(x @ coef - ys, axis=0)
    return coef, resid, sweeps


def lasso(x, y, lam: float) -> SparseCode:
    """Penalised L1 sparse code of a single (centred) patch ``y``."""
    x, y = _check_design(x, y)
    if y.ndim != 1:
        raise DimensionError("lasso takes a single patch vector; use lasso_batch for columns")
    coef, resid, sweeps = lasso_batch(x, y[:, None], lam)
    return SparseCode(coef[:, 0], float(lam), int(sweeps[0]), float(resid[0]))


def least_squares_residual(x, y) -> float:
    sol, *_ = np.linalg.lstsq(x, y, rcond=None)
    return float(np.linalg.norm(x @ sol - y))


def encode_epsilon(x, y, epsilon: float) -> SparseCode:
    """Sparsest code found by bisection whose residual stays within ``epsilon``.

    When ``epsilon`` is below the least-squares residual the minimum-norm
    least-squares code is returned with ``unreachable=True``.
    """
    x, y = _check_design(x, y)
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    ynorm = float(np.linalg.norm(y))
    floor = ROUNDING_FLOOR * (1.0 + ynorm)
    lam_max = float(np.abs(x.T @ y).max(initial=0.0))
    if ynorm <= epsilon:
        return SparseCode(np.zeros(x.shape[1]), lam_max, 0, ynorm)

    ls, *_ = np.linalg.lstsq(x, y, rcond=None)
    ls_resid = float(np.linalg.norm(x @ ls - y))
    ls_code = SparseCode(ls, 0.0, 0, ls_resid)
    if epsilon < ls_resid - floor:
        return SparseCode(ls, 0.0, 0, ls_resid, unreachable=True)

    bound = epsilon * (1.0 + EPS_SLACK) + floor
    lo, hi = 0.0, lam_max
    best = ls_code
    probes = 0
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        code = lasso(x, y, mid)
        probes += code.iterations
        if code.residual_norm <= bound:
            lo, best = mid, code
        else:
            hi = mid
    return SparseCode(best.coefficients, best.lambda_used, probes, best.residual_norm)


def recon_error(x, code: SparseCode, y) -> float:
    """Euclidean norm of the reconstruction residual ``X a - y``."""
    x, y = _check_design(x, y)
    if code.coefficients.shape[0] != x.shape[1]:
        raise DimensionError("code length does not match the number of atoms")
    return float(np.linalg.norm(x @ code.coefficients - y))


# -- feature extraction --------------------------------------------------------


def patch_errors(dictionary: Dictionary, patches: np.ndarray, solver: SolverConfig) -> np.ndarray:
    """Reconstruction error of each patch column after centring by the dictionary mean."""
    centred = patches - dictionary.mean[:, None]
    value = solver.effective(dictionary.patch_dim)
    if solver.mode == "lambda":
        _, resid, _ = lasso_batch(dictionary.atoms, centred, value)
        return resid
    return np.array([encode_epsilon(dictionary.atoms, centred[:, j], value).residual_norm
                     for j in range(centred.shape[1])])


def extract_features(dictionary: Dictionary, img: GrayImage, solver: SolverConfig | None = None,
                     image_id: str = "", label: str | None = None) -> FeatureVector:
    """One reconstruction error per tile, in row-major grid order."""
    solver = solver or SolverConfig()
    patches = tile(img, dictionary.patch_size)
    if patches.patch_dim != dictionary.patch_dim:
        raise DimensionError("tile size does not match the dictionary")
    return FeatureVector(patch_errors(dictionary, patches.data, solver), image_id, label)


def feature_matrix(dictionary: Dictionary, images: Sequence[GrayImage], solver: SolverConfig | None = None,
                   jobs: int = 1) -> np.ndarray:
    """Stack :func:`extract_features` over images into an (n_images, n_patches) array.

    Rows are always in input order; ``jobs > 1`` only changes scheduling.
    """
    solver = solver or SolverConfig()
    if not images:
        return np.zeros((0, 0))

    def one(img):
        return extract_features(dictionary, img, solver).errors

    if jobs <= 1:
        rows = [one(img) for img in images]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, images))
    return np.vstack(rows)


def write_features_csv(path, features: Iterable[FeatureVector]) -> None:
    """Header ``image_id,label,e_0,...,e_{n-1}``; rows in the given order."""
    features = list(features)
    n = len(features[0].errors) if features else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["image_id", "label"] + [f"e_{i}" for i in range(n)])
        for fv in features:
            if len(fv.errors) != n:
                raise DimensionError(f"{fv.image_id}: {len(fv.errors)} features, expected {n}")
            writer.writerow([fv.image_id, "" if fv.label is None else fv.label] + [repr(float(e)) for e in fv.errors])


def read_features_csv(path) -> list[FeatureVector]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["image_id", "label"]:
            raise ValueError(f"{path}: not a feature CSV")
        return [FeatureVector(np.array([float(v) for v in row[2:]]), row[0], row[1] or None) for row in reader]
