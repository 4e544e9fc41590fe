"""PCA dictionary over patch space.

Atoms are the leading eigenvectors of the sample covariance of the training
patch columns.  With fewer patches than pixels per patch the eigenpairs come
from the (smaller) Gram matrix of the centred patches instead.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConvergenceError, DimensionError
from .imaging import PatchMatrix

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-12

_MAGIC = b"TSPDICT\x00"
_VERSION = 1
_HEADER = struct.Struct("<8sIIII")


@dataclass(frozen=True)
class CovMatrix:
    data: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.data, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise DimensionError(f"covariance must be square, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("covariance has non-finite entries")
        object.__setattr__(self, "data", c)

    @property
    def dim(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class Dictionary:
    """Orthonormal atoms (one per column), the patch mean, and their eigenvalues."""

    atoms: np.ndarray
    mean: np.ndarray
    eigenvalues: np.ndarray
    patch_size: int

    @property
    def n_components(self) -> int:
        return self.atoms.shape[1]

    @property
    def patch_dim(self) -> int:
        return self.atoms.shape[0]

    def truncate(self, k: int) -> "Dictionary":
        """The dictionary of the ``k`` leading atoms."""
        if not 1 <= k <= self.n_components:
            raise ValueError(f"k must lie in [1, {self.n_components}], got {k}")
        return Dictionary(self.atoms[:, :k].copy(), self.mean, self.eigenvalues[:k].copy(), self.patch_size)

    def reconstruct(self, coefficients: np.ndarray) -> np.ndarray:
        return self.atoms @ coefficients + (self.mean if coefficients.ndim == 1 else self.mean[:, None])


def _as_columns(patches) -> np.ndarray:
    data = patches.data if isinstance(patches, PatchMatrix) else np.asarray(patches, dtype=np.float64)
    if data.ndim != 2:
        raise DimensionError(f"patch matrix must be 2-D, got shape {data.shape}")
    return data


def column_mean(patches) -> np.ndarray:
    """Mean patch: the row-wise average over all patch columns."""
    data = _as_columns(patches)
    if data.shape[1] == 0:
        raise DimensionError("cannot average an empty patch matrix")
    return data.mean(axis=1)


def covariance(patches) -> CovMatrix:
    """Unbiased sample covariance (1/(n-1)) of the patch columns."""
    data = _as_columns(patches)
    n = data.shape[1]
    if n < 2:
        raise DimensionError(f"covariance needs at least 2 patches, got {n}")
    centred = data - column_mean(data)[:, None]
    c = centred @ centred.T / (n - 1)
    return CovMatrix(0.5 * (c + c.T))


def _normalise_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    if vectors.size == 0:
        return vectors
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[lead, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eig(c, method: str = "jacobi") -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvectors of a symmetric matrix.

    ``method`` is ``"jacobi"`` (cyclic Jacobi kernel) or ``"lapack"``
    (``numpy.linalg.eigh``).
    """
    a = c.data if isinstance(c, CovMatrix) else np.asarray(c, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"matrix must be square, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    if method == "jacobi":
        w, v, sweeps, off = kernels.jacobi_eigh(np.ascontiguousarray(a), JACOBI_TOL, JACOBI_MAX_SWEEPS)
        if off > JACOBI_TOL * np.linalg.norm(a):
            raise ConvergenceError(
                f"Jacobi did not converge in {sweeps} sweeps (off-diagonal norm {off:.3e})",
                last_iterate=(w, v),
                violation=off,
            )
    elif method == "lapack":
        w, v = np.linalg.eigh(a)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    order = np.argsort(-w, kind="stable")
    return w[order], _normalise_signs(v[:, order])


def gram_eig(patches, method: str = "jacobi") -> tuple[np.ndarray, np.ndarray]:
    """Nonzero covariance eigenpairs through the n x n Gram matrix of centred patches.

    With K = Z^T Z / (n-1) and K u = lam u, the covariance eigenvector is
    Z u / sqrt((n-1) lam).  Pairs with lam at rounding level are dropped.
    """
    data = _as_columns(patches)
    n = data.shape[1]
    if n < 2:
        raise DimensionError(f"need at least 2 patches, got {n}")
    z = data - column_mean(data)[:, None]
    k = z.T @ z / (n - 1)
    lam, u = sym_eig(0.5 * (k + k.T), method)
    keep = lam > max(lam[0], 0.0) * 1e-12 * n if lam.size else np.zeros(0, bool)
    lam, u = lam[keep], u[:, keep]
    w = z @ u / np.sqrt((n - 1) * lam)
    # one Gram-Schmidt pass tidies rounding in the lifted vectors
    w, _ = np.linalg.qr(w)
    return lam, _normalise_signs(w)


def build_dictionary(patches, k: int, method: str = "jacobi", route: str = "auto",
                     patch_size: int | None = None) -> Dictionary:
    """PCA dictionary of the ``k`` leading covariance eigenvectors.

    ``route`` picks ``"covariance"``, ``"gram"`` or ``"auto"`` (Gram when
    there are fewer patches than pixels per patch and ``k`` nonzero
    eigenvalues exist).
    """
    data = _as_columns(patches)
    dim, n = data.shape
    if patch_size is None:
        patch_size = patches.patch_size if isinstance(patches, PatchMatrix) else int(round(np.sqrt(dim)))
    if not 1 <= k <= min(dim, n):
        raise ValueError(f"k must lie in [1, min(patch_dim, n_patches)] = [1, {min(dim, n)}], got {k}")
    mean = column_mean(data)
    if route not in ("auto", "gram", "covariance"):
        raise ValueError(f"unknown route {route!r}")
    lam = vec = None
    if route == "gram" or (route == "auto" and n < dim):
        lam, vec = gram_eig(data, method)
        if lam.size < k:
            if route == "gram":
                raise ValueError(f"only {lam.size} nonzero eigenvalues, cannot keep {k}")
            lam = vec = None
    if lam is None:
        lam, vec = sym_eig(covariance(data), method)
    return Dictionary(np.ascontiguousarray(vec[:, :k]), mean, lam[:k].copy(), int(patch_size))


def project(dictionary: Dictionary, y: np.ndarray) -> np.ndarray:
    """Coefficients of ``y - mean`` on the atoms.  Accepts one patch or a column batch."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] != dictionary.patch_dim:
        raise DimensionError(f"patch has {y.shape[0]} entries, dictionary expects {dictionary.patch_dim}")
    centred = y - (dictionary.mean if y.ndim == 1 else dictionary.mean[:, None])
    return dictionary.atoms.T @ centred


# -- persistence -------------------------------------------------------------


def save_dictionary(dictionary: Dictionary, path) -> None:
    """Binary layout: header, then little-endian float64 mean, eigenvalues, atoms (column order)."""
    header = _HEADER.pack(_MAGIC, _VERSION, dictionary.patch_size, dictionary.n_components, dictionary.patch_dim)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(dictionary.mean.astype("<f8").tobytes())
        fh.write(dictionary.eigenvalues.astype("<f8").tobytes())
        fh.write(np.asfortranarray(dictionary.atoms).astype("<f8").tobytes(order="F"))


def load_dictionary(path) -> Dictionary:
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < _HEADER.size:
        raise ValueError(f"{path}: truncated dictionary header")
    magic, version, p, k, dim = _HEADER.unpack_from(buf)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not a dictionary file")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported dictionary version {version}")
    need = 8 * (dim + k + dim * k)
    body = buf[_HEADER.size :]
    if len(body) != need:
        raise ValueError(f"{path}: expected {need} payload bytes, found {len(body)}")
    vals = np.frombuffer(body, dtype="<f8").astype(np.float64)
    mean = vals[:dim].copy()
    eig = vals[dim : dim + k].copy()
    atoms = vals[dim + k :].reshape(dim, k, order="F").copy()
    return Dictionary(atoms, mean, eig, p)


def export_dictionary_csv(dictionary: Dictionary, path) -> None:
    """Debug dump: one row per pixel, plus a leading eigenvalue row."""
    k = dictionary.n_components
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "mean"] + [f"atom_{j}" for j in range(k)])
        writer.writerow(["eigenvalue", ""] + [repr(float(v)) for v in dictionary.eigenvalues])
        for i in range(dictionary.patch_dim):
            writer.writerow([i, repr(float(dictionary.mean[i]))] + [repr(float(v)) for v in dictionary.atoms[i]])
