"""Hot numeric kernels, dispatched to numba or numpy by ``TILESPARSE_BACKEND``.

Both implementations stay importable as ``kernels.numba_impl`` and
``kernels.numpy_impl`` so they can be compared directly.
"""
from .. import _accel
from . import _numpy as numpy_impl

if _accel.NUMBA_AVAILABLE:
    from . import _numba as numba_impl
else:  # pragma: no cover
    numba_impl = None

BACKEND = _accel.BACKEND
_impl = numba_impl if BACKEND == "numba" else numpy_impl

jacobi_eigh = _impl.jacobi_eigh
lasso_cd_batch = _impl.lasso_cd_batch
svm_dual_cd = _impl.svm_dual_cd
best_split = _impl.best_split
tree_apply = _impl.tree_apply

__all__ = [
    "BACKEND",
    "best_split",
    "jacobi_eigh",
    "lasso_cd_batch",
    "numba_impl",
    "numpy_impl",
    "svm_dual_cd",
    "tree_apply",
]
