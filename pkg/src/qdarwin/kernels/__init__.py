"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports and ``QDARWIN_DISABLE_NUMBA`` is
unset (or ``0``).  Both implementations are importable directly as
``kernels.numpy_impl`` and ``kernels.numba_impl`` (the latter is ``None``
without numba) so they can be compared.
"""
import os

from . import _numpy as numpy_impl

try:
    from . import _numba as numba_impl
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_impl = None

USE_NUMBA = numba_impl is not None and os.environ.get("QDARWIN_DISABLE_NUMBA", "0") in ("", "0")
_impl = numba_impl if USE_NUMBA else numpy_impl
BACKEND = "numba" if USE_NUMBA else "numpy"

subset_gammas = _impl.subset_gammas
unitary_from_params = _impl.unitary_from_params
basis_joint = _impl.basis_joint
mutual_info_joint = _impl.mutual_info_joint
basis_info = _impl.basis_info
best_partition = _impl.best_partition

__all__ = [
    "BACKEND", "USE_NUMBA", "numpy_impl", "numba_impl", "subset_gammas",
    "unitary_from_params", "basis_joint", "mutual_info_joint", "basis_info",
    "best_partition",
]
