"""Element kernel dispatch.

The compiled Cython kernels are used when the extension was built; the
numpy implementation in ``_kernels_py`` is the fallback. Setting the
environment variable ``MAXWELL_SCHWARZ_PURE=1`` forces the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if not os.environ.get("MAXWELL_SCHWARZ_PURE"):
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

tet_element_matrices = _impl.tet_element_matrices
tri_tangential_mass = _impl.tri_tangential_mass

__all__ = ["BACKEND", "tet_element_matrices", "tri_tangential_mass"]
