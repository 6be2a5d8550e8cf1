"""Backend selection for the splitting kernel.

The compiled extension ``pgeq._admm`` is used when it imports; otherwise the
numpy implementation in ``pgeq._admm_py`` is used. Setting the environment
variable ``PGEQ_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _admm_py

BACKEND = "python"
admm_l1 = _admm_py.admm_l1

if os.environ.get("PGEQ_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _admm
    except ImportError:  # extension not built
        _admm = None
    else:
        admm_l1 = _admm.admm_l1
        BACKEND = "cython"
else:
    _admm = None


def get_kernel(backend=None):
    """Return the splitting kernel for ``backend`` ("cython", "python" or None for default)."""
    if backend is None:
        return admm_l1
    if backend == "python":
        return _admm_py.admm_l1
    if backend == "cython":
        if _admm is None:
            raise ImportError("compiled kernel pgeq._admm is not available")
        return _admm.admm_l1
    raise ValueError(f"unknown backend {backend!r}")
