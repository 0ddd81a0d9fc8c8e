"""Kernel backend selection.

The compiled extension is used when it is importable and the environment
variable ``EXACTQFT_PURE_PYTHON`` is unset; otherwise the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("EXACTQFT_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # noqa: F811

        BACKEND = "compiled"
    except ImportError:  # extension not built
        pass

apply_1q = _impl.apply_1q
apply_phase = _impl.apply_phase
apply_diagonal = _impl.apply_diagonal
permute = _impl.permute

__all__ = ["BACKEND", "apply_1q", "apply_diagonal", "apply_phase", "permute"]
