"""Kernel backend selection: the compiled extension if importable, else numpy."""

try:
    from . import _kernels as kernels

    BACKEND = "cython"
except ImportError:  # extension not built
    from . import _pykernels as kernels

    BACKEND = "python"

from . import _pykernels as pykernels

__all__ = ["BACKEND", "kernels", "pykernels"]
