"""Kernel backend selection.

The compiled extension is used when it was built and importable; otherwise
the numpy implementation is used.  Setting ``PBDLEARN_PURE=1`` forces the
fallback, which the test suite uses to check the two agree.
"""
import os

from . import _kernels_py

if os.environ.get("PBDLEARN_PURE", "") not in ("", "0"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels
    except ImportError:  # extension not built
        kernels = _kernels_py

BACKEND = "compiled" if kernels is not _kernels_py else "python"
