"""Kernel backend selection.

The compiled extension is preferred; ``SEPCA_BACKEND=python`` forces the
pure-Python fallback.
"""

import os

from sepca import _fallback

BACKEND = "python"
kernels = _fallback

if os.environ.get("SEPCA_BACKEND", "").lower() != "python":
    try:
        from sepca import _kernels as kernels  # noqa: F811
    except ImportError:
        pass
    else:
        BACKEND = "cython"


def available_backends():
    out = {"python": _fallback}
    try:
        from sepca import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out
