"""Backend selection for the batched matrix kernels.

The compiled extension is used for the trace recurrence when it imports;
setting the environment variable ``SIGMAK_PURE_PYTHON=1`` forces the numpy
fallback.  The elementary symmetric polynomials of eigenvalue vectors always
use the vectorized numpy version, which benchmarks faster than the loop.
"""
import os

from . import _fallback

BACKENDS = {"python": _fallback}

try:
    from . import _kernels
except ImportError:  # extension not built
    _kernels = None
else:
    BACKENDS["cython"] = _kernels

if _kernels is not None and os.environ.get("SIGMAK_PURE_PYTHON", "") != "1":
    BACKEND = "cython"
else:
    BACKEND = "python"

newton_batch = BACKENDS[BACKEND].newton_batch
esp_batch = _fallback.esp_batch
