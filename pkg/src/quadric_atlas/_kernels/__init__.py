"""Batched spectral kernels with backend selection at import time.

The compiled extension (``_sigcore``, Cython + LAPACK) is preferred; the
pure-numpy fallback is used when the extension is unavailable or when
``QUADRIC_ATLAS_FORCE_FALLBACK`` is set to a non-empty value other than
``0``.  Both backends implement the same contract; ``BACKEND`` records
which one is active.
"""

from __future__ import annotations

import os

import numpy as np

from . import _numpy_impl

if os.environ.get("QUADRIC_ATLAS_FORCE_FALLBACK", "0") not in ("", "0"):
    _impl = _numpy_impl
    BACKEND = "numpy"
else:
    try:
        from . import _sigcore as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _numpy_impl
        BACKEND = "numpy"


def _c64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def batch_inertia(mats, zero_tol: float) -> np.ndarray:
    """(B, 3) inertia counts (n_plus, n_zero, n_minus) of a matrix stack."""
    return _impl.batch_inertia(_c64(mats), float(zero_tol))


def batch_inertia_mix(basis, coeffs, zero_tol: float) -> np.ndarray:
    """(B, 3) inertia counts of the mixed forms sum_j coeffs[b, j]*basis[j]."""
    return _impl.batch_inertia_mix(_c64(basis), _c64(coeffs), float(zero_tol))


def batch_margin_mix(basis, coeffs, m: int) -> np.ndarray:
    """(B,) raw level-m margins of the mixed forms (no sentinel handling)."""
    return _impl.batch_margin_mix(_c64(basis), _c64(coeffs), int(m))
