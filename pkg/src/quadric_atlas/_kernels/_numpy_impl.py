"""Pure-numpy implementations of the batched spectral kernels.

Semantics are identical to the compiled versions in ``_sigcore``: eigenvalues
of each symmetric matrix are computed with LAPACK, zero counts use the
threshold ``zero_tol * max|lam|`` per matrix (scale 1 when the matrix is
zero), margins are ``min(lam_desc[m-1], -lam_asc[m-1])``.

Batches are processed in chunks to bound the size of the assembled
``(chunk, n, n)`` temporaries.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 1024


def _counts_from_eigs(w: np.ndarray, zero_tol: float) -> np.ndarray:
    scale = np.abs(w).max(axis=1)
    scale[scale == 0.0] = 1.0
    thr = zero_tol * scale[:, None]
    plus = (w > thr).sum(axis=1)
    minus = (w < -thr).sum(axis=1)
    zero = w.shape[1] - plus - minus
    return np.stack([plus, zero, minus], axis=1).astype(np.int64)


def batch_inertia(mats: np.ndarray, zero_tol: float) -> np.ndarray:
    """Inertia counts (n_plus, n_zero, n_minus) for a (B, n, n) stack."""
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    out = np.empty((mats.shape[0], 3), dtype=np.int64)
    for lo in range(0, mats.shape[0], _CHUNK):
        hi = min(lo + _CHUNK, mats.shape[0])
        out[lo:hi] = _counts_from_eigs(np.linalg.eigvalsh(mats[lo:hi]), zero_tol)
    return out


def batch_inertia_mix(basis: np.ndarray, coeffs: np.ndarray, zero_tol: float) -> np.ndarray:
    """Inertia counts of sum_j coeffs[b, j] * basis[j] for each row b."""
    basis = np.ascontiguousarray(basis, dtype=np.float64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    out = np.empty((coeffs.shape[0], 3), dtype=np.int64)
    for lo in range(0, coeffs.shape[0], _CHUNK):
        hi = min(lo + _CHUNK, coeffs.shape[0])
        mats = np.tensordot(coeffs[lo:hi], basis, axes=(1, 0))
        out[lo:hi] = _counts_from_eigs(np.linalg.eigvalsh(mats), zero_tol)
    return out


def batch_margin_mix(basis: np.ndarray, coeffs: np.ndarray, m: int) -> np.ndarray:
    """Raw level-m margins min(lam_plus_m, -lam_minus_m) per coefficient row.

    ``lam_plus_m`` is the m-th largest and ``lam_minus_m`` the m-th smallest
    eigenvalue of the mixed form; no sentinel substitution is applied here.
    """
    basis = np.ascontiguousarray(basis, dtype=np.float64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    n = basis.shape[1]
    if not 1 <= m <= n:
        raise ValueError(f"level m={m} out of range for n={n}")
    out = np.empty(coeffs.shape[0], dtype=np.float64)
    for lo in range(0, coeffs.shape[0], _CHUNK):
        hi = min(lo + _CHUNK, coeffs.shape[0])
        mats = np.tensordot(coeffs[lo:hi], basis, axes=(1, 0))
        w = np.linalg.eigvalsh(mats)
        out[lo:hi] = np.minimum(w[:, n - m], -w[:, m - 1])
    return out
