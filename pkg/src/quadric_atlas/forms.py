"""Symmetric forms, form spaces, and the exact-shape linear algebra on them.

A quadratic form is represented by its symmetric matrix; a form space by an
ordered basis stacked into a (k, n, n) array.  All operations are pure
functions of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._defaults import RANK_TOL, RES_TOL, SYM_TOL, ZERO_TOL
from .errors import InputError, NumericError

__all__ = [
    "SymmetricForm",
    "FormSpace",
    "Signature",
    "RestrictionResult",
    "evaluate_form",
    "eval_map",
    "eval_map_batch",
    "signature",
    "witt_index",
    "phi_matrix",
    "is_w_independent",
    "w_orthogonal_complement",
    "restrict_forms",
    "is_nonsingular_point",
]


def _as_matrix(mat) -> np.ndarray:
    a = np.asarray(mat, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError("matrix entries must be finite")
    return a


def _as_vector(v, dim: int, name: str = "vector") -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1 or a.shape[0] != dim:
        raise InputError(f"{name} must have dimension {dim}, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class SymmetricForm:
    """An n x n real symmetric bilinear/quadratic form.

    The input is checked against the relative symmetry tolerance and then
    stored exactly symmetrized, so bilinear evaluations commute to rounding.
    """

    mat: np.ndarray

    def __post_init__(self):
        a = _as_matrix(self.mat)
        asym = np.abs(a - a.T).max() if a.size else 0.0
        bound = SYM_TOL * (1.0 + (np.abs(a).max() if a.size else 0.0))
        if asym > bound:
            raise InputError(f"matrix is not symmetric: defect {asym:.3e} > {bound:.3e}")
        sym = 0.5 * (a + a.T)
        sym.setflags(write=False)
        object.__setattr__(self, "mat", sym)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @cached_property
    def spectral_norm(self) -> float:
        return float(np.abs(np.linalg.eigvalsh(self.mat)).max()) if self.dim else 0.0


@dataclass(frozen=True)
class FormSpace:
    """An ordered basis (w_1..w_k) of a subspace of symmetric forms on R^n.

    ``stack`` has shape (k, n, n).  Construction validates shape and
    symmetry only; use :meth:`basis_rank` / :meth:`require_independent` when
    the basis must actually be linearly independent (instance files and the
    generator enforce this; restrictions may legitimately be dependent).
    """

    stack: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.stack, dtype=np.float64)
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise InputError(f"stack must be (k, n, n), got shape {a.shape}")
        if a.shape[0] < 1:
            raise InputError("a form space needs at least one basis form")
        if not np.all(np.isfinite(a)):
            raise InputError("form entries must be finite")
        asym = np.abs(a - a.transpose(0, 2, 1)).max() if a.size else 0.0
        bound = SYM_TOL * (1.0 + (np.abs(a).max() if a.size else 0.0))
        if asym > bound:
            raise InputError(f"basis forms not symmetric: defect {asym:.3e} > {bound:.3e}")
        sym = 0.5 * (a + a.transpose(0, 2, 1))
        sym.setflags(write=False)
        object.__setattr__(self, "stack", sym)

    @classmethod
    def from_matrices(cls, mats, rank_tol: float = RANK_TOL) -> "FormSpace":
        """Build from a sequence of matrices, requiring an independent basis."""
        space = cls(np.stack([_as_matrix(m) for m in mats]))
        space.require_independent(rank_tol)
        return space

    @property
    def dim_v(self) -> int:
        return self.stack.shape[1]

    @property
    def dim_w(self) -> int:
        return self.stack.shape[0]

    @property
    def basis(self) -> tuple[SymmetricForm, ...]:
        return tuple(SymmetricForm(m) for m in self.stack)

    @cached_property
    def spectral_norms(self) -> np.ndarray:
        if self.dim_v == 0:
            return np.zeros(self.dim_w)
        norms = np.abs(np.linalg.eigvalsh(self.stack)).max(axis=1)
        norms.setflags(write=False)
        return norms

    @cached_property
    def max_spectral(self) -> float:
        return float(self.spectral_norms.max()) if self.dim_v else 0.0

    def basis_rank(self, rank_tol: float = RANK_TOL) -> int:
        return _numerical_rank(self.stack.reshape(self.dim_w, -1), rank_tol)

    def require_independent(self, rank_tol: float = RANK_TOL) -> None:
        r = self.basis_rank(rank_tol)
        if r != self.dim_w:
            raise InputError(f"basis forms are dependent: rank {r} < k={self.dim_w}")

    @cached_property
    def _cache(self) -> dict:
        # scratch slot for memoized per-space results (admissibility estimates)
        return {}


@dataclass(frozen=True)
class Signature:
    """Inertia triple of a symmetric form under a relative zero tolerance."""

    n_plus: int
    n_zero: int
    n_minus: int

    @property
    def n(self) -> int:
        return self.n_plus + self.n_zero + self.n_minus


@dataclass(frozen=True)
class RestrictionResult:
    """Restriction of a form space to a subspace, with injectivity flag."""

    space: FormSpace
    injective: bool


def _numerical_rank(mat: np.ndarray, rank_tol: float = RANK_TOL) -> int:
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int((s > rank_tol * s[0]).sum())


def evaluate_form(w: SymmetricForm, u, v) -> float:
    """Bilinear value w(u, v) = u^T A v (symmetric in u, v)."""
    uu = _as_vector(u, w.dim, "u")
    vv = _as_vector(v, w.dim, "v")
    return float(uu @ w.mat @ vv)


def eval_map(space: FormSpace, v) -> np.ndarray:
    """Evaluation E(v) = (w_1(v,v), ..., w_k(v,v)) in basis order."""
    vv = _as_vector(v, space.dim_v)
    return np.einsum("kij,i,j->k", space.stack, vv, vv, optimize=True)


def eval_map_batch(space: FormSpace, vs: np.ndarray) -> np.ndarray:
    """E applied to every row of a (B, n) array; returns (B, k)."""
    arr = np.asarray(vs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != space.dim_v:
        raise InputError(f"expected (B, {space.dim_v}) array, got {arr.shape}")
    return np.einsum("kij,bi,bj->bk", space.stack, arr, arr, optimize=True)


def signature(w: SymmetricForm, zero_tol: float = ZERO_TOL) -> Signature:
    """Inertia of the form; eigenvalues within zero_tol*scale count as zero."""
    try:
        eigs = np.linalg.eigvalsh(w.mat)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue solver failed on {w.dim}x{w.dim} form: {exc}") from exc
    scale = float(np.abs(eigs).max()) if eigs.size else 0.0
    if scale == 0.0:
        scale = 1.0
    thr = zero_tol * scale
    plus = int((eigs > thr).sum())
    minus = int((eigs < -thr).sum())
    return Signature(plus, w.dim - plus - minus, minus)


def witt_index(w: SymmetricForm, zero_tol: float = ZERO_TOL) -> int:
    """min(n_plus, n_minus): mutually orthogonal hyperbolic plane count."""
    sig = signature(w, zero_tol)
    return min(sig.n_plus, sig.n_minus)


def _vectors_array(space: FormSpace, vs) -> np.ndarray:
    arr = np.asarray(vs, dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(0, space.dim_v)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != space.dim_v:
        raise InputError(f"vectors must have dimension {space.dim_v}, got shape {arr.shape}")
    return arr


def phi_matrix(space: FormSpace, vs) -> np.ndarray:
    """Stacked covectors w_j(v_i, -) as rows, (i, j) lexicographic.

    Row t*k + j is v_t^T A_j; shape (n_t*k, n).
    """
    arr = _vectors_array(space, vs)
    rows = np.einsum("ti,kij->tkj", arr, space.stack, optimize=True)
    return rows.reshape(arr.shape[0] * space.dim_w, space.dim_v)


def is_w_independent(space: FormSpace, vs, rank_tol: float = RANK_TOL) -> bool:
    """True iff the covectors {w_j(v_i, -)} span a full n_t*k dimensional space."""
    arr = _vectors_array(space, vs)
    target = arr.shape[0] * space.dim_w
    if target > space.dim_v:
        return False
    return _numerical_rank(phi_matrix(space, arr), rank_tol) == target


def w_orthogonal_complement(space: FormSpace, vs, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of {v : w(v, v_i) = 0 for all w, i}."""
    arr = _vectors_array(space, vs)
    n = space.dim_v
    if arr.shape[0] == 0:
        return np.eye(n)
    pm = phi_matrix(space, arr)
    _, s, vh = np.linalg.svd(pm, full_matrices=True)
    rank = 0
    if s.size and s[0] > 0.0:
        rank = int((s > rank_tol * s[0]).sum())
    return vh[rank:].T.copy()


def restrict_forms(space: FormSpace, basis_cols, rank_tol: float = RANK_TOL) -> RestrictionResult:
    """Restriction B^T A_j B of every basis form to the column span of B.

    ``injective`` reports whether the restricted forms are still linearly
    independent (rank k); callers decide how to treat a drop.
    """
    b = np.asarray(basis_cols, dtype=np.float64)
    if b.ndim != 2 or b.shape[0] != space.dim_v:
        raise InputError(f"restriction basis must be ({space.dim_v}, d), got {b.shape}")
    d = b.shape[1]
    if d == 0 or _numerical_rank(b, rank_tol) != d:
        raise InputError("restriction basis columns must be linearly independent")
    restricted = np.einsum("ia,kij,jb->kab", b, space.stack, b, optimize=True)
    restricted = 0.5 * (restricted + restricted.transpose(0, 2, 1))
    sub = FormSpace(restricted)
    injective = sub.basis_rank(rank_tol) == space.dim_w
    return RestrictionResult(sub, injective)


def is_nonsingular_point(
    space: FormSpace,
    v,
    res_tol: float = RES_TOL,
    rank_tol: float = RANK_TOL,
) -> bool:
    """Membership test for Y_W^ns: E(v) ~ 0 and (v) is W-independent."""
    vv = _as_vector(v, space.dim_v)
    res = float(np.linalg.norm(eval_map(space, vv)))
    bound = res_tol * (1.0 + float(vv @ vv) * space.max_spectral)
    if res > bound:
        return False
    return is_w_independent(space, [vv], rank_tol)
