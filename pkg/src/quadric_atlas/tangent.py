"""Submersion machinery: theta evaluation, Jacobians, tangent lifts and bases.

Tuples (v_0, v_1, ..., v_n) are passed as (n_t, n) arrays with the
distinguished v_0 first.  theta maps a tuple to the pairings
w_j(v_0, v_i); on W-independent tuples its v_0-partial has full row rank,
which drives both the tangent lift and the tangent-space bases of the
nonsingular zero locus.
"""

from __future__ import annotations

import numpy as np

from ._defaults import RANK_TOL, RES_TOL
from .errors import InputError, PreconditionError
from .forms import (
    FormSpace,
    _numerical_rank,
    is_nonsingular_point,
    is_w_independent,
    phi_matrix,
)

__all__ = [
    "theta_eval",
    "theta_jacobian_u0",
    "theta_jacobian_full",
    "lift_tangent",
    "tangent_basis",
    "check_zn_membership",
]


def _tuple_array(space: FormSpace, vs) -> np.ndarray:
    arr = np.asarray(vs, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != space.dim_v or arr.shape[0] < 1:
        raise InputError(
            f"tuple must be (n_t, {space.dim_v}) with n_t >= 1, got shape {arr.shape}"
        )
    return arr


def theta_eval(space: FormSpace, vs) -> np.ndarray:
    """Pairings theta(v)_ij = w_j(v_0, v_i); row 0 is w_j(v_0, v_0)."""
    arr = _tuple_array(space, vs)
    return np.einsum("kab,a,ib->ik", space.stack, arr[0], arr, optimize=True)


def theta_jacobian_u0(space: FormSpace, vs) -> np.ndarray:
    """Partial Jacobian of theta in the v_0 slot, rows (i, j) lexicographic.

    Row block i=0 is 2 v_0^T A_j (the quadratic row differentiates twice);
    blocks i >= 1 are v_i^T A_j.  Full row rank n_t*k iff the tuple is
    W-independent.
    """
    arr = _tuple_array(space, vs)
    jac = phi_matrix(space, arr)
    jac[: space.dim_w] *= 2.0
    return jac


def theta_jacobian_full(space: FormSpace, vs) -> np.ndarray:
    """Jacobian of theta in all slots.

    Output rows follow theta's (i, j) lexicographic flattening; columns are
    the concatenated slots (v_0 coords, v_1 coords, ...).
    """
    arr = _tuple_array(space, vs)
    n_t, n = arr.shape
    k = space.dim_w
    jac = np.zeros((n_t * k, n_t * n))
    pm = phi_matrix(space, arr)  # row t*k+j = v_t^T A_j
    for i in range(n_t):
        for j in range(k):
            row = i * k + j
            jac[row, :n] = pm[i * k + j]
            if i == 0:
                jac[row, :n] *= 2.0
            else:
                jac[row, i * n:(i + 1) * n] = pm[j]  # d/dv_i of v_0^T A_j v_i
    return jac


def lift_tangent(space: FormSpace, vs, us, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Solve the tangent-lift system for u_0 given slot velocities u_1..u_n.

    The system is w_j(u_0, v_0) = 0 and w_j(u_0, v_i) = -w_j(v_0, u_i) for
    i >= 1; W-independence of the tuple makes it solvable for any right-hand
    side, and the minimum-norm solution is returned.
    """
    arr = _tuple_array(space, vs)
    n_t, n = arr.shape
    k = space.dim_w
    us_arr = np.asarray(us, dtype=np.float64)
    if us_arr.size == 0:
        us_arr = us_arr.reshape(0, n)
    if us_arr.ndim == 1:
        us_arr = us_arr[None, :]
    if us_arr.shape != (n_t - 1, n):
        raise InputError(
            f"expected {n_t - 1} velocity vectors of dimension {n}, got shape {us_arr.shape}"
        )
    coeff = phi_matrix(space, arr)
    if _numerical_rank(coeff, rank_tol) != n_t * k:
        raise PreconditionError("tuple is not W-independent; lift system is rank-deficient")
    rhs = np.zeros(n_t * k)
    if n_t > 1:
        # -w_j(v_0, u_i), laid out to match the coefficient row order
        pair = np.einsum("kab,a,ib->ik", space.stack, arr[0], us_arr, optimize=True)
        rhs[k:] = -pair.reshape(-1)
    u0, *_ = np.linalg.lstsq(coeff, rhs, rcond=None)
    return u0


def tangent_basis(
    space: FormSpace,
    v,
    res_tol: float = RES_TOL,
    rank_tol: float = RANK_TOL,
) -> np.ndarray:
    """Orthonormal basis (columns) of the tangent space of Y_W^ns at v.

    The tangent space is the kernel of the k x n Jacobian 2 w_j(v, -); at a
    nonsingular point its dimension is exactly n - k.
    """
    vv = np.asarray(v, dtype=np.float64)
    if not is_nonsingular_point(space, vv, res_tol, rank_tol):
        raise PreconditionError("v is not a nonsingular point of the zero locus")
    jac = 2.0 * phi_matrix(space, [vv])
    _, s, vh = np.linalg.svd(jac, full_matrices=True)
    rank = int((s > rank_tol * s[0]).sum())
    basis = vh[rank:].T.copy()
    if basis.shape[1] != space.dim_v - space.dim_w:
        raise PreconditionError(
            f"tangent dimension {basis.shape[1]} != n - k = {space.dim_v - space.dim_w}"
        )
    return basis


def check_zn_membership(space: FormSpace, vs, res_tol: float = RES_TOL,
                        rank_tol: float = RANK_TOL) -> bool:
    """Membership in Z_n: v_0 nonsingular, and adding v_0 adds no W-dependence.

    The rank condition phi(v_0 (x) W) intersect phi(span(v_1..v_n) (x) W) = 0
    is checked as rank[phi(v_0); phi(v_1..)] = k + rank[phi(v_1..)].
    """
    arr = _tuple_array(space, vs)
    if not is_nonsingular_point(space, arr[0], res_tol, rank_tol):
        return False
    if arr.shape[0] == 1:
        return True
    rest = phi_matrix(space, arr[1:])
    stacked = np.concatenate([phi_matrix(space, [arr[0]]), rest], axis=0)
    return _numerical_rank(stacked, rank_tol) == space.dim_w + _numerical_rank(rest, rank_tol)
