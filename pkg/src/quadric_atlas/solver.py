"""Constructive solution of the simultaneous quadratic system E(v) = t.

The recursion mirrors the convexity proof of evaluation surjectivity: pick a
seed vector v1 with E(v1) != 0, restrict the annihilator of E(v1) to the
W-orthogonal complement of v1, solve the (k-1)-dimensional subproblem there,
and cancel the leftover multiple of E(v1) along the ray through v1 when its
sign allows (E(a v1 + b v3) = a^2 E(v1) + b^2 E(v3) for W-orthogonal pairs).
The sign is not constructively controlled, so failures restart with a fresh
v1; a predictor-corrector continuation acts as the final fallback.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from ._defaults import ANGLE_TOL, ORTHO_TOL, RANK_TOL, RES_TOL, ZERO_TOL
from ._rng import derive_rng
from .errors import (
    ClearanceError,
    InfeasibleError,
    InputError,
    NoSolutionError,
    NumericError,
    PreconditionError,
    RaySignError,
)
from .forms import (
    FormSpace,
    SymmetricForm,
    _numerical_rank,
    eval_map,
    is_nonsingular_point,
    is_w_independent,
    phi_matrix,
    w_orthogonal_complement,
)
from .admissibility import estimate_admissibility

__all__ = [
    "AvoidSet",
    "SolveOptions",
    "SolveResult",
    "solve_form_value",
    "orthogonal_combine",
    "cancel_on_ray",
    "solve_E",
    "solve_null",
    "continuation_solve",
    "clear_avoid",
]


@dataclass(frozen=True)
class AvoidSet:
    """Finite union of linear subspaces with a clearance radius.

    Each subspace is an (n, d) spanning array; clearance is the minimum
    admissible distance from the normalized solution to each subspace.
    """

    subspaces: tuple
    clearance: float

    def __post_init__(self):
        if not self.clearance > 0:
            raise InputError("clearance must be positive")
        bases = []
        for s in self.subspaces:
            arr = np.asarray(s, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] == 0:
                raise InputError("avoid subspaces must be nonempty (n, d) arrays")
            if _numerical_rank(arr) != arr.shape[1]:
                raise InputError("avoid subspace spanning arrays must have full column rank")
            q, _ = np.linalg.qr(arr)
            bases.append(q)
        object.__setattr__(self, "subspaces", tuple(bases))

    def distances(self, v: np.ndarray) -> np.ndarray:
        """Distance of v/|v| to each subspace."""
        vhat = v / np.linalg.norm(v)
        return np.array(
            [float(np.linalg.norm(vhat - q @ (q.T @ vhat))) for q in self.subspaces]
        )

    def violated(self, v: np.ndarray) -> bool:
        if not self.subspaces:
            return False
        return bool((self.distances(v) < self.clearance).any())


@dataclass(frozen=True)
class SolveOptions:
    res_tol: float = RES_TOL
    max_restarts: int = 64
    max_depth: int = 16
    seed: int = 0
    avoid: AvoidSet | None = None
    fallback_enabled: bool = True
    check_admissibility: bool = True

    def __post_init__(self):
        if not self.res_tol > 0:
            raise InputError("res_tol must be positive")
        if self.max_restarts < 1:
            raise InputError("max_restarts must be >= 1")


@dataclass(frozen=True)
class SolveResult:
    v: np.ndarray
    residual: float
    restarts_used: int
    path_taken: str


def _ortho_threshold(space: FormSpace, v1: np.ndarray, v3: np.ndarray,
                     ortho_tol: float | None) -> float:
    base = ORTHO_TOL if ortho_tol is None else ortho_tol
    n1 = float(np.linalg.norm(v1))
    n3 = float(np.linalg.norm(v3))
    return base * (1.0 + n1 * n3) * max(space.max_spectral, 1e-300)


def _pair_defect(space: FormSpace, u: np.ndarray, v: np.ndarray) -> float:
    return float(np.abs(np.einsum("kij,i,j->k", space.stack, u, v, optimize=True)).max())


def _eigenspace_sample(vecs: np.ndarray, idx: np.ndarray,
                       rng: np.random.Generator | None) -> np.ndarray:
    """Unit vector in the span of the selected eigenvectors.

    Deterministic (first selected eigenvector) without an rng; otherwise a
    random mixture (a random sign for 1-dimensional eigenspaces), which lets
    repeated solves reach every component of the solution set.
    """
    if rng is None:
        return vecs[:, idx[0]]
    while True:
        coeff = rng.standard_normal(idx.size)
        nrm = float(np.linalg.norm(coeff))
        if nrm > 1e-6:
            return vecs[:, idx] @ (coeff / nrm)


def solve_form_value(w: SymmetricForm, t: float, tol: float = RES_TOL,
                     zero_tol: float = ZERO_TOL,
                     rng: np.random.Generator | None = None) -> np.ndarray:
    """Vector v with w(v, v) = t, built from the eigendecomposition.

    Positive targets scale a positive-eigenspace vector, negative ones a
    negative-eigenspace vector; t = 0 mixes one of each so the cross terms
    vanish exactly (the eigenspaces are mutually orthogonal under both the
    inner product and the form).  Raises InfeasibleError when the signature
    cannot reach the sign of t.
    """
    eigs, vecs = np.linalg.eigh(w.mat)
    scale = float(np.abs(eigs).max()) if eigs.size else 0.0
    thr = zero_tol * (scale if scale > 0 else 1.0)
    pos = np.where(eigs > thr)[0][::-1]   # descending: strongest first
    neg = np.where(eigs < -thr)[0]
    t = float(t)
    if t > 0:
        if pos.size == 0:
            raise InfeasibleError(f"target {t} > 0 but the form has no positive direction")
        z = _eigenspace_sample(vecs, pos, rng)
        v = z * np.sqrt(t / float(z @ w.mat @ z))
    elif t < 0:
        if neg.size == 0:
            raise InfeasibleError(f"target {t} < 0 but the form has no negative direction")
        q = _eigenspace_sample(vecs, neg, rng)
        v = q * np.sqrt(t / float(q @ w.mat @ q))
    else:
        if pos.size == 0 or neg.size == 0:
            raise InfeasibleError("null target needs an indefinite form")
        z = _eigenspace_sample(vecs, pos, rng)
        q = _eigenspace_sample(vecs, neg, rng)
        v = z / np.sqrt(float(z @ w.mat @ z)) + q / np.sqrt(-float(q @ w.mat @ q))
    resid = abs(float(v @ w.mat @ v) - t)
    if resid > tol * (1.0 + abs(t)):
        raise NumericError(f"eigen-construction residual {resid:.3e} above tolerance")
    return v


def orthogonal_combine(space: FormSpace, v1, v3, a: float, b: float,
                       ortho_tol: float | None = None):
    """Combination a*v1 + b*v3 with its predicted evaluation.

    Requires v1 W-orthogonal to v3; then E(a v1 + b v3) equals
    a^2 E(v1) + b^2 E(v3) up to twice the orthogonality defect times |ab|.
    Returns (vector, prediction).
    """
    v1 = np.asarray(v1, dtype=np.float64)
    v3 = np.asarray(v3, dtype=np.float64)
    defect = _pair_defect(space, v1, v3)
    thr = _ortho_threshold(space, v1, v3, ortho_tol)
    if defect > thr:
        raise PreconditionError(
            f"v1 and v3 are not W-orthogonal: defect {defect:.3e} > {thr:.3e}"
        )
    prediction = a * a * eval_map(space, v1) + b * b * eval_map(space, v3)
    return a * v1 + b * v3, prediction


def cancel_on_ray(space: FormSpace, v1, u, c: float,
                  ortho_tol: float | None = None) -> np.ndarray:
    """Cancel E(u) = c E(v1) (c <= 0) against the ray through v1.

    Returns sqrt(-c) v1 + u, whose evaluation vanishes where the segment of
    evaluations crosses the origin; c = 0 returns u unchanged.  Positive c
    raises RaySignError so the caller can restart with a fresh v1.
    """
    if c > 0:
        raise RaySignError(c)
    v1 = np.asarray(v1, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if c == 0:
        return u.copy()
    combined, _ = orthogonal_combine(space, v1, u, float(np.sqrt(-c)), 1.0, ortho_tol)
    return combined


def _annihilator_basis(e1: np.ndarray) -> np.ndarray:
    """Orthonormal basis (k, k-1) of the coefficient annihilator of e1."""
    k = e1.shape[0]
    _, _, vh = np.linalg.svd(e1[None, :])
    return vh[1:].T.copy() if k > 1 else np.zeros((1, 0))


@dataclass
class _Trace:
    restarts: int = 0
    c_signs: list = field(default_factory=list)
    best_v: np.ndarray | None = None
    best_residual: float = np.inf

    def offer(self, v: np.ndarray, residual: float):
        if residual < self.best_residual:
            self.best_residual = residual
            self.best_v = v


def _budget(max_restarts: int, depth: int) -> int:
    return max(4, max_restarts // (4**depth))


def _solve_rec(space: FormSpace, t: np.ndarray, rng: np.random.Generator,
               opts: SolveOptions, depth: int, trace: _Trace) -> np.ndarray:
    k, n = space.dim_w, space.dim_v
    abs_tol = opts.res_tol * (1.0 + float(np.linalg.norm(t)))
    if depth > opts.max_depth:
        raise NoSolutionError(f"recursion exceeded max_depth={opts.max_depth}")
    if k == 1:
        return solve_form_value(space.basis[0], float(t[0]), opts.res_tol, rng=rng)
    budget = _budget(opts.max_restarts, depth)
    for attempt in range(budget):
        if depth == 0:
            trace.restarts = attempt
        v1 = rng.standard_normal(n)
        v1 /= np.linalg.norm(v1)
        if not is_w_independent(space, [v1]):
            continue
        e1 = eval_map(space, v1)
        e1_norm = float(np.linalg.norm(e1))
        if e1_norm <= 1e-12 * max(space.max_spectral, 1e-300):
            continue
        basis_q = w_orthogonal_complement(space, [v1])
        if basis_q.shape[1] != n - k:
            continue
        ann = _annihilator_basis(e1)  # (k, k-1)
        sub_stack = np.tensordot(ann.T, space.stack, axes=(1, 0))
        sub_stack = np.einsum("ia,yij,jb->yab", basis_q, sub_stack, basis_q, optimize=True)
        sub_stack = 0.5 * (sub_stack + sub_stack.transpose(0, 2, 1))
        sub_space = FormSpace(sub_stack)
        if sub_space.basis_rank(RANK_TOL) != k - 1:
            continue  # restriction not injective for this v1
        tau = ann.T @ t
        try:
            x = _solve_rec(sub_space, tau, rng, opts, depth + 1, trace)
        except (InfeasibleError, NoSolutionError):
            continue
        u = basis_q @ x
        diff = eval_map(space, u) - t
        c = float(diff @ e1) / (e1_norm * e1_norm)
        if depth == 0:
            trace.c_signs.append(1 if c > 0 else -1)
        if c > 0:
            # tolerate a vanishing positive overshoot: dropping the ray term
            # leaves residual |c| * |e1|
            if c * e1_norm <= 0.1 * abs_tol:
                c = 0.0
            else:
                trace.offer(u, float(np.linalg.norm(diff)) / (1.0 + float(np.linalg.norm(t))))
                continue
        v = cancel_on_ray(space, v1, u, c)
        residual = float(np.linalg.norm(eval_map(space, v) - t))
        if residual <= abs_tol:
            return v
        trace.offer(v, residual / (1.0 + float(np.linalg.norm(t))))
    raise NoSolutionError(
        f"restart budget {budget} exhausted at depth {depth}",
        best_residual=trace.best_residual,
        c_signs=trace.c_signs,
    )


def _admissibility_warning(space: FormSpace, opts: SolveOptions) -> None:
    k = space.dim_w
    needed = k * k + k - 1
    key = ("madm-quick", 128)
    cached = space._cache.get(key)
    if cached is None:
        # cheap screen: uniform only (refinement can only lower the estimate,
        # so skipping it never creates a spurious warning)
        cached = estimate_admissibility(space, 128, seed=0, refine=False).m_hat
        space._cache[key] = cached
    if cached < needed:
        warnings.warn(
            f"estimated admissibility {cached} is below the surjectivity "
            f"hypothesis k^2+k-1 = {needed}; the solver may fail",
            stacklevel=3,
        )


def solve_E(space: FormSpace, t, opts: SolveOptions | None = None) -> SolveResult:
    """Find v with E(v) = t to relative residual res_tol, clearing the avoid set.

    Follows the recursive construction with randomized restarts; when the
    restart budget is exhausted and fallback is enabled, continuation takes
    over from the best iterate.
    """
    opts = opts or SolveOptions()
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    if t.shape[0] != space.dim_w:
        raise InputError(f"target must have length k={space.dim_w}, got {t.shape[0]}")
    if opts.check_admissibility:
        _admissibility_warning(space, opts)
    rng = derive_rng(opts.seed, "solve-E")
    trace = _Trace()
    t_norm = float(np.linalg.norm(t))
    try:
        v = _solve_rec(space, t, rng, opts, 0, trace)
        residual = float(np.linalg.norm(eval_map(space, v) - t)) / (1.0 + t_norm)
        path = "recursive" if space.dim_w == 1 else "combined"
    except (InfeasibleError, NoSolutionError) as exc:
        if not opts.fallback_enabled:
            raise NoSolutionError(
                f"recursive solve failed and fallback is disabled: {exc}",
                best_residual=trace.best_residual,
                c_signs=trace.c_signs,
            ) from exc
        v_start = trace.best_v
        if v_start is None:
            v_start = _sample_independent(space, rng)
        res = continuation_solve(space, v_start, t, opts)
        v, residual, path = res.v, res.residual, "continuation"
    if opts.avoid is not None and opts.avoid.subspaces:
        v = clear_avoid(space, v, opts.avoid, opts, target=t)
        residual = float(np.linalg.norm(eval_map(space, v) - t)) / (1.0 + t_norm)
    return SolveResult(v=v, residual=residual, restarts_used=trace.restarts,
                       path_taken=path)


def solve_null(space: FormSpace, opts: SolveOptions | None = None) -> SolveResult:
    """solve_E at the origin, with the nonsingularity guarantee.

    Resamples (seed offsets) until the returned null vector passes the
    W-independence rank test, so it lies on Y_W^ns.
    """
    opts = opts or SolveOptions()
    zero = np.zeros(space.dim_w)
    last = None
    for shift in range(16):
        shifted = opts if shift == 0 else replace(opts, seed=opts.seed + 7919 * shift)
        result = solve_E(space, zero, shifted)
        last = result
        if is_nonsingular_point(space, result.v, opts.res_tol):
            return result
    raise NoSolutionError(
        "could not reach a nonsingular null vector after 16 reseedings",
        best_residual=last.residual if last else None,
    )


def _sample_independent(space: FormSpace, rng: np.random.Generator) -> np.ndarray:
    for _ in range(256):
        v = rng.standard_normal(space.dim_v)
        v /= np.linalg.norm(v)
        if is_w_independent(space, [v]):
            return v
    raise NumericError("could not sample a W-independent start vector")


def _newton_correct(space: FormSpace, v: np.ndarray, target: np.ndarray,
                    abs_tol: float, max_iter: int = 16):
    """Minimum-norm Gauss-Newton correction of E(v) to the target value."""
    for _ in range(max_iter):
        resid = eval_map(space, v) - target
        err = float(np.linalg.norm(resid))
        if err <= abs_tol:
            return v, True
        jac = 2.0 * phi_matrix(space, [v])
        delta, *_ = np.linalg.lstsq(jac, resid, rcond=None)
        if not np.all(np.isfinite(delta)):
            return v, False
        v = v - delta
    return v, float(np.linalg.norm(eval_map(space, v) - target)) <= abs_tol


def continuation_solve(space: FormSpace, v_start, t,
                       opts: SolveOptions | None = None,
                       max_reseeds: int = 8, sing_tol: float = 1e-8) -> SolveResult:
    """Predictor-corrector tracking of the segment from E(v_start) to t.

    Euler prediction along the target derivative, minimum-norm Gauss-Newton
    correction with the Jacobian 2 w_j(v, -), adaptive step halving, and
    reseeding from fresh W-independent samples whenever the Jacobian loses
    rank.  Justified by Jacobian surjectivity at W-independent points.
    """
    opts = opts or SolveOptions()
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    if t.shape[0] != space.dim_w:
        raise InputError(f"target must have length k={space.dim_w}")
    v0 = np.asarray(v_start, dtype=np.float64)
    if v0.shape != (space.dim_v,):
        raise InputError("v_start has the wrong dimension")
    if not is_w_independent(space, [v0]):
        raise PreconditionError("v_start must be W-independent as a 1-tuple")
    rng = derive_rng(opts.seed, "continuation")
    abs_tol = opts.res_tol * (1.0 + float(np.linalg.norm(t)))
    log = []
    v = v0
    for reseed in range(max_reseeds):
        if reseed > 0:
            v = _sample_independent(space, rng)
        e0 = eval_map(space, v)
        direction = t - e0
        s, h = 0.0, 0.25
        stalled = False
        while s < 1.0 - 1e-15:
            h = min(h, 1.0 - s)
            jac = 2.0 * phi_matrix(space, [v])
            sv = np.linalg.svd(jac, compute_uv=False)
            if sv[0] == 0.0 or sv[-1] < sing_tol * sv[0]:
                log.append(f"reseed {reseed}: Jacobian near rank-deficient at s={s:.3f}")
                stalled = True
                break
            dv, *_ = np.linalg.lstsq(jac, direction, rcond=None)
            target = e0 + (s + h) * direction
            cand, ok = _newton_correct(space, v + h * dv, target, 0.5 * abs_tol)
            if ok:
                v, s = cand, s + h
                h = min(2.0 * h, 0.5)
            else:
                h *= 0.5
                if h < 1e-12:
                    log.append(f"reseed {reseed}: step underflow at s={s:.3f}")
                    stalled = True
                    break
        if not stalled:
            v, ok = _newton_correct(space, v, t, abs_tol)
            if ok:
                residual = float(np.linalg.norm(eval_map(space, v) - t)) / (
                    1.0 + float(np.linalg.norm(t))
                )
                return SolveResult(v=v, residual=residual, restarts_used=reseed,
                                   path_taken="continuation")
            log.append(f"reseed {reseed}: final polish failed")
    raise NumericError("continuation failed after all reseeds", trace=log)


def clear_avoid(space: FormSpace, v, avoid: AvoidSet | None,
                opts: SolveOptions | None = None, target=None) -> np.ndarray:
    """Move v clear of the avoid set while preserving its evaluation.

    Perturbs along the kernel of the Jacobian (tangent to the level set) and
    re-corrects; if tangent moves cannot clear (disconnected level sets),
    falls back to fresh solves of the same target.
    """
    opts = opts or SolveOptions()
    v = np.asarray(v, dtype=np.float64)
    if avoid is None or not avoid.subspaces:
        return v
    if target is None:
        target = eval_map(space, v)
    else:
        target = np.asarray(target, dtype=np.float64).reshape(-1)
    abs_tol = opts.res_tol * (1.0 + float(np.linalg.norm(target)))
    if not avoid.violated(v):
        return v
    rng = derive_rng(opts.seed, "clear-avoid")
    vnorm = float(np.linalg.norm(v))
    for _ in range(32):
        jac = 2.0 * phi_matrix(space, [v])
        _, s, vh = np.linalg.svd(jac, full_matrices=True)
        rank = int((s > RANK_TOL * s[0]).sum()) if s.size and s[0] > 0 else 0
        kernel = vh[rank:].T
        if kernel.shape[1] == 0:
            break
        tau = kernel @ rng.standard_normal(kernel.shape[1])
        tau /= np.linalg.norm(tau)
        for eps in (0.1, 0.3, 0.9):
            cand, ok = _newton_correct(space, v + eps * vnorm * tau, target, abs_tol)
            if ok and not avoid.violated(cand):
                return cand
    # tangent moves exhausted; the cleared region may be a different component
    for shift in range(1, 17):
        fresh = replace(opts, seed=opts.seed + 104729 * shift, avoid=None)
        try:
            res = solve_E(space, target, fresh)
        except (NoSolutionError, NumericError, InfeasibleError):
            continue
        if not avoid.violated(res.v):
            return res.v
    raise ClearanceError(
        f"could not clear the avoid set (clearance {avoid.clearance}) in the try budget"
    )
