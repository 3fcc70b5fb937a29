"""Verified piecewise-linear paths between nonsingular points of the zero locus.

Consecutive knots are kept W-orthogonal, so every segment lies exactly on
the common zero locus: for u, v with E(u) = E(v) = 0 and u W-orthogonal to
v, w((1-s)u + sv, (1-s)u + sv) = (1-s)^2 w(u,u) + s^2 w(v,v) = 0.  Knots are
also kept linearly independent so segments miss the origin.

Two constructions are provided: the two-segment midpoint path (solve for a
null vector in the W-orthogonal complement of both endpoints) and the
five-knot chain, which inserts a jointly W-independent middle knot first and
repairs pairs whose complement degenerates.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from ._defaults import ANGLE_TOL, ORTHO_TOL, RANK_TOL, RES_TOL
from ._rng import derive_rng, thread_count
from .errors import (
    ClearanceError,
    EscalationNeeded,
    InfeasibleError,
    InputError,
    NoPathError,
    NoSolutionError,
    NumericError,
    PreconditionError,
)
from .forms import (
    FormSpace,
    _numerical_rank,
    eval_map_batch,
    is_nonsingular_point,
    phi_matrix,
    w_orthogonal_complement,
)
from .admissibility import estimate_admissibility
from .solver import AvoidSet, SolveOptions, solve_null

__all__ = [
    "SegmentInfo",
    "PiecewisePath",
    "PathReport",
    "SphericalLift",
    "ConnectStats",
    "midpoint_find",
    "connect_two",
    "connect_chain5",
    "verify_path",
    "spherical_lift",
    "monte_carlo_connectivity",
]


@dataclass(frozen=True)
class SegmentInfo:
    """Per-segment metadata of a piecewise-linear path."""

    ortho_defect: float
    min_norm: float
    angle: float
    avoid_clearances: tuple


@dataclass(frozen=True)
class PiecewisePath:
    """Knot sequence with consecutive knots W-orthogonal."""

    knots: tuple
    segments: tuple

    @property
    def n_knots(self) -> int:
        return len(self.knots)


@dataclass(frozen=True)
class PathReport:
    """Verification outcome for a path."""

    max_residual_on_samples: float
    segment_min_distances: tuple
    verified: bool
    failures: tuple


@dataclass(frozen=True)
class SphericalLift:
    """Path normalized to the unit sphere and its minimum pre-normalization norm."""

    path: PiecewisePath
    min_prenorm: float


@dataclass(frozen=True)
class ConnectStats:
    """Aggregate results of a Monte Carlo connectivity experiment."""

    n_pairs: int
    successes: int
    success_rate: float
    escalations: int
    escalation_rate: float
    mean_knots: float
    mean_restarts: float
    failures: tuple


def _orth(cols: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column span, dropping dependent columns."""
    if cols.size == 0:
        return cols.reshape(cols.shape[0], 0)
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return cols[:, :0]
    rank = int((s > rank_tol * s[0]).sum())
    return u[:, :rank]


def _segment_min_norm(u: np.ndarray, v: np.ndarray) -> float:
    """Exact minimum of |(1-s)u + sv| over s in [0, 1]."""
    d = v - u
    dd = float(d @ d)
    if dd == 0.0:
        return float(np.linalg.norm(u))
    s = min(1.0, max(0.0, -float(u @ d) / dd))
    return float(np.linalg.norm(u + s * d))


def _segment_subspace_distance(u: np.ndarray, v: np.ndarray, basis: np.ndarray) -> float:
    """Exact min over the segment of the normalized-point distance to a subspace.

    Minimizes |(I - P P^T) x(s)| / |x(s)| for x(s) = (1-s)u + sv.  The ratio
    restricted to the span of u, v is a 2x2 generalized Rayleigh quotient
    whose interior critical value is the smallest generalized eigenvalue;
    endpoint values cover the boundary of the parameter interval.
    """
    b = np.stack([u, v], axis=1)
    gr = b.T @ b
    c = basis.T @ b
    mr = gr - c.T @ c
    candidates = []
    for col, w in ((0, u), (1, v)):
        nrm2 = gr[col, col]
        if nrm2 > 0:
            candidates.append(max(0.0, float(mr[col, col] / nrm2)))
    det = float(np.linalg.det(gr))
    if det > 1e-14 * max(gr[0, 0], gr[1, 1]) ** 2:
        eigvals, eigvecs = scipy.linalg.eigh(mr, gr)
        c0 = eigvecs[:, 0]
        if c0[0] * c0[1] >= 0:  # minimizing direction crosses the segment cone
            candidates.append(max(0.0, float(eigvals[0])))
    return float(np.sqrt(min(candidates))) if candidates else 0.0


def _angle_between(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    c = abs(float(u @ v)) / (nu * nv)
    return float(np.arccos(min(1.0, c)))


def _pair_defect(space: FormSpace, u: np.ndarray, v: np.ndarray) -> float:
    return float(np.abs(np.einsum("kij,i,j->k", space.stack, u, v, optimize=True)).max())


def _build_path(space: FormSpace, knots, avoid: AvoidSet | None) -> PiecewisePath:
    knots = tuple(np.asarray(k, dtype=np.float64) for k in knots)
    segments = []
    for a, b in zip(knots[:-1], knots[1:]):
        clearances = ()
        if avoid is not None and avoid.subspaces:
            clearances = tuple(
                _segment_subspace_distance(a, b, q) for q in avoid.subspaces
            )
        segments.append(
            SegmentInfo(
                ortho_defect=_pair_defect(space, a, b),
                min_norm=_segment_min_norm(a, b),
                angle=_angle_between(a, b),
                avoid_clearances=clearances,
            )
        )
    return PiecewisePath(knots=knots, segments=tuple(segments))


def _ortho_threshold(space: FormSpace, u: np.ndarray, v: np.ndarray) -> float:
    scale = max(space.max_spectral, 1e-300)
    return ORTHO_TOL * (1.0 + float(np.linalg.norm(u)) * float(np.linalg.norm(v))) * scale


def _augmented_avoid(avoid: AvoidSet | None, endpoints) -> AvoidSet | None:
    """Avoid set extended with the cones span(endpoint, S) for each subspace."""
    if avoid is None or not avoid.subspaces:
        return avoid
    bases = []
    for s in avoid.subspaces:
        bases.append(s)
        for p in endpoints:
            cone = _orth(np.concatenate([p[:, None], s], axis=1))
            if cone.shape[1]:
                bases.append(cone)
    return AvoidSet(tuple(bases), avoid.clearance)


def _avoid_to_subspace(avoid: AvoidSet | None, q: np.ndarray) -> AvoidSet | None:
    """Conservative image of an avoid set in the coordinates of span(Q).

    For x in the subspace, dist(Qx/|x|, S) >= dist(x/|x|, span(Q^T P_S)), so
    clearing the projected set clears the original one.
    """
    if avoid is None or not avoid.subspaces:
        return None
    bases = []
    for s in avoid.subspaces:
        g = _orth(q.T @ s)
        if g.shape[1]:
            bases.append(g)
    if not bases:
        return None
    return AvoidSet(tuple(bases), avoid.clearance)


def midpoint_find(space: FormSpace, p, q, opts: SolveOptions | None = None) -> np.ndarray:
    """Find r on Y_W^ns that is W-orthogonal to both p and q.

    Solves for a null vector of the forms restricted to the W-orthogonal
    complement of (p, q); both segments p-r and r-q then lie exactly on the
    zero locus.  Raises EscalationNeeded when the restricted problem is
    degenerate or under-admissible, signalling the caller to use the
    five-knot chain.
    """
    opts = opts or SolveOptions()
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    for name, x in (("p", p), ("q", q)):
        if not is_nonsingular_point(space, x, opts.res_tol):
            raise InputError(f"{name} is not a nonsingular point of the zero locus")
    comp = w_orthogonal_complement(space, [p, q])
    d = comp.shape[1]
    if d == 0:
        raise EscalationNeeded("W-orthogonal complement of the pair is trivial")
    restricted = np.einsum("ia,kij,jb->kab", comp, space.stack, comp, optimize=True)
    restricted = 0.5 * (restricted + restricted.transpose(0, 2, 1))
    flat = restricted.reshape(space.dim_w, -1)
    sing = np.linalg.svd(flat, compute_uv=False)
    # floor against the unrestricted scale: a numerically-zero restriction
    # must not report spurious rank from its own rounding noise
    thr = RANK_TOL * max(float(sing[0]) if sing.size else 0.0, space.max_spectral)
    rank = int((sing > thr).sum()) if sing.size else 0
    aug = _augmented_avoid(opts.avoid, (p, q))
    if rank == 0:
        # W vanishes identically on the complement: any direction in it is null
        rng = derive_rng(opts.seed, "midpoint-degenerate")
        for _ in range(64):
            r = comp @ rng.standard_normal(d)
            r /= np.linalg.norm(r)
            if not is_nonsingular_point(space, r, opts.res_tol):
                continue
            if _angle_between(r, p) < ANGLE_TOL or _angle_between(r, q) < ANGLE_TOL:
                continue
            if aug is not None and aug.violated(r):
                continue
            return r
        raise EscalationNeeded("degenerate restriction yielded no usable direction")
    _, _, vh = np.linalg.svd(flat, full_matrices=False)
    reduced = vh[:rank].reshape(rank, d, d)
    reduced = 0.5 * (reduced + reduced.transpose(0, 2, 1))
    sub_space = FormSpace(reduced)
    needed = rank * rank + rank - 1
    if needed > 0:
        est = estimate_admissibility(sub_space, 128, seed=opts.seed, refine=False)
        if est.m_hat < needed:
            raise EscalationNeeded(
                f"restricted admissibility estimate {est.m_hat} below {needed}"
            )
    sub_avoid = _avoid_to_subspace(aug, comp)
    for attempt in range(16):
        sub_opts = replace(
            opts,
            seed=opts.seed + 524287 * attempt,
            avoid=sub_avoid,
            check_admissibility=False,
        )
        try:
            res = solve_null(sub_space, sub_opts)
        except (InfeasibleError, NoSolutionError, NumericError, ClearanceError) as exc:
            raise EscalationNeeded(f"restricted null solve failed: {exc}") from exc
        r = comp @ res.v
        if not is_nonsingular_point(space, r, opts.res_tol):
            continue
        if _angle_between(r, p) < ANGLE_TOL or _angle_between(r, q) < ANGLE_TOL:
            continue
        if aug is not None and aug.violated(r):
            continue
        return r
    raise EscalationNeeded("restricted solves never satisfied the knot conditions")


def _knot_failures(space: FormSpace, path: PiecewisePath, opts: SolveOptions) -> list:
    failures = []
    for i, knot in enumerate(path.knots):
        if not is_nonsingular_point(space, knot, opts.res_tol):
            failures.append(f"knot {i} is not a nonsingular zero")
    for i, (a, b) in enumerate(zip(path.knots[:-1], path.knots[1:])):
        info = path.segments[i]
        if info.ortho_defect > _ortho_threshold(space, a, b):
            failures.append(
                f"segment {i}: W-orthogonality defect {info.ortho_defect:.3e}"
            )
        if info.angle < ANGLE_TOL:
            failures.append(f"segment {i}: consecutive knots nearly parallel")
    return failures


def connect_two(space: FormSpace, p, q, opts: SolveOptions | None = None) -> PiecewisePath:
    """Two-segment path (p, r, q) through a common W-orthogonal midpoint."""
    opts = opts or SolveOptions()
    r = midpoint_find(space, p, q, opts)
    path = _build_path(space, (p, r, q), opts.avoid)
    failures = _knot_failures(space, path, opts)
    if failures:
        raise EscalationNeeded("midpoint path failed validation: " + "; ".join(failures))
    return path


def connect_chain5(space: FormSpace, p, q, opts: SolveOptions | None = None) -> PiecewisePath:
    """Five-knot chain (p, g1, g2, g3, q).

    The middle knot g2 is a nonsingular null vector that is jointly
    W-independent from the pair (adding it must not add W-dependence), which
    restores enough admissibility for the two midpoint solves even when the
    pair itself is degenerate.
    """
    opts = opts or SolveOptions()
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    pair_rank = _numerical_rank(phi_matrix(space, [p, q]))
    g2 = None
    for attempt in range(32):
        sub_opts = replace(opts, seed=opts.seed + 786433 * attempt,
                           check_admissibility=False)
        try:
            cand = solve_null(space, sub_opts).v
        except (InfeasibleError, NoSolutionError, NumericError, ClearanceError) as exc:
            raise NoPathError(f"middle-knot solve failed: {exc}", stage="g2") from exc
        stacked = np.concatenate(
            [phi_matrix(space, [p, q]), phi_matrix(space, [cand])], axis=0
        )
        if _numerical_rank(stacked) == pair_rank + space.dim_w:
            g2 = cand
            break
    if g2 is None:
        raise NoPathError("no jointly W-independent middle knot found", stage="g2")
    try:
        g1 = midpoint_find(space, p, g2, opts)
    except EscalationNeeded as exc:
        raise NoPathError(f"first midpoint failed: {exc}", stage="g1") from exc
    try:
        g3 = midpoint_find(space, g2, q, opts)
    except EscalationNeeded as exc:
        raise NoPathError(f"second midpoint failed: {exc}", stage="g3") from exc
    path = _build_path(space, (p, g1, g2, g3, q), opts.avoid)
    failures = _knot_failures(space, path, opts)
    if failures:
        raise NoPathError("chain failed validation: " + "; ".join(failures), stage="chain")
    return path


def verify_path(space: FormSpace, path: PiecewisePath, n_samples_per_segment: int = 100,
                opts: SolveOptions | None = None) -> PathReport:
    """Independent re-verification of a path.

    Checks knot invariants, samples every segment (uniform parameters plus
    endpoints and midpoint) for the normalized evaluation residual, and
    computes exact per-segment minimum distances to the origin and to each
    avoid subspace along the normalized segment.
    """
    opts = opts or SolveOptions()
    failures = _knot_failures(space, path, opts)
    scale = max(space.max_spectral, 1e-300)
    params = np.unique(np.concatenate([
        np.linspace(0.0, 1.0, max(2, int(n_samples_per_segment))),
        np.array([0.0, 0.5, 1.0]),
    ]))
    max_res = 0.0
    seg_distances = []
    for i, (a, b) in enumerate(zip(path.knots[:-1], path.knots[1:])):
        pts = np.outer(1.0 - params, a) + np.outer(params, b)
        evals = eval_map_batch(space, pts)
        norms2 = np.einsum("bi,bi->b", pts, pts)
        res = np.linalg.norm(evals, axis=1) / (1.0 + norms2 * scale)
        max_res = max(max_res, float(res.max()))
        min_norm = _segment_min_norm(a, b)
        if min_norm <= 1e-12 * max(np.linalg.norm(a), np.linalg.norm(b)):
            failures.append(f"segment {i} passes through the origin")
        if opts.avoid is not None and opts.avoid.subspaces:
            dists = tuple(
                _segment_subspace_distance(a, b, qb) for qb in opts.avoid.subspaces
            )
            if min(dists) < opts.avoid.clearance:
                failures.append(f"segment {i} violates the avoid clearance")
        else:
            dists = ()
        seg_distances.append(dists)
    if max_res > opts.res_tol:
        failures.append(f"max sample residual {max_res:.3e} above {opts.res_tol:.1e}")
    return PathReport(
        max_residual_on_samples=max_res,
        segment_min_distances=tuple(seg_distances),
        verified=not failures,
        failures=tuple(failures),
    )


def spherical_lift(path: PiecewisePath, norm_floor: float = 1e-9) -> SphericalLift:
    """Normalize a verified path to the unit-sphere double cover.

    Knot-wise normalization; the normalized segment curves coincide with the
    spherical arcs because segments miss the origin.  Raises when the
    minimum pre-normalization norm falls below the floor (relative to the
    largest knot).
    """
    knot_norms = [float(np.linalg.norm(k)) for k in path.knots]
    min_prenorm = min(
        _segment_min_norm(a, b) for a, b in zip(path.knots[:-1], path.knots[1:])
    ) if len(path.knots) > 1 else (knot_norms[0] if knot_norms else 0.0)
    if min_prenorm < norm_floor * max(knot_norms, default=0.0):
        raise NumericError(
            f"minimum pre-normalization norm {min_prenorm:.3e} below the floor"
        )
    unit_knots = tuple(k / n for k, n in zip(path.knots, knot_norms))
    segments = []
    for i, (a, b) in enumerate(zip(unit_knots[:-1], unit_knots[1:])):
        old = path.segments[i]
        denom = knot_norms[i] * knot_norms[i + 1]
        segments.append(
            SegmentInfo(
                ortho_defect=old.ortho_defect / denom,
                min_norm=_segment_min_norm(a, b),
                angle=old.angle,
                avoid_clearances=old.avoid_clearances,
            )
        )
    lifted = PiecewisePath(knots=unit_knots, segments=tuple(segments))
    return SphericalLift(path=lifted, min_prenorm=float(min_prenorm))


def _int_seed(seed: int, label: str, index: int) -> int:
    return int(derive_rng(seed, label, index).integers(0, 2**62))


def _connect_trial(space: FormSpace, opts: SolveOptions, seed: int, index: int):
    p_res = solve_null(space, replace(opts, seed=_int_seed(seed, "pair-p", index)))
    q_res = solve_null(space, replace(opts, seed=_int_seed(seed, "pair-q", index)))
    restarts = p_res.restarts_used + q_res.restarts_used
    trial_opts = replace(opts, seed=_int_seed(seed, "connect", index))
    escalated = False
    try:
        try:
            path = connect_two(space, p_res.v, q_res.v, trial_opts)
        except EscalationNeeded:
            escalated = True
            path = connect_chain5(space, p_res.v, q_res.v, trial_opts)
    except (NoPathError, EscalationNeeded, NoSolutionError, NumericError,
            InfeasibleError, ClearanceError, PreconditionError) as exc:
        return None, escalated, restarts, f"trial {index}: {exc}"
    report = verify_path(space, path, 32, trial_opts)
    if not report.verified:
        return None, escalated, restarts, f"trial {index}: verification failed"
    return path, escalated, restarts, None


def monte_carlo_connectivity(space: FormSpace, n_pairs: int,
                             opts: SolveOptions | None = None,
                             seed: int = 0) -> ConnectStats:
    """Empirical point-pair connectivity probe.

    Samples endpoint pairs with seeded null solves, attempts the two-segment
    path, and escalates to the five-knot chain on failure; every returned
    path is independently re-verified before it counts as a success.
    Deterministic given the seed, for any worker count.
    """
    opts = opts or SolveOptions()
    if n_pairs < 0:
        raise InputError("n_pairs must be >= 0")
    if n_pairs == 0:
        return ConnectStats(0, 0, 0.0, 0, 0.0, 0.0, 0.0, ())
    workers = min(thread_count(), n_pairs)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda i: _connect_trial(space, opts, seed, i), range(n_pairs))
            )
    else:
        results = [_connect_trial(space, opts, seed, i) for i in range(n_pairs)]
    successes = [r for r in results if r[0] is not None]
    escalations = sum(1 for r in results if r[1])
    failures = tuple(r[3] for r in results if r[3] is not None)
    knots = [r[0].n_knots for r in successes]
    restarts = [r[2] for r in results]
    return ConnectStats(
        n_pairs=n_pairs,
        successes=len(successes),
        success_rate=len(successes) / n_pairs,
        escalations=escalations,
        escalation_rate=escalations / n_pairs,
        mean_knots=float(np.mean(knots)) if knots else 0.0,
        mean_restarts=float(np.mean(restarts)) if restarts else 0.0,
        failures=failures,
    )
