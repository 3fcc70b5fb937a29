"""Certify and estimate m-admissibility of a form space.

A space W is m-admissible when every nonzero form in it is positive definite
on some m-dimensional subspace and negative definite on another.  Up to
positive scaling it suffices to look at unit coefficient vectors c and the
mixed forms sum_j c_j A_j:

* ``certify_admissibility`` covers the coefficient sphere with a
  deterministic net and certifies through the eigenvalue perturbation bound
  |lam_i(A) - lam_i(B)| <= |A - B|_2 (Weyl), using a safeguarded upper bound
  on the Lipschitz constant of c -> sum c_j A_j.
* ``estimate_admissibility`` is the Monte Carlo counterpart.  Uniform
  sampling alone cannot see the minimizing directions (they live on
  measure-zero strata where eigenvalues cross zero), so each batch is
  followed by a deterministic Newton descent that drives the smallest
  nonzero eigenvalue of the mixed form into the zero cluster before
  re-reading the inertia.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from . import _kernels as kernels
from ._defaults import MARGIN_SENTINEL, NET_CAP, RANK_TOL, ZERO_TOL
from ._rng import derive_rng
from .errors import InputError, ResourceError
from .forms import FormSpace, SymmetricForm

__all__ = [
    "AdmissibilityCertificate",
    "AdmissibilityReject",
    "AdmissibilityEstimate",
    "MarginResult",
    "TheoremConstants",
    "direction_form",
    "signature_margin",
    "lipschitz_bound",
    "sphere_net",
    "certify_admissibility",
    "estimate_admissibility",
    "make_admissible_space",
    "theorem_constants",
]


@dataclass(frozen=True)
class AdmissibilityCertificate:
    """Net-based certificate that a space is m-admissible."""

    m: int
    net_resolution: float
    lipschitz: float
    min_margin: float
    method: str
    samples_or_net_points: int

    @property
    def certified(self) -> bool:
        return self.method == "net_certified"


@dataclass(frozen=True)
class AdmissibilityReject:
    """Certification failure, carrying the worst direction found."""

    m: int
    net_resolution: float
    lipschitz: float
    worst_direction: np.ndarray
    worst_margin: float
    samples_or_net_points: int
    reason: str

    @property
    def certified(self) -> bool:
        return False


@dataclass(frozen=True)
class AdmissibilityEstimate:
    """Sampled upper bound m_hat on the admissibility of a space."""

    m_hat: int
    worst_direction: np.ndarray
    n_samples: int
    refined: bool

    def as_certificate(self, lipschitz: float = 0.0) -> AdmissibilityCertificate:
        return AdmissibilityCertificate(
            m=self.m_hat,
            net_resolution=0.0,
            lipschitz=lipschitz,
            min_margin=0.0,
            method="sampled_estimate",
            samples_or_net_points=self.n_samples,
        )


@dataclass(frozen=True)
class MarginResult:
    """Level-m signature margin; ``value`` is the sentinel when infeasible."""

    value: float
    feasible: bool
    raw: float


@dataclass(frozen=True)
class TheoremConstants:
    """The explicit constants m(i,k), r(i,k) and the tuple bound M(n,k)."""

    i: int
    k: int
    n_tuple: int
    m_ik: int
    r_ik: int
    M_nk: int


def direction_form(space: FormSpace, c) -> SymmetricForm:
    """Mixed form sum_j c_j A_j for a unit coefficient vector c."""
    cc = np.asarray(c, dtype=np.float64)
    if cc.shape != (space.dim_w,):
        raise InputError(f"direction must have length {space.dim_w}, got shape {cc.shape}")
    if abs(float(np.linalg.norm(cc)) - 1.0) > 1e-12:
        raise InputError("direction must be a unit vector")
    return SymmetricForm(np.tensordot(cc, space.stack, axes=(0, 0)))


def signature_margin(w: SymmetricForm, m: int) -> MarginResult:
    """Quantitative slack of m-admissibility at a single form.

    Returns min(lam_plus_m, -lam_minus_m) where lam_plus_m is the m-th
    largest and lam_minus_m the m-th smallest eigenvalue; the sentinel value
    (with ``feasible=False``) stands in when the form does not have m
    positive and m negative eigenvalues.
    """
    n = w.dim
    if not 1 <= m <= n:
        raise InputError(f"level m must satisfy 1 <= m <= {n}, got {m}")
    eigs = np.linalg.eigvalsh(w.mat)
    raw = float(min(eigs[n - m], -eigs[m - 1]))
    feasible = raw > 0.0
    return MarginResult(value=raw if feasible else MARGIN_SENTINEL, feasible=feasible, raw=raw)


def _power_spectral_norm(mat: np.ndarray, iters: int = 256, tol: float = 1e-10) -> float:
    """Spectral norm of a symmetric matrix by power iteration."""
    n = mat.shape[0]
    if n == 0 or not mat.any():
        return 0.0
    x = np.ones(n) + 1e-3 * np.arange(n) / n
    x /= np.linalg.norm(x)
    nu = 0.0
    prev = -1.0
    for i in range(iters):
        y = mat @ x
        ny = float(np.linalg.norm(y))
        if ny < 1e-300:
            # landed in the kernel; restart from a basis vector
            x = np.zeros(n)
            x[i % n] = 1.0
            prev = -1.0
            continue
        nu = ny
        x = y / ny
        if abs(nu - prev) <= tol * max(nu, 1e-300):
            break
        prev = nu
    return nu


def lipschitz_bound(space: FormSpace, safety: float = 1.01) -> float:
    """Upper bound sum_j |A_j|_2 on the Lipschitz constant of c -> sum c_j A_j.

    Power iteration is run to stagnation and inflated by ``safety`` to guard
    against early termination, keeping the bound on the safe side.
    """
    return safety * float(sum(_power_spectral_norm(m) for m in space.stack))


# ---------------------------------------------------------------------------
# covering nets on the coefficient sphere
# ---------------------------------------------------------------------------


def _initial_complex(k: int):
    """Cross-polytope boundary: vertices +-e_i, one simplex per orthant."""
    verts = []
    index = {}
    for i in range(k):
        for s in (1, -1):
            key = tuple(s if j == i else 0 for j in range(k))
            index[key] = len(verts)
            verts.append(key)
    simplices = []
    for signs in product((1, -1), repeat=k):
        simplices.append(tuple(index[tuple(s if j == i else 0 for j in range(k))]
                               for i, s in enumerate(signs)))
    return np.array(verts, dtype=np.int64), np.array(simplices, dtype=np.int64)


def _unit_rows(keys: np.ndarray) -> np.ndarray:
    pts = keys.astype(np.float64)
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts


def _unique_edges(simplices: np.ndarray) -> np.ndarray:
    p = simplices.shape[1]
    pairs = [(a, b) for a in range(p) for b in range(a + 1, p)]
    edges = np.concatenate([simplices[:, [a, b]] for a, b in pairs], axis=0)
    return np.unique(np.sort(edges, axis=1), axis=0)


def _max_edge_angle(keys: np.ndarray, edges: np.ndarray) -> float:
    pts = _unit_rows(keys)
    dots = np.einsum("ei,ei->e", pts[edges[:, 0]], pts[edges[:, 1]])
    return float(np.arccos(np.clip(dots, -1.0, 1.0)).max())


def _dedup_keys(keys: np.ndarray):
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    return uniq, inverse


def _subdivide(keys: np.ndarray, simplices: np.ndarray):
    """One global midpoint refinement; lattice scale doubles."""
    p = simplices.shape[1]
    doubled = keys * 2
    if p == 2:
        a, b = simplices[:, 0], simplices[:, 1]
        mid = keys[a] + keys[b]
        all_keys = np.concatenate([doubled, mid], axis=0)
        uniq, inv = _dedup_keys(all_keys)
        nv = keys.shape[0]
        ia, ib, im = inv[a], inv[b], inv[nv + np.arange(len(mid))]
        children = np.concatenate(
            [np.stack([ia, im], axis=1), np.stack([im, ib], axis=1)], axis=0
        )
        return uniq, children
    if p == 3:
        a, b, c = (simplices[:, i] for i in range(3))
        mab, mac, mbc = keys[a] + keys[b], keys[a] + keys[c], keys[b] + keys[c]
        s = simplices.shape[0]
        all_keys = np.concatenate([doubled, mab, mac, mbc], axis=0)
        uniq, inv = _dedup_keys(all_keys)
        nv = keys.shape[0]
        r = np.arange(s)
        ia, ib, ic = inv[a], inv[b], inv[c]
        iab, iac, ibc = inv[nv + r], inv[nv + s + r], inv[nv + 2 * s + r]
        children = np.concatenate(
            [
                np.stack([ia, iab, iac], axis=1),
                np.stack([ib, iab, ibc], axis=1),
                np.stack([ic, iac, ibc], axis=1),
                np.stack([iab, ibc, iac], axis=1),
            ],
            axis=0,
        )
        return uniq, children
    if p == 4:
        a, b, c, d = (simplices[:, i] for i in range(4))
        mids = [
            keys[a] + keys[b], keys[a] + keys[c], keys[a] + keys[d],
            keys[b] + keys[c], keys[b] + keys[d], keys[c] + keys[d],
        ]
        s = simplices.shape[0]
        all_keys = np.concatenate([doubled] + mids, axis=0)
        uniq, inv = _dedup_keys(all_keys)
        nv = keys.shape[0]
        r = np.arange(s)
        ia, ib, ic, idd = inv[a], inv[b], inv[c], inv[d]
        iab = inv[nv + r]
        iac = inv[nv + s + r]
        iad = inv[nv + 2 * s + r]
        ibc = inv[nv + 3 * s + r]
        ibd = inv[nv + 4 * s + r]
        icd = inv[nv + 5 * s + r]
        corners = [
            np.stack([ia, iab, iac, iad], axis=1),
            np.stack([ib, iab, ibc, ibd], axis=1),
            np.stack([ic, iac, ibc, icd], axis=1),
            np.stack([idd, iad, ibd, icd], axis=1),
        ]
        # central octahedron: split along the shortest of the three diagonals
        pts = _unit_rows(uniq)

        def diag_len(u, v):
            dots = np.einsum("si,si->s", pts[u], pts[v])
            return np.arccos(np.clip(dots, -1.0, 1.0))

        d0 = diag_len(iab, icd)
        d1 = diag_len(iac, ibd)
        d2 = diag_len(iad, ibc)
        choice = np.argmin(np.stack([d0, d1, d2], axis=1), axis=1)
        # equator cycles around each diagonal, consecutive pairs share a face
        octa_opts = [
            (iab, icd, (iac, ibc, ibd, iad)),
            (iac, ibd, (iab, ibc, icd, iad)),
            (iad, ibc, (iab, ibd, icd, iac)),
        ]
        octa_children = []
        for o, (p1, p2, cyc) in enumerate(octa_opts):
            mask = choice == o
            if not mask.any():
                continue
            for t in range(4):
                e1, e2 = cyc[t], cyc[(t + 1) % 4]
                octa_children.append(
                    np.stack([p1[mask], p2[mask], e1[mask], e2[mask]], axis=1)
                )
        children = np.concatenate(corners + octa_children, axis=0)
        return uniq, children
    raise InputError(f"unsupported simplex dimension {p - 1}")


@lru_cache(maxsize=8)
def _cached_net(k: int, delta: float, cap: int):
    if k == 1:
        return np.array([[1.0], [-1.0]]), 0.0
    if k > 4:
        raise ResourceError(
            f"covering nets are supported for k <= 4 (got k={k}); use estimation"
        )
    keys, simplices = _initial_complex(k)
    for _ in range(40):
        edges = _unique_edges(simplices)
        resolution = _max_edge_angle(keys, edges)
        if resolution <= delta:
            break
        # each unique edge contributes exactly one midpoint vertex
        if keys.shape[0] + edges.shape[0] > cap:
            raise ResourceError(
                f"net would exceed {cap} points at resolution {delta}; "
                "increase delta or the cap, or reduce k"
            )
        keys, simplices = _subdivide(keys, simplices)
    pts = _unit_rows(keys)
    pts.setflags(write=False)
    return pts, resolution


def sphere_net(k: int, delta: float, cap: int = NET_CAP):
    """Deterministic net on S^(k-1) with max geodesic edge length <= delta.

    Built by recursive midpoint subdivision of the cross-polytope boundary
    projected to the sphere.  Returns (points, achieved_resolution).
    """
    if k < 1:
        raise InputError("k must be >= 1")
    if not delta > 0:
        raise InputError("delta must be positive")
    return _cached_net(int(k), float(delta), int(cap))


def certify_admissibility(
    space: FormSpace,
    m: int,
    delta: float,
    zero_tol: float = ZERO_TOL,
    net_cap: int = NET_CAP,
):
    """Net certification of m-admissibility.

    Certifies iff the minimum level-m margin over the net exceeds L*delta,
    where L bounds the spectral-norm Lipschitz constant of the mixing map;
    Weyl's inequality then keeps every margin on the sphere positive.
    """
    if m < 0:
        raise InputError("m must be nonnegative")
    if not delta > 0:
        raise InputError("delta must be positive")
    n, k = space.dim_v, space.dim_w
    lip = lipschitz_bound(space)
    if m == 0:
        return AdmissibilityCertificate(0, float(delta), lip, math.inf,
                                        "net_certified", 0)
    if 2 * m > n:
        worst = np.zeros(k)
        worst[0] = 1.0
        return AdmissibilityReject(m, float(delta), lip, worst, MARGIN_SENTINEL, 0,
                                   f"2m = {2 * m} exceeds the ambient dimension {n}")
    net, _ = sphere_net(k, delta, net_cap)
    margins = kernels.batch_margin_mix(space.stack, net, m)
    idx = int(np.argmin(margins))
    raw = float(margins[idx])
    if raw > 0.0 and raw > lip * delta:
        return AdmissibilityCertificate(m, float(delta), lip, raw,
                                        "net_certified", net.shape[0])
    worst_margin = raw if raw > 0.0 else MARGIN_SENTINEL
    reason = (
        "margin not positive on the net"
        if raw <= 0.0
        else f"margin {raw:.3e} below certification threshold {lip * delta:.3e}"
    )
    return AdmissibilityReject(m, float(delta), lip, net[idx].copy(), worst_margin,
                               net.shape[0], reason)


# ---------------------------------------------------------------------------
# Monte Carlo estimation with stratum refinement
# ---------------------------------------------------------------------------


def _mix(space: FormSpace, c: np.ndarray) -> np.ndarray:
    return np.tensordot(c, space.stack, axes=(0, 0))


def _witt_at(space: FormSpace, c: np.ndarray, zero_tol: float) -> int:
    counts = kernels.batch_inertia_mix(space.stack, c[None, :], zero_tol)[0]
    return int(min(counts[0], counts[2]))


def _tolerance_witt(lam: np.ndarray, zero_tol: float) -> int:
    scale = float(np.abs(lam).max()) or 1.0
    thr = zero_tol * scale
    return int(min((lam > thr).sum(), (lam < -thr).sum()))


def _refine_direction(space: FormSpace, c0: np.ndarray, zero_tol: float,
                      max_iter: int | None = None):
    """Descend onto singular strata of the coefficient sphere.

    Repeatedly drives the smallest nonzero eigenvalue of the mixed form to
    zero with Newton steps on the eigenvalue (gradient u^T A_j u for the
    tracked eigenvector u), re-reading min(n_plus, n_minus) whenever the
    zero cluster grows.  Steps are projected orthogonal to the gradients of
    the eigenvalues already in the zero cluster, so reaching a deeper
    stratum never abandons the current one (the stratum functionals need
    not be orthogonal once the basis has been mixed).  Deterministic;
    returns (best_witt, direction) or (None, None).
    """
    stack = space.stack
    k = space.dim_w
    if max_iter is None:
        max_iter = 20 + 40 * (k - 1)
    c = np.asarray(c0, dtype=np.float64)
    c = c / np.linalg.norm(c)
    best_val = None
    best_c = None
    lam, vecs = np.linalg.eigh(_mix(space, c))
    scale = float(np.abs(lam).max()) or 1.0
    z_cur = int((np.abs(lam) <= zero_tol * scale).sum())
    for _it in range(max_iter):
        thr = zero_tol * scale
        zero_idx = np.where(np.abs(lam) <= thr)[0]
        nonzero = np.where(np.abs(lam) > thr)[0]
        if nonzero.size == 0:
            val = _tolerance_witt(lam, zero_tol)
            if best_val is None or val < best_val:
                best_val, best_c = val, c.copy()
            break
        idx = int(nonzero[np.argmin(np.abs(lam[nonzero]))])
        obj = abs(float(lam[idx]))
        u = vecs[:, idx]
        grad = np.einsum("kij,i,j->k", stack, u, u, optimize=True)
        # keep the sphere constraint and every zeroed eigenvalue fixed to
        # first order: project out c and the zero-cluster gradients
        # (rank-truncated: degenerate clusters repeat one gradient direction
        # up to rounding noise, which must not inflate the constraint span)
        rows = [c]
        for zi in zero_idx:
            uz = vecs[:, zi]
            gz = np.einsum("kij,i,j->k", stack, uz, uz, optimize=True)
            ng = float(np.linalg.norm(gz))
            if ng > 1e-12 * (1.0 + space.max_spectral):
                rows.append(gz / ng)
        cons = np.stack(rows, axis=0)
        _, sv, vh = np.linalg.svd(cons, full_matrices=False)
        crank = int((sv > 1e-8 * sv[0]).sum())
        basis = vh[:crank]
        direction = grad - basis.T @ (basis @ grad)
        dn2 = float(direction @ direction)
        if dn2 <= (1e-13 * (1.0 + float(np.linalg.norm(grad)))) ** 2:
            break  # cannot improve without breaking the current stratum
        step = float(lam[idx]) / dn2
        accepted = False
        for bt in range(8):
            c_try = c - (step / (2.0**bt)) * direction
            nrm = float(np.linalg.norm(c_try))
            if nrm < 1e-12:
                continue
            c_try /= nrm
            lam_t, vecs_t = np.linalg.eigh(_mix(space, c_try))
            scale_t = float(np.abs(lam_t).max()) or 1.0
            z_t = int((np.abs(lam_t) <= zero_tol * scale_t).sum())
            if z_t < z_cur:
                continue  # lost part of the stratum, shorten the step
            nz_t = np.abs(lam_t)[np.abs(lam_t) > zero_tol * scale_t]
            obj_t = float(nz_t.min()) if nz_t.size else 0.0
            if z_t > z_cur or obj_t < 0.9 * obj:
                c, lam, vecs, scale = c_try, lam_t, vecs_t, scale_t
                if z_t > z_cur:
                    val = _tolerance_witt(lam_t, zero_tol)
                    if best_val is None or val < best_val:
                        best_val, best_c = val, c.copy()
                z_cur = z_t
                accepted = True
                break
        if not accepted:
            break
    return best_val, best_c


def estimate_admissibility(
    space: FormSpace,
    n_samples: int,
    seed: int = 0,
    refine: bool = True,
    zero_tol: float = ZERO_TOL,
    n_refine_starts: int = 12,
) -> AdmissibilityEstimate:
    """Sampled upper bound on admissibility: min inertia over probed directions.

    Probes are the seeded uniform sample plus, when ``refine`` is set, the
    strata found by Newton descent from a deterministic subset of starts.
    The result never undershoots the true admissibility (every probe is a
    genuine direction), and refinement makes the bound sharp on the
    measure-zero minimizing strata that uniform sampling misses.
    """
    if n_samples < 1:
        raise InputError("n_samples must be >= 1")
    k = space.dim_w
    rng = derive_rng(seed, "estimate-admissibility")
    dirs = rng.standard_normal((n_samples, k))
    norms = np.linalg.norm(dirs, axis=1)
    while (norms < 1e-12).any():
        bad = norms < 1e-12
        dirs[bad] = rng.standard_normal((int(bad.sum()), k))
        norms = np.linalg.norm(dirs, axis=1)
    dirs /= norms[:, None]
    counts = kernels.batch_inertia_mix(space.stack, dirs, zero_tol)
    witt = np.minimum(counts[:, 0], counts[:, 2])
    i0 = int(np.argmin(witt))
    m_hat = int(witt[i0])
    worst = dirs[i0].copy()
    refined = False
    if refine and k >= 2:
        starts = [i0] + list(
            np.unique(np.linspace(0, n_samples - 1, num=min(n_refine_starts, n_samples),
                                  dtype=np.int64))
        )
        seen = set()
        for idx in starts:
            if idx in seen:
                continue
            seen.add(idx)
            val, c_at = _refine_direction(space, dirs[idx], zero_tol)
            if val is not None and val < m_hat:
                m_hat, worst, refined = int(val), c_at, True
    return AdmissibilityEstimate(m_hat, worst, n_samples, refined)


# ---------------------------------------------------------------------------
# instance generation and theorem constants
# ---------------------------------------------------------------------------


def _well_conditioned(d: int, rng: np.random.Generator,
                      smin: float = 0.8, smax: float = 1.25) -> np.ndarray:
    q1, _ = np.linalg.qr(rng.standard_normal((d, d)))
    q2, _ = np.linalg.qr(rng.standard_normal((d, d)))
    s = rng.uniform(smin, smax, size=d)
    return (q1 * s) @ q2


def make_admissible_space(
    k: int,
    m: int,
    ambient_n: int | None = None,
    seed: int = 0,
    disguise: bool = False,
) -> FormSpace:
    """Generate an exactly m-admissible space of k forms.

    Construction: V splits into k blocks of dimension 2m; basis form j is the
    hyperbolic form diag(+1 x m, -1 x m) on block j and zero elsewhere, so
    every nonzero combination has at least m positive and m negative
    eigenvalues (and exactly m on the axis directions).  Extra ambient
    dimensions are zero-padded; ``disguise`` applies a well-conditioned
    congruence and an invertible basis mix, both of which preserve
    m-admissibility.
    """
    if k < 1:
        raise InputError("k must be >= 1")
    if m < 1:
        raise InputError("m must be >= 1")
    n_min = 2 * m * k
    n = n_min if ambient_n is None else int(ambient_n)
    if n < n_min:
        raise InputError(f"ambient_n must be >= 2*m*k = {n_min}, got {n}")
    stack = np.zeros((k, n, n))
    for j in range(k):
        base = 2 * m * j
        idx_pos = np.arange(base, base + m)
        idx_neg = np.arange(base + m, base + 2 * m)
        stack[j, idx_pos, idx_pos] = 1.0
        stack[j, idx_neg, idx_neg] = -1.0
    if disguise:
        cong = _well_conditioned(n, derive_rng(seed, "disguise-congruence"))
        stack = np.einsum("ia,kij,jb->kab", cong, stack, cong, optimize=True)
        mix = _well_conditioned(k, derive_rng(seed, "disguise-mix"))
        stack = np.tensordot(mix, stack, axes=(1, 0))
        stack = 0.5 * (stack + stack.transpose(0, 2, 1))
    space = FormSpace(stack)
    space.require_independent(RANK_TOL)
    return space


def theorem_constants(i: int, k: int, n_tuple: int = 0) -> TheoremConstants:
    """Exact integer evaluation of the connectivity-theorem constants."""
    if i < -1:
        raise InputError("i must be >= -1")
    if k < 1:
        raise InputError("k must be >= 1")
    if n_tuple < 0:
        raise InputError("n_tuple must be >= 0")
    m_ik = k * k + 2 * i * k + 3 * k + 2
    r_ik = k * k + 2 * i * k + i + 6 * k - 2
    x = k * k + 3 * n_tuple * k + 5 * k - 3
    m_nk = (x + 1) // 2
    return TheoremConstants(i, k, n_tuple, m_ik, r_ik, m_nk)
