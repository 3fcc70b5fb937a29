"""Package-wide default tolerances and caps.

All thresholds are relative to a problem-derived scale (spectral scale of the
forms, largest singular value, ...) so that congruence/scaling invariance
tests can pass without per-instance tuning.
"""

# relative symmetry slack accepted when constructing a form
SYM_TOL = 1e-8

# eigenvalues with |lam| <= ZERO_TOL * spectral_scale count as zero
ZERO_TOL = 1e-9

# singular values <= RANK_TOL * sigma_max are treated as zero rank
RANK_TOL = 1e-10

# relative residual target for solvers and path verification
RES_TOL = 1e-10

# factor in the W-orthogonality threshold  ORTHO_TOL*(1+|u||v|)*max_j|A_j|_2
ORTHO_TOL = 1e-10

# minimum angle (radians) between consecutive path knots
ANGLE_TOL = 1e-6

# hard cap on covering-net size for certification
NET_CAP = 10_000_000

# returned by signature_margin when fewer than m positive or negative
# eigenvalues exist (finite so it serializes cleanly)
MARGIN_SENTINEL = -1e308
