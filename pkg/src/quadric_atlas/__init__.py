"""quadric-atlas: numerics on spaces of real quadratic forms.

Certify m-admissibility of a space of symmetric forms, solve the
simultaneous quadratic system E(v) = t constructively, and build verified
piecewise-linear paths between nonsingular points of the common zero locus.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .admissibility import (
    AdmissibilityCertificate,
    AdmissibilityEstimate,
    AdmissibilityReject,
    TheoremConstants,
    certify_admissibility,
    direction_form,
    estimate_admissibility,
    make_admissible_space,
    signature_margin,
    theorem_constants,
)
from .connect import (
    ConnectStats,
    PathReport,
    PiecewisePath,
    connect_chain5,
    connect_two,
    midpoint_find,
    monte_carlo_connectivity,
    spherical_lift,
    verify_path,
)
from .forms import (
    FormSpace,
    Signature,
    SymmetricForm,
    eval_map,
    evaluate_form,
    is_nonsingular_point,
    is_w_independent,
    phi_matrix,
    restrict_forms,
    signature,
    w_orthogonal_complement,
    witt_index,
)
from .solver import (
    AvoidSet,
    SolveOptions,
    SolveResult,
    cancel_on_ray,
    clear_avoid,
    continuation_solve,
    orthogonal_combine,
    solve_E,
    solve_form_value,
    solve_null,
)
from .tangent import (
    check_zn_membership,
    lift_tangent,
    tangent_basis,
    theta_eval,
    theta_jacobian_u0,
)

__all__ = [
    "__version__",
    "KERNEL_BACKEND",
    "AdmissibilityCertificate",
    "AdmissibilityEstimate",
    "AdmissibilityReject",
    "TheoremConstants",
    "certify_admissibility",
    "direction_form",
    "estimate_admissibility",
    "make_admissible_space",
    "signature_margin",
    "theorem_constants",
    "ConnectStats",
    "PathReport",
    "PiecewisePath",
    "connect_chain5",
    "connect_two",
    "midpoint_find",
    "monte_carlo_connectivity",
    "spherical_lift",
    "verify_path",
    "FormSpace",
    "Signature",
    "SymmetricForm",
    "eval_map",
    "evaluate_form",
    "is_nonsingular_point",
    "is_w_independent",
    "phi_matrix",
    "restrict_forms",
    "signature",
    "w_orthogonal_complement",
    "witt_index",
    "AvoidSet",
    "SolveOptions",
    "SolveResult",
    "cancel_on_ray",
    "clear_avoid",
    "continuation_solve",
    "orthogonal_combine",
    "solve_E",
    "solve_form_value",
    "solve_null",
    "check_zn_membership",
    "lift_tangent",
    "tangent_basis",
    "theta_eval",
    "theta_jacobian_u0",
]
