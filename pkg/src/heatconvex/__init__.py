"""Heat flow and generalized convexity toolkit.

A transform F turns plain convexity into F-convexity of a nonnegative
function u (meaning F(u) is convex), and the package answers, numerically,
which transforms keep that structure under the heat semigroup.  Four layers:

- :mod:`heatconvex.transforms`: admissible transforms, their curvature
  profiles, and the preservation classifier.
- :mod:`heatconvex.heatflow`: free-space and Dirichlet heat evolution with
  certified quadrature error and growth bookkeeping.
- :mod:`heatconvex.certify`: midpoint-inequality certificates, violation
  hunting, mixture envelopes, and the envelope comparison check.
- :mod:`heatconvex.cli`: the ``heatconvex`` command (classify / evolve /
  verify / hunt).
"""

from .numerics import DomainError, discrete_convexity_defect, invert_monotone
from .transforms import (
    AdmissibilityReport,
    ClassReport,
    CurvatureCriterion,
    FTransform,
    GSpec,
    GaussianIntegrability,
    StrengthComparison,
    abs_kink_generator,
    builtin_transforms,
    check_admissible,
    check_curvature_criterion,
    check_gaussian_integrability,
    classify,
    compare_strength,
    default_j_window,
    g_of,
    make_affine,
    make_custom,
    make_exp,
    make_from_g,
    make_hot,
    make_neglog,
    make_power_alpha,
    scale_shift,
)
from .heatflow import (
    DomainSpec,
    EvaluationWindowError,
    ExistenceWindowError,
    GridFunction,
    InitialDatum,
    epsilon_quadratic_lift,
    fit_growth_envelope,
    gauss_kernel,
    grid_nodes,
    heat_evolve_dirichlet,
    heat_evolve_free,
    hot_H,
    hot_h,
    hot_h_deriv,
    lifted_evolution_identity,
    maximal_time_hint,
)
from .certify import (
    Certificate,
    EnvelopeComparison,
    MidpointSample,
    SamplingPlan,
    check_F_convex,
    check_envelope_comparison,
    check_quasi_convex,
    counterexample_datum,
    hunt_violation,
    mixture_envelope,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityReport",
    "Certificate",
    "ClassReport",
    "CurvatureCriterion",
    "DomainError",
    "DomainSpec",
    "EnvelopeComparison",
    "EvaluationWindowError",
    "ExistenceWindowError",
    "FTransform",
    "GSpec",
    "GaussianIntegrability",
    "GridFunction",
    "InitialDatum",
    "MidpointSample",
    "SamplingPlan",
    "StrengthComparison",
    "abs_kink_generator",
    "builtin_transforms",
    "check_F_convex",
    "check_admissible",
    "check_curvature_criterion",
    "check_envelope_comparison",
    "check_gaussian_integrability",
    "check_quasi_convex",
    "classify",
    "compare_strength",
    "counterexample_datum",
    "default_j_window",
    "discrete_convexity_defect",
    "epsilon_quadratic_lift",
    "fit_growth_envelope",
    "g_of",
    "gauss_kernel",
    "grid_nodes",
    "heat_evolve_dirichlet",
    "heat_evolve_free",
    "hot_H",
    "hot_h",
    "hot_h_deriv",
    "hunt_violation",
    "invert_monotone",
    "lifted_evolution_identity",
    "make_affine",
    "make_custom",
    "make_exp",
    "make_from_g",
    "make_hot",
    "make_neglog",
    "make_power_alpha",
    "maximal_time_hint",
    "mixture_envelope",
    "scale_shift",
    "__version__",
]
