"""cohomlab: curvature, classification and solution families for the
cohomogeneity-one Hermitian bundle metrics determined by two positive profile
functions (f, h)."""

from .catalog import (
    FamilyParams,
    SpaceRecord,
    custom_space,
    grassmannian,
    list_spaces,
    make_params,
    params_from_raw,
    projective_space,
    real_quadric,
    so_even_mod_u,
    sp_mod_u,
)
from .classify import ClassificationReport, classify, csc_residual, sce_residual
from .curvature import (
    CurvaturePoint,
    chern_ricci,
    chern_scalar,
    connection_tables,
    curvature_point,
    evaluate_grid,
    gauduchon_quantity,
    kahler_residual,
    lee_covariant_derivative,
    lee_form,
    pluriclosed_coeff,
    riemannian_ricci,
)
from .errors import (
    BlowUpError,
    BracketError,
    CohomlabError,
    DegenerateProfileError,
    EvalDomainError,
    ParseError,
    SingularSystemError,
    SolverFailure,
    ValidationError,
)
from .expr import Expression, Jet3, eval_jet3, eval_series, eval_value, parse, to_string
from .profiles import (
    BoundaryReport,
    ClosedFormProfile,
    MetricProfile,
    OdeSolutionProfile,
    ProfileJets,
    SampledProfile,
    builtin_profile,
    check_boundary,
    conformal_reparametrize,
    make_grid,
    profile_from_descriptor,
    profile_jets,
)
from .solvers import (
    LambdaFunction,
    ProbeReport,
    ProfileSolution,
    SCEUFamily,
    SceM2LambdaProvider,
    UFamily,
    conformal_sce_family,
    csc_coefficients_m2,
    csc_coefficients_m4,
    fubini_study_family,
    homogeneous_sce,
    probe_ke_m4,
    solve_csc_m2,
    solve_csc_m4,
    solve_sce_local,
    solve_sce_m2,
    tautological_family,
    u_family,
)

__version__ = "0.1.0"
