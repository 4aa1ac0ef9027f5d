"""Radial gradient-soliton laboratory: conformally flat solitons, sphere flows
and the monotone weighted-area functional along them."""

from .errors import (
    BlowUp,
    DomainError,
    Extinction,
    InsufficientSamples,
    InverseFlowFailure,
    NoRoot,
    OptimizerStall,
    ParamError,
    ParseError,
    QuadratureFailure,
    SingularCoefficient,
    SolabError,
    StepFloor,
    UnknownName,
    ValidationError,
)
from .radial_geometry import (
    ConformalRadialMetric,
    CurvatureSample,
    RadialField,
    conformal_ricci,
    curvature_sample,
    grad_norm_sq,
    hessian_radial,
    laplacian_radial,
    s_scalar,
    scalar_curvature,
)
from .soliton_forge import (
    SolitonData,
    builtin_solitons,
    export_soliton_table,
    import_soliton_table,
    infer_lambda,
    soliton_residuals,
    solve_potential,
    solve_w,
)
from .flow_engine import (
    FlowTrajectory,
    SphereState,
    StepControl,
    diffeo_flow,
    inverse_diffeo,
    run_background_flow,
    run_normalized_flow,
    type_one_ratio,
)
from .monotonicity_lab import (
    huisken_functional,
    verify_monotonicity,
    verify_rigidity,
    weighted_area,
)
from .convergence_analyzer import (
    RadialPath,
    f_minimal_roots,
    l_length,
    limit_extraction,
    reduced_distance,
    reduced_distance_limit_check,
)
from .report import CertificationReport
from .scenario_cli import Scenario, list_presets, parse_config, run_scenario

__version__ = "0.1.0"
