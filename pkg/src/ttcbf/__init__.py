"""HOCBF and truncated-Taylor CBF safety filters for a planar double integrator."""
from .hocbf_algebra import (
    FeasibilityReport,
    FlattenedCondition,
    elem_sym_poly,
    flatten_hocbf,
    lambda_feasibility,
    psi_chain_coefficients,
)
from .lower_bounds import (
    DegenerateRatesError,
    ExponentialSumBound,
    eval_bound_ct,
    eval_bound_deriv_ct,
    eval_bound_dt,
    ode_residual,
    solve_bound_coefficients,
    vandermonde_matrix,
)
from .plant import (
    DerivativeStack,
    LinearInputConstraint,
    ObstacleSpec,
    RobotState,
    cbf_derivatives,
    cbf_value,
    hocbf_constraint,
    taylor_truncation_slack,
    ttcbf_constraint,
)
from .qp import Penalties, QpProblem, QpSolution, References, build_qp, solve_qp
from .simulation import (
    SimConfig,
    SimLog,
    run_simulation,
    step_dynamics,
    verify_decay_ttcbf,
    verify_dominance_hocbf,
)

__version__ = "0.1.0"
