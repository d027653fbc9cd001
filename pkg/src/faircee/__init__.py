"""Fair linear models with causal-effect-estimator constraints."""
from ._kernels import BACKEND
from .data import CsvConfig, Dataset, Task, index_sets, load_csv, save_csv
from .errors import (
    ConfigError,
    DegenerateConstraintError,
    EstimatorError,
    FairCEEError,
    HarnessError,
    MultiMDInfeasible,
    ParseError,
    StratificationError,
    ValidationError,
)
from .estimators import (
    ConstraintKind,
    ConstraintSystem,
    OutcomeModels,
    dr_constraint,
    dr_estimate,
    fit_outcome_models,
    ipw_constraint,
    ipw_constraint_vector,
    ipw_estimate,
    md_constraint_vector,
    mean_difference,
    multi_md_constraints,
    single_md_constraint,
    stratify,
)
from .propensity import PropensityScores, compute_auc, fit_propensity
from .solvers import (
    PgmOptions,
    Solution,
    lipschitz_constant,
    pgm_logistic,
    project_affine,
    projected_gradient,
    solve_constrained_least_squares,
)

__version__ = "0.1.0"
