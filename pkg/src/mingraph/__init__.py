"""Numerical toolkit for minimal graphs of higher codimension.

Singular-value region tests, majorization, discrete area and its variations,
homotopy diagnostics and a Dirichlet solver for maps from boxes into R^n.
"""
from .errors import (
    DomainError, InvalidInputError, NonConvergenceError, PreconditionError, StallError,
)
from .svkit import (
    BoundaryCase, ConstraintKind, ConstraintSet, RegionStatus, RegionVerdict,
    SingularFrames, SingularValueVector, area_density, classify_region, h_value,
    in_constraint_set, psi, singular_values,
)
from .majorization import MajorizationReport, asymp_l, l_majorizes, weak_hull_test
from .graphgeom import (
    Domain, GridMap, MetricSample, area, area_gradient, jacobian, pullback_metric, singular_field,
)
from .variation import VariationReport, area_along, p_matrix, second_variation_terms
from .homotopy import (
    HomotopyTrace, LambdaClassification, check_prop1, check_prop2, classify_lambda,
    gradient_vanishing_diagnostic, trace, trace_jacobians,
)
from .solver import (
    BoundaryData, ExperimentConfig, ExperimentReport, SolverConfig, solve_dirichlet,
    uniqueness_experiment,
)

__version__ = "0.1.0"
