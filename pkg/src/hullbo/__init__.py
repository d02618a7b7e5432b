"""Constrained Bayesian optimization with convex-hull Lagrange multipliers.

An engine for maximizing a figure of merit under one expensive-to-evaluate
constraint (a target breakdown voltage): each iteration prices the constraint
from the upper convex hull of everything observed so far, folds it into a
Lagrangian, and lets plain GP + expected-improvement optimization do the rest.
"""

__version__ = "0.1.0"

from .acquisition import AcquisitionConfig, expected_improvement
from .acquisition import maximize as maximize_acquisition
from .design_space import (
    DesignSpace,
    DerivedGeometry,
    Dimension,
    derived_geometry,
    ldmos9_space,
    space_by_name,
    toy2d_space,
)
from .driver import (
    CampaignAborted,
    ConfigError,
    Dataset,
    RunConfig,
    RunRecord,
    best_feasible,
    frontier_report,
    load_dataset,
    run,
    save_dataset,
)
from .evaluators import (
    Evaluation,
    EvaluatorSpec,
    EvaluatorUnavailableError,
    fom,
    make_evaluator,
)
from .gp import GpConfig, GpModel, GpPrediction, SingularFitError
from .gp import fit as fit_gp
from .lagrange import (
    FrontierPoint,
    LagrangeState,
    UpperHull,
    hull_csv,
    lagrangian,
    multiplier,
    upper_hull,
)

__all__ = [
    "__version__",
    "AcquisitionConfig", "expected_improvement", "maximize_acquisition",
    "DesignSpace", "DerivedGeometry", "Dimension", "derived_geometry",
    "ldmos9_space", "space_by_name", "toy2d_space",
    "CampaignAborted", "ConfigError", "Dataset", "RunConfig", "RunRecord",
    "best_feasible", "frontier_report", "load_dataset", "run", "save_dataset",
    "Evaluation", "EvaluatorSpec", "EvaluatorUnavailableError", "fom", "make_evaluator",
    "GpConfig", "GpModel", "GpPrediction", "SingularFitError", "fit_gp",
    "FrontierPoint", "LagrangeState", "UpperHull", "hull_csv",
    "lagrangian", "multiplier", "upper_hull",
]
