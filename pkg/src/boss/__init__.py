"""Optimal biomarker cutoff selection with exact family-wise error control.

The package tests whether a continuous biomarker can segment samples into
two groups with significantly different outcomes. It fits one regression per
candidate cutoff, models the joint law of the resulting Z statistics as a
multivariate normal whose correlation follows from the overlap structure of
the dichotomized designs, and converts the maximal statistic into an exact
family-wise error rate. A permutation oracle, a genome-scale batch runner
with FDR adjustment, and a simulation harness round out the toolkit.
"""

from .batch import Clinical, GridSpec, bh_adjust, run_batch
from .core import (
    BossResult,
    CorrelationMatrix,
    CutoffGrid,
    CutoffTest,
    Dataset,
    Outcome,
    Quantitative,
    Survival,
    build_grid,
    default_min_group,
    dichotomize,
    dichotomize_pair,
    grid_from_cutoffs,
)
from .covariance import cov_no_covariates, cov_with_covariates
from .engine import boss_test, boss_test_pair, survival_admissible
from .errors import BossError, FitError, InputError, NumericError
from .mvn import MvnResult, mvn_rectangle
from .permutation import PermutationResult, permute_fwer
from .regress import FitConfig, fit_cox, fit_linear
from .simulate import (
    Blueprint,
    PiecewiseHazard,
    Scenario,
    build_blueprint,
    pseudo_gene,
    run_bench,
    run_experiment,
    simulate_outcome,
)

__version__ = "0.1.0"

__all__ = [
    "BossError", "BossResult", "Blueprint", "Clinical", "CorrelationMatrix",
    "CutoffGrid", "CutoffTest", "Dataset", "FitConfig", "FitError", "GridSpec",
    "InputError", "MvnResult", "NumericError", "Outcome", "PermutationResult",
    "PiecewiseHazard", "Quantitative", "Scenario", "Survival",
    "bh_adjust", "boss_test", "boss_test_pair", "build_blueprint", "build_grid",
    "cov_no_covariates", "cov_with_covariates", "default_min_group",
    "dichotomize", "dichotomize_pair", "fit_cox", "fit_linear",
    "grid_from_cutoffs", "mvn_rectangle", "permute_fwer", "pseudo_gene",
    "run_batch", "run_bench", "run_experiment", "simulate_outcome",
    "survival_admissible",
]
