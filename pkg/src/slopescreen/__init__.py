"""Regularization paths for SLOPE with strong screening rules."""
from .objectives import (Design, Response, deviance, deviance_ratio, loss_gradient,
                         loss_value, null_deviance, standardize)
from .path import PathConfig, PathResult, bh_lambda, fit_path, sigma_grid, sigma_max
from .screening import (detect_violations, screen_support, screen_support_fast,
                        strong_rule_lasso, strong_rule_slope)
from .solver import SolverConfig, SolverResult, duality_gap, fista_solve
from .sorted_l1 import (cumsum, ordering_and_ranks, prox_sorted_l1, sorted_l1_norm,
                        subdiff_feasible)

__version__ = "0.1.0"
