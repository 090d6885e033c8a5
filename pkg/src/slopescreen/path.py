"""Regularization paths for SLOPE with strong-rule screening.

The penalty along the path is ``sigma * lam`` with ``lam`` a fixed
Benjamini-Hochberg sequence and ``sigma`` running over a log-spaced grid
that starts where the first predictor enters the model.
"""
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .objectives import deviance, deviance_ratio, loss_gradient, null_deviance
from .screening import detect_violations, strong_rule_slope
from .solver import SolverConfig, duality_gap, fista_solve, _SubProblem
from .sorted_l1 import check_lambda, dual_norm, ordering_and_ranks

logger = logging.getLogger(__name__)

SCREENING = ("none", "strong")
DRIVERS = ("strong_set", "previous_set")


def bh_lambda(p, q):
    """Benjamini-Hochberg weights ``Phi^{-1}(1 - q i / (2 p))``, ``i = 1..p``."""
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    if p < 1:
        raise ValueError("p must be positive")
    i = np.arange(1, p + 1)
    return norm.isf(q * i / (2.0 * p))


def sigma_max(grad_at_zero, lam):
    """Smallest penalty scale at which the zero vector is optimal."""
    lam = check_lambda(lam)
    if not np.any(lam > 0):
        raise ValueError("lambda has no positive entry")
    return dual_norm(grad_at_zero, lam)


def sigma_grid(sigma1, t, length):
    """``length`` log-spaced values from ``sigma1`` down to ``t * sigma1``."""
    if sigma1 <= 0:
        raise ValueError("sigma1 must be positive")
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    if length < 2:
        raise ValueError("path length must be at least 2")
    return np.geomspace(sigma1, t * sigma1, length)


@dataclass
class PathConfig:
    """Settings for :func:`fit_path`.

    ``terminal_ratio`` defaults to 1e-2 when ``n < p`` and 1e-4 otherwise.
    ``max_clusters`` (the cap on distinct nonzero magnitudes) defaults to
    ``n``. ``kkt_tol`` is relative to the largest penalty weight.
    """
    q: float = 0.1
    length: int = 100
    terminal_ratio: float = None
    screening: str = "strong"
    driver: str = "strong_set"
    early_stop: bool = True
    max_clusters: int = None
    dev_change_tol: float = 1e-5
    dev_ratio_max: float = 0.995
    kkt_tol: float = 1e-4
    pairing: str = "rank"
    lam: np.ndarray = None
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")
        if self.length < 2:
            raise ValueError("path length must be at least 2")
        if self.terminal_ratio is not None and not 0 < self.terminal_ratio < 1:
            raise ValueError("terminal_ratio must lie in (0, 1)")
        if self.screening not in SCREENING:
            raise ValueError("screening must be one of %s" % (SCREENING,))
        self.driver = self.driver.replace("-", "_")
        if self.driver not in DRIVERS:
            raise ValueError("driver must be one of %s" % (DRIVERS,))


@dataclass
class PathStep:
    """One accepted point on the path.

    ``screened`` counts the strong-rule set plus the violations added by
    the safeguard, ``working`` the final set the solver ran on, and
    ``violations`` the predictors the rule discarded that turned out to
    break the optimality conditions.
    """
    sigma: float
    beta: np.ndarray
    active: int
    screened: int
    working: int
    violations: int
    refits: int
    kkt_checks: int
    deviance: float
    deviance_ratio: float
    gap: float
    infeasibility: float
    iterations: int
    converged: bool
    time: float


@dataclass
class PathResult:
    steps: list
    lam: np.ndarray
    n: int
    p: int
    n_classes: int
    termination: str

    @property
    def sigmas(self):
        return np.array([s.sigma for s in self.steps])

    @property
    def coefs(self):
        """Coefficients, one row per step (flat, column-major for multinomial)."""
        return np.array([s.beta for s in self.steps])

    def column(self, name):
        return np.array([getattr(s, name) for s in self.steps])


def n_unique_magnitudes(beta):
    """Number of distinct nonzero coefficient magnitudes."""
    nz = beta[beta != 0]
    if nz.size == 0:
        return 0
    return len(ordering_and_ranks(nz).clusters)


class _Stepper:
    """Solves one path step given the previous solution.

    Keeps a cache of step-size constants keyed by the working set so that
    repeated solves on the same set skip the power iteration.
    """

    def __init__(self, design, response, lam, config):
        self.design = design
        self.response = response
        self.lam = lam
        self.config = config
        self.ptot = lam.size
        self._lip = {}

    def solve(self, lam, subset, warm):
        key = subset.tobytes()
        lip = self._lip.get(key)
        if lip is None:
            prob = _SubProblem(self.design.matrix, self.response, subset)
            lip = prob.lipschitz(self.config.solver.power_iterations) if subset.size else 1.0
            self._lip[key] = lip
        return fista_solve(self.design, self.response, lam, subset, warm,
                           self.config.solver, lipschitz=lip)

    def violations(self, res, lam, working, candidates=None):
        v = detect_violations(res.beta, res.gradient_full, lam, self.config.kkt_tol,
                              candidates)
        return np.setdiff1d(v, working, assume_unique=True)

    def step(self, lam_prev, lam_next, beta_prev, grad_prev):
        cfg = self.config
        active_prev = np.flatnonzero(beta_prev)
        everything = np.arange(self.ptot)
        if cfg.screening == "none":
            strong = everything
            working = everything
        else:
            strong = strong_rule_slope(grad_prev, lam_prev, lam_next, cfg.pairing).indices
            if cfg.driver == "strong_set":
                working = np.union1d(strong, active_prev)
            else:
                working = active_prev

        solves = 0
        checks = 0
        violations = 0
        while True:
            res = self.solve(lam_next, working, beta_prev)
            solves += 1
            if cfg.screening == "none":
                checks += 1
                break
            if cfg.driver == "previous_set":
                checks += 1
                v = self.violations(res, lam_next, working, np.union1d(working, strong))
                if v.size == 0:
                    checks += 1
                    v = self.violations(res, lam_next, working)
            else:
                checks += 1
                v = self.violations(res, lam_next, working)
            if v.size == 0:
                break
            violations += np.setdiff1d(v, strong).size
            working = np.union1d(working, v)
            if solves > 10:
                logger.warning("%d refits at one path step", solves - 1)
        return res, strong.size, working.size, violations, solves - 1, checks


def fit_path(design, response, config=None):
    """Fit a SLOPE regularization path.

    The design is expected to be standardized already (see
    :func:`slopescreen.objectives.standardize`).

    Parameters
    ----------
    design : Design
    response : Response
    config : PathConfig, optional

    Returns
    -------
    PathResult
    """
    config = config or PathConfig()
    n, p = design.shape
    k = response.n_classes
    ptot = p * k
    lam = bh_lambda(ptot, config.q) if config.lam is None else check_lambda(config.lam)
    if lam.size != ptot:
        raise ValueError("lambda has length %d, expected %d" % (lam.size, ptot))
    t = config.terminal_ratio
    if t is None:
        t = 1e-2 if n < p else 1e-4
    max_clusters = n if config.max_clusters is None else config.max_clusters

    beta = np.zeros(ptot)
    grad = loss_gradient(design, response, beta)
    sigma1 = sigma_max(grad, lam)
    if sigma1 <= 0:
        raise ValueError("gradient at zero vanishes; the path is trivial")
    sigmas = sigma_grid(sigma1, t, config.length)
    null_dev = null_deviance(design, response)

    t0 = time.perf_counter()
    gap, infeas = duality_gap(design, response, beta, sigma1 * lam)
    steps = [PathStep(sigma1, beta.copy(), 0, 0, 0, 0, 0, 0, null_dev, 0.0, gap, infeas,
                      0, True, time.perf_counter() - t0)]
    stepper = _Stepper(design, response, lam, config)
    termination = "completed"
    failed = 0
    for m in range(1, config.length):
        t0 = time.perf_counter()
        lam_prev, lam_next = sigmas[m - 1] * lam, sigmas[m] * lam
        res, n_strong, n_work, n_viol, refits, checks = stepper.step(
            lam_prev, lam_next, beta, grad)
        beta, grad = res.beta, res.gradient_full
        if not res.converged:
            failed += 1
            logger.warning("solver did not converge at step %d", m + 1)
        dev = deviance(design, response, beta)
        ratio = deviance_ratio(dev, null_dev)
        steps.append(PathStep(
            sigmas[m], beta.copy(), int(np.count_nonzero(beta)),
            ptot if config.screening == "none" else n_strong + n_viol, n_work, n_viol, refits,
            checks, dev, ratio, res.gap, res.infeasibility, res.iterations,
            res.converged, time.perf_counter() - t0))

        if not config.early_stop:
            continue
        prev_dev = steps[-2].deviance
        if n_unique_magnitudes(beta) > max_clusters:
            termination = "clusters"
        elif dev == 0 or abs(prev_dev - dev) / dev < config.dev_change_tol:
            termination = "deviance_change"
        elif ratio > config.dev_ratio_max:
            termination = "deviance_ratio"
        if termination != "completed":
            break

    if failed == len(steps) - 1 and failed > 0:
        raise RuntimeError("solver failed to converge at every path step")
    return PathResult(steps, lam, n, p, k, termination)
