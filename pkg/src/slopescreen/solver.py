"""Accelerated proximal gradient (FISTA) solver for SLOPE problems.

The solver minimizes ``f(beta) + J(beta; lam)`` over a subset of the
coefficients, keeping the others fixed at zero. Convergence is declared
when the relative duality gap and the relative dual infeasibility both drop
below their tolerances.
"""
from dataclasses import dataclass

import numpy as np

from .objectives import Design, coef_matrix, get_family, linear_predictor
from .sorted_l1 import (check_lambda, dual_norm, ordering_and_ranks, prox_sorted_l1,
                        sorted_l1_norm)

TINY = 1e-300


@dataclass
class SolverConfig:
    max_iterations: int = 100_000
    gap_tol: float = 1e-5
    infeas_tol: float = 1e-3
    power_iterations: int = 50
    step_growth: float = 0.8
    polish_every: int = 10

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.gap_tol <= 0 or self.infeas_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class SolverResult:
    beta: np.ndarray
    gradient_full: np.ndarray
    primal: float
    gap: float
    infeasibility: float
    iterations: int
    converged: bool


def infeasibility(grad, lam):
    """Worst positive excess of ``cumsum(|grad|_sorted - lam)`` over ``sum(lam)``."""
    excess = np.cumsum(np.sort(np.abs(grad))[::-1] - lam)
    total = lam.sum()
    worst = max(0.0, float(excess.max()))
    if worst == 0.0:
        return 0.0
    return worst / total if total > 0 else np.inf


def _dual_gap(fam, y, primal, residual, grad, lam):
    """Duality gap from a scaled-residual dual point.

    ``grad`` must equal ``-X^T residual`` (flattened) for the active
    columns. Returns ``(gap, dual)``.
    """
    rho = dual_norm(grad, lam)
    theta = residual / max(1.0, rho)
    conj = fam.conjugate(theta, y)
    shrink = 0
    while not np.isfinite(conj):
        theta = 0.5 * theta
        conj = fam.conjugate(theta, y)
        shrink += 1
        if shrink > 60:
            return np.inf, -np.inf
    dual = -conj
    return max(primal - dual, 0.0), dual


def duality_gap(design, response, beta, lam):
    """Duality gap and relative infeasibility of ``beta`` for the full problem.

    Returns
    -------
    (gap, infeasibility)
    """
    X = design.matrix if isinstance(design, Design) else design
    lam = check_lambda(lam)
    fam = get_family(response.family)
    k = response.n_classes
    beta = np.asarray(beta, dtype=float).ravel()
    if beta.size != lam.size:
        raise ValueError("dimension mismatch")
    eta = linear_predictor(X, coef_matrix(beta, X.shape[1], k), k)
    r = fam.residual(eta, response.y)
    grad = -np.asarray(X.T @ r).reshape(-1, order="F")
    primal = fam.loss(eta, response.y) + sorted_l1_norm(beta, lam)
    gap, _ = _dual_gap(fam, response.y, primal, r, grad, lam)
    return gap, infeasibility(grad, lam)


def relative_gap(gap, primal, saturated):
    return gap / max(primal - saturated, TINY)


class _SubProblem:
    """Loss restricted to a subset of the flat coefficients."""

    def __init__(self, X, response, subset):
        p = X.shape[1]
        self.k = k = response.n_classes
        self.fam = get_family(response.family)
        self.y = response.y
        subset = np.asarray(subset, dtype=np.intp)
        feats, rows = np.unique(subset % p, return_inverse=True)
        self.nf = feats.size
        self.X = X[:, feats]
        # position of each free coefficient inside the local (nf, k) block
        self.loc = rows + self.nf * (subset // p)

    def eta(self, x):
        b = np.zeros(self.nf * self.k)
        b[self.loc] = x
        return linear_predictor(self.X, b.reshape((self.nf, self.k), order="F"), self.k)

    def grad(self, r):
        g = -np.asarray(self.X.T @ r).reshape(-1, order="F")
        return g[self.loc]

    def lipschitz(self, n_iter):
        # power iteration on X^T X with a fixed start
        if self.nf == 0:
            return 1.0
        v = np.random.default_rng(0).standard_normal(self.nf)
        v /= np.linalg.norm(v)
        est = 0.0
        for _ in range(n_iter):
            w = np.asarray(self.X.T @ (self.X @ v)).ravel()
            nrm = np.linalg.norm(w)
            if nrm == 0:
                return 1.0
            if abs(nrm - est) <= 1e-6 * nrm:
                est = nrm
                break
            est = nrm
            v = w / nrm
        curv = self.fam.curvature if self.fam.curvature is not None else 1.0
        return 1.02 * curv * est


def fista_solve(design, response, lam, subset=None, warm_start=None, config=None,
                lipschitz=None):
    """Solve a SLOPE problem on a coefficient subset with FISTA.

    Parameters
    ----------
    design : Design or array of shape (n, p)
    response : Response
    lam : array of shape (p * K,)
        Penalty weights for the full problem. A subset of size ``m`` is
        penalized with the ``m`` largest weights.
    subset : array of int, optional
        Flat coefficient indices that are free; defaults to all.
    warm_start : array of shape (p * K,), optional
    config : SolverConfig, optional
    lipschitz : float, optional
        Known step-size constant for this subset; estimated otherwise.

    Returns
    -------
    SolverResult
    """
    config = config or SolverConfig()
    X = design.matrix if isinstance(design, Design) else design
    lam = check_lambda(lam)
    ptot = X.shape[1] * response.n_classes
    if lam.size != ptot:
        raise ValueError("lambda has length %d, expected %d" % (lam.size, ptot))
    subset = np.arange(ptot) if subset is None else np.unique(np.asarray(subset, dtype=np.intp))
    if subset.size and (subset[0] < 0 or subset[-1] >= ptot):
        raise ValueError("subset index out of range")

    beta = np.zeros(ptot)
    fam = get_family(response.family)
    y = response.y
    sat = fam.saturated(y)

    if subset.size == 0:
        return _finish(X, response, fam, beta, lam, subset, 0, True)

    prob = _SubProblem(X, response, subset)
    lam_sub = lam[:subset.size]
    x = np.zeros(subset.size) if warm_start is None else np.asarray(warm_start, float)[subset]

    L = lipschitz if lipschitz is not None else prob.lipschitz(config.power_iterations)
    eta_x = prob.eta(x)
    f_x = fam.loss(eta_x, y)
    obj_x = f_x + sorted_l1_norm(x, lam_sub)
    x_prev, eta_prev = x, eta_x
    t = 1.0
    converged = False
    it = 0
    while it < config.max_iterations:
        it += 1
        t_next = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        mom = (t - 1) / t_next
        z = x + mom * (x - x_prev)
        eta_z = eta_x + mom * (eta_x - eta_prev)
        f_z = fam.loss(eta_z, y)
        g_z = prob.grad(fam.residual(eta_z, y))
        # let the step grow again; backtracking below restores a valid bound
        L *= config.step_growth
        while True:
            x_new = prox_sorted_l1(z - g_z / L, lam_sub / L)
            eta_new = prob.eta(x_new)
            f_new = fam.loss(eta_new, y)
            d = x_new - z
            if f_new <= f_z + g_z @ d + 0.5 * L * (d @ d) + 1e-12 * abs(f_z):
                break
            L *= 2.0
            if L > 1e300:
                raise FloatingPointError("step size underflow")
        obj_new = f_new + sorted_l1_norm(x_new, lam_sub)
        if obj_new > obj_x and mom > 0:
            # objective went up: drop momentum and take a plain step from x
            x_prev, eta_prev = x, eta_x
            t = 1.0
            continue
        x_prev, eta_prev = x, eta_x
        x, eta_x, f_x, obj_x = x_new, eta_new, f_new, obj_new
        t = t_next

        if config.polish_every and it % config.polish_every == 0:
            cand = _polish(prob, x, lam_sub)
            if cand is not None:
                eta_c = prob.eta(cand)
                f_c = fam.loss(eta_c, y)
                obj_c = f_c + sorted_l1_norm(cand, lam_sub)
                if obj_c < obj_x:
                    x, eta_x, f_x, obj_x = cand, eta_c, f_c, obj_c
                    x_prev, eta_prev = x, eta_x
                    t = 1.0

        r = fam.residual(eta_x, y)
        g = prob.grad(r)
        gap, _ = _dual_gap(fam, y, obj_x, r, g, lam_sub)
        if (relative_gap(gap, obj_x, sat) <= config.gap_tol
                and infeasibility(g, lam_sub) <= config.infeas_tol):
            converged = True
            break

    beta[subset] = x
    return _finish(X, response, fam, beta, lam, subset, it, converged)


def _polish(prob, x, lam, newton_steps=20):
    """Re-solve on the cluster/sign structure of ``x``.

    With the clusters and signs of ``x`` fixed, the objective is smooth in
    the cluster magnitudes ``v``: ``f(X U v) + w^T v``, where column ``c``
    of ``U`` holds the signs of cluster ``c`` and ``w_c`` sums the weights
    at the cluster's positions. Gaussian losses are solved exactly, the
    logistic and Poisson losses with damped Newton steps. Returns ``None``
    when no candidate is available; the caller keeps it only if the true
    objective improves.
    """
    fam = prob.fam
    if prob.k != 1 or not np.any(x):
        return None
    cl = ordering_and_ranks(x)
    cols, weights = [], []
    for idx, (lo, hi) in zip(cl.clusters, cl.bounds):
        if x[idx[0]] == 0:
            continue
        cols.append(idx)
        weights.append(lam[lo:hi].sum())
    w = np.array(weights)
    n_cl = len(cols)
    XU = np.empty((prob.X.shape[0], n_cl))
    for c, idx in enumerate(cols):
        col = prob.X[:, prob.loc[idx]] @ np.sign(x[idx])
        XU[:, c] = np.asarray(col).ravel()
    v = np.array([np.abs(x[idx]).mean() for idx in cols])
    y = prob.y

    if fam.name == "gaussian":
        v = np.linalg.lstsq(XU.T @ XU, XU.T @ y - w, rcond=None)[0]
    else:
        def objective(v):
            return fam.loss(XU @ v, y) + w @ v

        obj = objective(v)
        for _ in range(newton_steps):
            eta = XU @ v
            grad = -(XU.T @ fam.residual(eta, y)) + w
            H = XU.T @ (fam.curvature_weights(eta, y)[:, None] * XU)
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
            a = 1.0
            while a > 1e-10:
                v_new = v - a * step
                obj_new = objective(v_new)
                if obj_new <= obj:
                    break
                a *= 0.5
            else:
                break
            done = obj - obj_new <= 1e-15 * max(1.0, abs(obj))
            v, obj = v_new, obj_new
            if done:
                break
    if not np.all(np.isfinite(v)):
        return None
    out = np.zeros_like(x)
    for c, idx in enumerate(cols):
        out[idx] = v[c] * np.sign(x[idx])
    return out


def _finish(X, response, fam, beta, lam, subset, iterations, converged):
    y = response.y
    k = response.n_classes
    eta = linear_predictor(X, coef_matrix(beta, X.shape[1], k), k)
    r = fam.residual(eta, y)
    grad_full = -np.asarray(X.T @ r).reshape(-1, order="F")
    primal = fam.loss(eta, y) + sorted_l1_norm(beta, lam)
    if subset.size == 0:
        # nothing free to optimize: trivially optimal on the subset
        return SolverResult(beta, grad_full, primal, 0.0, 0.0, iterations, True)
    lam_sub = lam[:subset.size]
    g = grad_full[subset]
    gap, _ = _dual_gap(fam, y, primal, r, g, lam_sub)
    return SolverResult(beta, grad_full, primal, gap, infeasibility(g, lam_sub),
                        iterations, converged)
