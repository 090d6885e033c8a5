import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import certified_gap
from slopescreen.objectives import Design, Response, loss_gradient
from slopescreen.screening import detect_violations
from slopescreen.solver import SolverConfig, duality_gap, fista_solve, infeasibility
from slopescreen.sorted_l1 import dual_norm, prox_sorted_l1, subdiff_feasible

TIGHT = SolverConfig(gap_tol=1e-12)


def _gap_radius(res):
    # with an orthonormal design the objective is 1-strongly convex, so the
    # distance to the optimum is at most sqrt(2 * gap); the gap itself is
    # only known up to rounding in the primal value
    return np.sqrt(2 * (res.gap + 8 * np.finfo(float).eps * res.primal))


def _random_problem(family, n, p, seed, k=1):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p)) / np.sqrt(n)
    beta = np.zeros(p)
    beta[:3] = 2 * rng.standard_normal(3)
    eta = X @ beta
    if family == "gaussian":
        y = eta + 0.5 * rng.standard_normal(n)
    elif family == "logistic":
        y = (rng.random(n) < 1 / (1 + np.exp(-eta))).astype(float)
    elif family == "poisson":
        y = rng.poisson(np.exp(0.5 * eta)).astype(float)
    else:
        y = rng.integers(0, 3, n)
        y[:3] = [0, 1, 2]
    r = Response(family, y)
    lam = np.linspace(1.0, 0.3, p * r.n_classes)
    return Design(X), r, lam


def test_scalar_soft_threshold():
    res = fista_solve(Design(np.ones((1, 1))), Response("gaussian", [3.0]), [1.0], config=TIGHT)
    assert res.converged
    assert abs(res.beta[0] - 2.0) <= _gap_radius(res)


def test_identity_design_gives_prox():
    res = fista_solve(Design(np.eye(2)), Response("gaussian", [4.0, 3.0]), [3.0, 1.0],
                      config=TIGHT)
    np.testing.assert_allclose(res.beta, [1.5, 1.5], atol=_gap_radius(res))
    gap, infeas = duality_gap(Design(np.eye(2)), Response("gaussian", [4.0, 3.0]),
                              [1.5, 1.5], [3.0, 1.0])
    assert gap <= 1e-12 and infeas == 0.0


def test_orthogonal_design_matches_prox():
    rng = np.random.default_rng(4)
    Q, _ = np.linalg.qr(rng.standard_normal((30, 8)))
    y = rng.standard_normal(30) * 3
    lam = np.linspace(2.0, 0.2, 8)
    res = fista_solve(Design(Q), Response("gaussian", y), lam, config=TIGHT)
    np.testing.assert_allclose(res.beta, prox_sorted_l1(Q.T @ y, lam), atol=_gap_radius(res))


def test_zero_above_entry_point():
    d, r, lam = _random_problem("gaussian", 40, 10, 0)
    g0 = loss_gradient(d, r, np.zeros(10))
    sigma = dual_norm(g0, lam)
    res = fista_solve(d, r, 1.01 * sigma * lam)
    np.testing.assert_array_equal(res.beta, 0.0)
    gap, infeas = duality_gap(d, r, np.zeros(10), sigma * lam)
    assert infeas <= 1e-15


@pytest.mark.parametrize("family", ["gaussian", "logistic", "poisson", "multinomial"])
def test_certified_solutions(family):
    d, r, lam = _random_problem(family, 60, 12, 1)
    res = fista_solve(d, r, lam, config=SolverConfig(gap_tol=1e-9))
    assert res.converged
    assert res.gap / res.primal <= 1e-9 + 1e-12
    # optimality through the subdifferential test
    ok = subdiff_feasible(res.beta, -res.gradient_full, lam, tol=1e-4 * lam[0])
    assert ok.feasible
    assert detect_violations(res.beta, res.gradient_full, lam, tol=1e-4).size == 0


@pytest.mark.parametrize("family", ["gaussian", "logistic"])
def test_gap_matches_independent_computation(family):
    d, r, lam = _random_problem(family, 50, 9, 2)
    beta = np.random.default_rng(0).standard_normal(9)
    gap, infeas = duality_gap(d, r, beta, lam)
    _, gap_ref, infeas_ref = certified_gap(d.matrix, r.y, family, beta, lam)
    assert gap == pytest.approx(gap_ref, rel=1e-10)
    assert infeas == pytest.approx(infeas_ref, rel=1e-10, abs=1e-15)
    assert gap > 0


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["gaussian", "logistic", "poisson", "multinomial"]),
       st.integers(0, 10**6))
def test_gap_is_nonnegative(family, seed):
    d, r, lam = _random_problem(family, 20, 5, seed)
    beta = np.random.default_rng(seed).standard_normal(lam.size) * 0.5
    gap, infeas = duality_gap(d, r, beta, lam)
    assert gap >= -1e-12 and infeas >= 0


def test_gap_invariant_under_permutation():
    d, r, lam = _random_problem("gaussian", 30, 7, 3)
    beta = np.random.default_rng(1).standard_normal(7)
    perm = np.random.default_rng(2).permutation(7)
    g1 = duality_gap(d, r, beta, lam)
    g2 = duality_gap(Design(d.matrix[:, perm]), r, beta[perm], lam)
    np.testing.assert_allclose(g1, g2, rtol=1e-10)


def test_subset_solve_uses_top_weights():
    d, r, lam = _random_problem("gaussian", 40, 10, 5)
    subset = np.array([0, 1, 2])
    res = fista_solve(d, r, lam, subset=subset, config=TIGHT)
    assert np.all(res.beta[3:] == 0)
    ref = fista_solve(Design(d.matrix[:, subset]), r, lam[:3], config=TIGHT)
    np.testing.assert_allclose(res.beta[subset], ref.beta, atol=1e-7)
    assert res.gradient_full.shape == (10,)


def test_empty_subset():
    d, r, lam = _random_problem("gaussian", 10, 4, 0)
    res = fista_solve(d, r, lam, subset=[])
    assert res.converged and np.all(res.beta == 0)


def test_warm_start_converges_faster():
    d, r, lam = _random_problem("logistic", 80, 20, 7)
    cfg = SolverConfig(gap_tol=1e-8, polish_every=0)
    cold = fista_solve(d, r, lam, config=cfg)
    warm = fista_solve(d, r, 0.98 * lam, warm_start=cold.beta, config=cfg)
    again = fista_solve(d, r, 0.98 * lam, config=cfg)
    assert warm.converged and again.converged
    assert warm.iterations <= again.iterations


def test_iteration_cap_is_reported():
    d, r, lam = _random_problem("logistic", 80, 20, 7)
    res = fista_solve(d, r, 0.05 * lam, config=SolverConfig(max_iterations=2, gap_tol=1e-14,
                                                            polish_every=0))
    assert not res.converged
    assert res.iterations == 2


def test_bad_inputs():
    d, r, lam = _random_problem("gaussian", 10, 4, 0)
    with pytest.raises(ValueError):
        fista_solve(d, r, lam[:3])
    with pytest.raises(ValueError):
        fista_solve(d, r, lam, subset=[7])
    with pytest.raises(ValueError):
        SolverConfig(gap_tol=0)
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)


def test_infeasibility_definition():
    assert infeasibility(np.array([0.5, 0.1]), np.array([1.0, 0.5])) == 0.0
    assert infeasibility(np.array([2.0, 0.0]), np.array([1.0, 1.0])) == pytest.approx(0.5)
