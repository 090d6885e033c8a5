import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import screen_support_reference
from slopescreen.screening import (detect_violations, screen_support, screen_support_fast,
                                   strong_rule_lasso, strong_rule_slope)


@st.composite
def sorted_pair(draw, max_p=30):
    p = draw(st.integers(1, max_p))
    # dyadic grid values keep every partial sum exact
    c = np.sort(draw(arrays(float, p, elements=st.integers(0, 40).map(lambda i: i / 8))))[::-1]
    lam = np.sort(draw(arrays(float, p, elements=st.integers(0, 40).map(lambda i: i / 8))))[::-1]
    return c, lam


def test_screen_support_examples():
    assert screen_support([3, 2, 1], [2.5, 2, 1.5]).indices.tolist() == [0, 1]
    assert screen_support([2.4, 2.0, 1.9], [2.5, 1.8, 1.0]).indices.tolist() == [0, 1, 2]
    assert screen_support([0, 0], [1, 0.5]).indices.size == 0


def test_screen_support_fast_examples():
    assert screen_support_fast([3, 2, 1], [2.5, 2, 1.5]) == 2
    assert screen_support_fast([2.4, 2.0, 1.9], [2.5, 1.8, 1.0]) == 3
    assert screen_support_fast([5, 4, 3], [1, 1, 1]) == 3


def test_zero_sum_batch_is_kept():
    assert screen_support_fast([1.0, 0.5], [1.0, 0.5]) == 2
    assert screen_support([1.0, 0.5], [1.0, 0.5]).predicted_count == 2


def test_unsorted_input_rejected():
    with pytest.raises(ValueError):
        screen_support([1, 2], [2, 1])
    with pytest.raises(ValueError):
        screen_support_fast([1, 2], [2, 1])
    with pytest.raises(ValueError):
        screen_support([2, 1], [2, 1, 0])


@settings(max_examples=500, deadline=None)
@given(sorted_pair())
def test_fast_and_batch_versions_agree(args):
    c, lam = args
    k = screen_support_fast(c, lam)
    assert screen_support(c, lam).indices.tolist() == list(range(k))
    assert k == screen_support_reference(c, lam)


@settings(max_examples=300, deadline=None)
@given(sorted_pair(), st.integers(0, 29), st.floats(0, 3))
def test_raising_c_never_shrinks_the_prefix(args, j, bump):
    c, lam = args
    j = j % c.size
    c2 = c.copy()
    c2[j] += bump
    c2 = np.sort(c2)[::-1]
    assert screen_support_fast(c2, lam) >= screen_support_fast(c, lam)


def test_exhaustive_small_grid():
    grid = (0.0, 1.0, 2.0)
    for p in range(1, 5):
        for c in itertools.combinations_with_replacement(grid[::-1], p):
            for lam in itertools.combinations_with_replacement(grid[::-1], p):
                k = screen_support_fast(c, lam)
                assert screen_support(c, lam).indices.tolist() == list(range(k))


def test_strong_rule_slope_examples():
    lp, ln = [1.5, 1.0], [0.9, 0.6]
    assert strong_rule_slope([2.0, 0.5], lp, ln).indices.tolist() == [0, 1]
    assert strong_rule_slope([2.0, -0.1], lp, ln).indices.tolist() == [0]
    assert strong_rule_slope([0.1, -2.0], lp, ln).indices.tolist() == [1]


def test_strong_rule_slope_rejects_increasing_penalty():
    with pytest.raises(ValueError):
        strong_rule_slope([1.0, 1.0], [1.0, 0.5], [1.1, 0.5])
    with pytest.raises(ValueError):
        strong_rule_slope([1.0, 1.0], [1.0, 0.5], [1.0, 0.5], pairing="diagonal")


def test_strong_rule_coordinate_pairing():
    # pairing the decrement with coordinates instead of gradient ranks
    g = [0.1, 2.0]
    lp, ln = np.array([3.0, 1.0]), np.array([1.0, 0.9])
    assert strong_rule_slope(g, lp, ln, pairing="rank").indices.tolist() == [1]
    assert strong_rule_slope(g, lp, ln, pairing="coordinate").indices.tolist() == [0, 1]


def test_strong_rule_lasso_examples():
    assert strong_rule_lasso([0.9, 0.5], 1.0, 0.8).indices.tolist() == [0]
    assert strong_rule_lasso([0.9, 1.1], 1.0, 1.0).indices.tolist() == [1]
    assert strong_rule_lasso([0.1, 0.2], 1.0, 0.8).indices.size == 0
    with pytest.raises(ValueError):
        strong_rule_lasso([1.0], 1.0, 1.5)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 30), st.floats(0.1, 5), st.floats(0.1, 1), st.integers(0, 2**32 - 1))
def test_equal_weights_reduce_to_lasso_rule(p, lp, frac, seed):
    g = np.random.default_rng(seed).standard_normal(p) * 3
    ln = lp * frac
    a = strong_rule_slope(g, np.full(p, lp), np.full(p, ln)).indices
    b = strong_rule_lasso(g, lp, ln).indices
    assert a.tolist() == b.tolist()


def test_zero_shift_at_solution_covers_support():
    # with no change in penalty the rule keeps every predictor whose
    # gradient sits on the boundary of the subdifferential
    g = np.array([-1.0, 0.5, 0.2])
    lam = np.array([1.0, 0.5, 0.3])
    kept = strong_rule_slope(g, lam, lam).indices
    assert {0, 1} <= set(kept.tolist())


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_strong_rule_under_unit_slope_bound(p, seed):
    # gradients that move by at most the penalty decrement, position by
    # position and without reordering, cannot escape the screened set
    rng = np.random.default_rng(seed)
    lam_prev = np.sort(rng.uniform(0.5, 3, p))[::-1]
    lam_next = lam_prev * rng.uniform(0.5, 1.0)
    lam_next = np.minimum.accumulate(lam_next)
    g_prev = np.sort(rng.uniform(0, 3, p))[::-1]
    step = rng.uniform(0, 1, p) * (lam_prev - lam_next)
    g_next = np.sort(g_prev + step)[::-1]
    if not np.all(np.argsort(-g_next, kind="stable") == np.arange(p)):
        return
    kept = set(strong_rule_slope(g_prev, lam_prev, lam_next).indices.tolist())
    need = set(range(screen_support_fast(g_next, lam_next)))
    assert need <= kept


def test_detect_violations_examples():
    # zero cluster fails: 1.5 - 0.5 > 0 at the trailing weight
    v = detect_violations([2.0, 0.0], [-1.0, -1.5], [1.0, 0.5], tol=0.0)
    assert v.tolist() == [1]
    assert detect_violations(np.zeros(2), [0.5, -0.2], [1.0, 0.5]).size == 0


def test_detect_violations_nonzero_cluster():
    # beta_0 is nonzero but its gradient does not match its weight
    v = detect_violations([1.0, 0.0], [-0.5, 0.0], [1.0, 0.5], tol=1e-6)
    assert v.tolist() == [0]


def test_detect_violations_restricted_candidates():
    beta = np.array([0.0, 0.0, 0.0])
    grad = np.array([-0.9, 0.0, -5.0])
    lam = np.array([1.0, 0.8, 0.5])
    assert detect_violations(beta, grad, lam, candidates=[0, 1]).size == 0
    # 5 - 1 > 0 and then 0.9 - 0.8 > 0, so both enter together
    assert detect_violations(beta, grad, lam).tolist() == [0, 2]
    assert detect_violations(beta, grad, lam, candidates=[]).size == 0


def test_detect_violations_tolerance_scales_with_lambda():
    beta = np.zeros(2)
    grad = np.array([-1.00005, 0.0])
    lam = np.array([1.0, 0.5])
    assert detect_violations(beta, grad, lam, tol=1e-4).size == 0
    assert detect_violations(beta, grad, lam, tol=1e-6).tolist() == [0]
