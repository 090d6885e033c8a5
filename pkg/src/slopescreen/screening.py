"""Support prediction and screening rules for SLOPE.

All index sets are 0-based numpy integer arrays.
"""
from dataclasses import dataclass

import numpy as np

from .sorted_l1 import check_lambda, ordering_and_ranks, subdiff_feasible


@dataclass
class ScreenSet:
    indices: np.ndarray
    predicted_count: int

    def __len__(self):
        return self.indices.size

    def __contains__(self, j):
        return j in set(self.indices.tolist())


def _check_sorted_input(c, lam):
    c = np.asarray(c)
    lam = np.asarray(lam)
    if c.dtype == object or lam.dtype == object:
        # exact inputs (e.g. fractions.Fraction) are kept as they are
        c, lam = c.ravel(), lam.ravel()
        if np.any(np.diff(lam) > 0) or np.any(lam < 0):
            raise ValueError("lambda must be non-negative and non-increasing")
    else:
        c = np.asarray(c, dtype=float).ravel()
        lam = check_lambda(lam)
    if c.shape != lam.shape:
        raise ValueError("dimension mismatch: %s vs %s" % (c.shape, lam.shape))
    if np.any(np.diff(c) > 0):
        raise ValueError("c must be sorted in non-increasing order")
    return c, lam


def screen_support(c, lam):
    """Predict the support from a sorted gradient magnitude vector.

    Walks through ``c - lam`` accumulating a batch of indices and moves the
    batch into the result whenever its sum becomes non-negative.

    Object arrays of exact numbers such as ``fractions.Fraction`` are
    accepted and summed without rounding, which matters when a batch sum
    is exactly zero, as it is for every nonzero cluster at a solution.

    Parameters
    ----------
    c : array of shape (p,), non-increasing
    lam : array of shape (p,), non-increasing

    Returns
    -------
    ScreenSet
        Positions ``0..k-1`` of the sorted input.
    """
    c, lam = _check_sorted_input(c, lam)
    selected = []
    batch = []
    total = 0
    for i in range(c.size):
        batch.append(i)
        total += c[i] - lam[i]
        if total >= 0:
            selected.extend(batch)
            batch = []
            total = 0
    idx = np.array(selected, dtype=np.intp)
    return ScreenSet(idx, idx.size)


def screen_support_fast(c, lam):
    """Single-pass version of :func:`screen_support`; returns the count ``k``."""
    c, lam = _check_sorted_input(c, lam)
    p = c.size
    i, k, s = 1, 0, 0
    while i + k <= p:
        s += c[i + k - 1] - lam[i + k - 1]
        if s >= 0:
            k += i
            i = 1
            s = 0
        else:
            i += 1
    return k


def strong_rule_slope(grad_prev, lambda_prev, lambda_next, pairing="rank"):
    """Strong screening rule for SLOPE.

    Keeps the predictors that :func:`screen_support_fast` selects from
    ``(|grad_prev| + lambda_prev - lambda_next)`` sorted, with
    ``lambda_next`` as the penalty.

    With ``pairing="rank"`` the gradient magnitudes are sorted first and the
    penalty decrement is added position by position. ``pairing="coordinate"``
    adds the decrement to the unsorted gradient instead.
    """
    g = np.abs(np.asarray(grad_prev, dtype=float).ravel())
    lam_prev = check_lambda(lambda_prev)
    lam_next = check_lambda(lambda_next)
    if not (g.shape == lam_prev.shape == lam_next.shape):
        raise ValueError("dimension mismatch")
    if np.any(lam_next > lam_prev):
        raise ValueError("lambda_next must not exceed lambda_prev")

    shift = lam_prev - lam_next
    if pairing == "rank":
        perm = np.argsort(-g, kind="stable")
        c = g[perm] + shift
    elif pairing == "coordinate":
        perm = np.arange(g.size)
        c = g + shift
    else:
        raise ValueError("pairing must be 'rank' or 'coordinate'")
    perm2 = np.argsort(-c, kind="stable")
    k = screen_support_fast(c[perm2], lam_next)
    return ScreenSet(np.sort(perm[perm2[:k]]), k)


def strong_rule_lasso(grad_prev, lambda_prev, lambda_next):
    """Lasso strong rule: keep ``j`` iff ``|g_j| > 2 lambda_next - lambda_prev``."""
    if not 0 < lambda_next <= lambda_prev:
        raise ValueError("need 0 < lambda_next <= lambda_prev")
    g = np.abs(np.asarray(grad_prev, dtype=float).ravel())
    idx = np.flatnonzero(g > 2 * lambda_next - lambda_prev)
    return ScreenSet(idx, idx.size)


def detect_violations(beta, grad, lam, tol=1e-4, candidates=None):
    """Find predictors breaking the KKT conditions at ``beta``.

    ``tol`` is relative to ``lam[0]`` and is applied as an absolute slack on
    every cumulative sum. When ``candidates`` is given the check is done for
    the problem restricted to those predictors (using the largest
    ``len(candidates)`` weights); ``beta`` must be zero elsewhere.

    If the zero cluster fails, the returned zero-coefficient predictors are
    those :func:`screen_support` selects from their sorted gradient
    magnitudes against the trailing weights. A failing nonzero cluster is
    returned whole. An empty result means ``beta`` is KKT-optimal.
    """
    beta = np.asarray(beta, dtype=float).ravel()
    grad = np.asarray(grad, dtype=float).ravel()
    lam = check_lambda(lam)
    if candidates is None:
        candidates = np.arange(beta.size)
    else:
        candidates = np.unique(np.asarray(candidates, dtype=np.intp))
    if candidates.size == 0:
        return np.array([], dtype=np.intp)
    m = candidates.size
    b = beta[candidates]
    s = -grad[candidates]
    lam = lam[:m]
    abs_tol = tol * lam[0]

    if subdiff_feasible(b, s, lam, abs_tol).feasible:
        return np.array([], dtype=np.intp)

    cl = ordering_and_ranks(b)
    out = []
    for idx, (lo, hi) in zip(cl.clusters, cl.bounds):
        a = np.abs(s[idx])
        order = np.argsort(-a, kind="stable")
        excess = np.cumsum(a[order] - lam[lo:hi])
        if b[idx[0]] == 0:
            # idx is stored ascending; reorder by gradient magnitude
            if excess.max() > abs_tol:
                k = screen_support_fast(a[order], lam[lo:hi])
                out.append(idx[order[:k]])
            continue
        wrong_sign = np.any((np.sign(s[idx]) == -np.sign(b[idx])) & (a > abs_tol))
        if excess.max() > abs_tol or abs(excess[-1]) > abs_tol or wrong_sign:
            out.append(idx)
    if not out:
        return np.array([], dtype=np.intp)
    return np.sort(candidates[np.concatenate(out)])
