"""Sorted L1 norm primitives.

The sorted L1 norm of ``beta`` with non-increasing weights ``lam`` is

    J(beta; lam) = sum_j lam_j |beta|_(j),

where ``|beta|_(1) >= ... >= |beta|_(p)``. This module provides the norm,
ordering/rank/cluster helpers, the proximal operator and a membership test
for the subdifferential.

Indices are 0-based throughout.
"""
from dataclasses import dataclass, field

import numpy as np
from numba import njit

# relative slack used to decide that two magnitudes belong to the same cluster
CLUSTER_RTOL = 1e-10


def check_lambda(lam):
    """Validate a penalty sequence and return it as a float array.

    Raises ``ValueError`` unless ``lam`` is a non-empty, finite,
    non-negative and non-increasing 1-d vector.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or lam.size < 1:
        raise ValueError("lambda must be a non-empty 1-d vector")
    if not np.all(np.isfinite(lam)):
        raise ValueError("lambda must be finite")
    if lam[-1] < 0:
        raise ValueError("lambda must be non-negative")
    if np.any(np.diff(lam) > 0):
        raise ValueError("lambda must be non-increasing")
    return lam


def _check_dims(x, lam):
    if x.shape != lam.shape:
        raise ValueError(
            "dimension mismatch: got %s and %s" % (x.shape, lam.shape))


def cumsum(x):
    x = np.asarray(x, dtype=float)
    if x.size < 1:
        raise ValueError("cumsum needs a non-empty vector")
    return np.cumsum(x)


@dataclass
class Clustering:
    """Ordering, ranks and magnitude clusters of a vector.

    ``ordering[i]`` is the index of the i-th largest magnitude and
    ``ranks[j]`` is the position of ``j`` in that ordering, so the two are
    inverse permutations. ``clusters`` lists index arrays of equal
    magnitude, largest magnitude first. ``bounds[c]`` gives the half-open
    range of ordering positions occupied by cluster ``c``.
    """
    ordering: np.ndarray
    ranks: np.ndarray
    clusters: list
    bounds: list = field(default_factory=list)


def ordering_and_ranks(beta, rtol=CLUSTER_RTOL):
    """Sort ``|beta|`` in decreasing order and group equal magnitudes.

    Ties are broken by ascending index.

    >>> c = ordering_and_ranks([-3, 5, 3, 6])
    >>> (c.ordering + 1).tolist(), (c.ranks + 1).tolist()
    ([4, 2, 1, 3], [3, 2, 4, 1])
    """
    a = np.abs(np.asarray(beta, dtype=float)).ravel()
    if a.size < 1:
        raise ValueError("need a non-empty vector")
    ordering = np.argsort(-a, kind="stable")
    ranks = np.empty_like(ordering)
    ranks[ordering] = np.arange(a.size)

    sa = a[ordering]
    # a new cluster starts wherever the gap to the previous magnitude is real
    gap = sa[:-1] - sa[1:]
    new = gap > rtol * np.maximum(1.0, sa[:-1])
    starts = np.concatenate(([0], np.flatnonzero(new) + 1))
    ends = np.concatenate((starts[1:], [a.size]))
    bounds = list(zip(starts.tolist(), ends.tolist()))
    clusters = [np.sort(ordering[s:e]) for s, e in bounds]
    return Clustering(ordering, ranks, clusters, bounds)


def sorted_l1_norm(beta, lam):
    beta = np.asarray(beta, dtype=float).ravel()
    lam = check_lambda(lam)
    _check_dims(beta, lam)
    return float(np.dot(lam, np.sort(np.abs(beta))[::-1]))


def prox_sorted_l1(v, lam):
    """Proximal operator of the sorted L1 norm.

    Solves ``argmin_x 0.5 * ||x - v||^2 + J(x; lam)`` by sorting ``|v|``,
    running pool-adjacent-violators on ``|v|_sorted - lam`` so the result is
    non-increasing, clipping at zero and undoing the sort. Zeros are exact.

    Parameters
    ----------
    v : array of shape (p,)
    lam : array of shape (p,), non-increasing and non-negative

    Returns
    -------
    x : array of shape (p,)
    """
    v = np.asarray(v, dtype=float).ravel()
    lam = check_lambda(lam)
    _check_dims(v, lam)
    p = v.size

    a = np.abs(v)
    order = np.argsort(-a, kind="stable")
    x = np.empty(p)
    x[order] = _pava_clip(a[order] - lam)
    return np.sign(v) * x


@njit(cache=True)
def _pava_clip(w):
    # non-increasing least-squares fit to w via a block stack, clipped at zero
    p = w.size
    start = np.empty(p, dtype=np.int64)
    total = np.empty(p)
    length = np.empty(p, dtype=np.int64)
    top = -1
    for i in range(p):
        top += 1
        start[top] = i
        total[top] = w[i]
        length[top] = 1
        while top > 0 and total[top - 1] * length[top] <= total[top] * length[top - 1]:
            total[top - 1] += total[top]
            length[top - 1] += length[top]
            top -= 1
    out = np.empty(p)
    for b in range(top + 1):
        avg = total[b] / length[b]
        if avg < 0.0:
            avg = 0.0
        for i in range(start[b], start[b] + length[b]):
            out[i] = avg
    return out


@dataclass
class SubgradientVerdict:
    feasible: bool
    worst_excess: float
    equality_residual: float
    sign_mismatch: bool


def subdiff_feasible(beta, s, lam, tol=1e-9):
    """Test whether ``s`` lies in the subdifferential of J at ``beta``.

    For every magnitude cluster of ``beta`` the entries of ``|s|`` in that
    cluster, sorted decreasingly, are compared with the weights at the
    cluster's positions in the ordering of ``beta``. The cumulative sum of
    the differences must stay below ``tol``; for nonzero clusters the total
    must vanish (within ``tol``) and signs must agree with ``beta``.

    Returns
    -------
    SubgradientVerdict
        ``worst_excess`` is the largest positive cumulative-sum excess and
        ``equality_residual`` the nonzero-cluster residual of largest size.
    """
    beta = np.asarray(beta, dtype=float).ravel()
    s = np.asarray(s, dtype=float).ravel()
    lam = check_lambda(lam)
    _check_dims(beta, lam)
    _check_dims(s, lam)
    if tol < 0:
        raise ValueError("tol must be non-negative")

    cl = ordering_and_ranks(beta)
    worst = 0.0
    resid = 0.0
    mismatch = False
    for idx, (lo, hi) in zip(cl.clusters, cl.bounds):
        sc = np.sort(np.abs(s[idx]))[::-1]
        cs = np.cumsum(sc - lam[lo:hi])
        worst = max(worst, float(cs.max()))
        if beta[idx[0]] != 0:
            if abs(cs[-1]) > abs(resid):
                resid = float(cs[-1])
            bad = (np.sign(s[idx]) == -np.sign(beta[idx])) & (np.abs(s[idx]) > tol)
            mismatch = mismatch or bool(np.any(bad))
    feasible = worst <= tol and abs(resid) <= tol and not mismatch
    return SubgradientVerdict(feasible, worst, resid, mismatch)


def dual_norm(g, lam):
    """Dual of the sorted L1 norm: ``max_i cumsum(|g|_sorted)_i / cumsum(lam)_i``.

    Entries with zero cumulative weight are skipped (the ratio is infinite
    there unless the gradient vanishes too).
    """
    g = np.asarray(g, dtype=float).ravel()
    lam = check_lambda(lam)
    _check_dims(g, lam)
    num = np.cumsum(np.sort(np.abs(g))[::-1])
    den = np.cumsum(lam)
    pos = den > 0
    if not np.any(pos):
        raise ValueError("lambda has no positive entry")
    if np.any(num[~pos] > 0):
        return np.inf
    return float(np.max(num[pos] / den[pos]))
