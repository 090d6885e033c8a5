"""Smooth loss families and data standardization.

Each family works on the linear predictor ``eta = X @ B`` where ``B`` has
shape ``(p, K)`` (``K = 1`` except for the multinomial family). Losses are
unnormalized sums over observations.

Coefficients are handled as flat vectors of length ``p * K``, in
column-major order, which is also how the sorted L1 penalty sees them.
"""
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse
from scipy.special import expit, log_softmax, logsumexp, softmax, xlogy

FAMILIES = ("gaussian", "logistic", "poisson", "multinomial")

# exp() arguments are clamped here when evaluating means/probabilities
ETA_CLAMP = 30.0


@dataclass
class Design:
    """Predictor matrix together with its standardization metadata."""
    matrix: object
    column_centers: np.ndarray = None
    column_scales: np.ndarray = None
    standardized: bool = False

    def __post_init__(self):
        if sparse.issparse(self.matrix):
            self.matrix = sparse.csc_matrix(self.matrix, dtype=float)
        else:
            self.matrix = np.asarray(self.matrix, dtype=float)
            if self.matrix.ndim != 2:
                raise ValueError("design matrix must be 2-d")
        p = self.matrix.shape[1]
        if self.column_centers is None:
            self.column_centers = np.zeros(p)
        if self.column_scales is None:
            self.column_scales = np.ones(p)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def is_sparse(self):
        return sparse.issparse(self.matrix)


@dataclass
class Response:
    """Response vector tagged with its family.

    For the multinomial family ``values`` holds arbitrary class labels,
    which are encoded as ``0..K-1`` in sorted label order.
    """
    family: str
    values: np.ndarray
    centered: bool = False
    classes: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError("unknown family %r" % self.family)
        v = np.asarray(self.values).ravel()
        if self.family == "multinomial":
            self.classes, codes = np.unique(v, return_inverse=True)
            if self.classes.size < 2:
                raise ValueError("multinomial response needs at least two classes")
            self._y = codes.astype(np.intp)
        else:
            v = np.asarray(v, dtype=float)
            if not np.all(np.isfinite(v)):
                raise ValueError("response has non-finite entries")
            if self.family == "logistic" and not np.all((v == 0) | (v == 1)):
                raise ValueError("logistic response must be 0/1")
            if self.family == "poisson" and (
                    np.any(v < 0) or np.any(v != np.round(v))):
                raise ValueError("poisson response must be non-negative integers")
            self._y = v
        self.values = v

    @property
    def y(self):
        return self._y

    @property
    def n_classes(self):
        return len(self.classes) if self.family == "multinomial" else 1


class Family:
    name = None
    # bound on the curvature of the loss as a function of eta
    curvature = None

    def loss(self, eta, y):
        raise NotImplementedError

    def residual(self, eta, y):
        """Negative derivative of the loss with respect to ``eta``."""
        raise NotImplementedError

    def conjugate(self, theta, y):
        """Convex conjugate of the loss evaluated at ``-theta``."""
        raise NotImplementedError

    def saturated(self, y):
        return 0.0

    def curvature_weights(self, eta, y):
        """Second derivative of the loss in each observation's ``eta``."""
        raise NotImplementedError

    def in_domain(self, theta, y):
        return True


class Gaussian(Family):
    name = "gaussian"
    curvature = 1.0

    def loss(self, eta, y):
        r = y - eta
        return 0.5 * float(r @ r)

    def residual(self, eta, y):
        return y - eta

    def curvature_weights(self, eta, y):
        return np.ones_like(eta)

    def conjugate(self, theta, y):
        return 0.5 * float(theta @ theta) - float(theta @ y)


class Logistic(Family):
    name = "logistic"
    curvature = 0.25

    def loss(self, eta, y):
        return float(np.sum(np.logaddexp(0.0, eta) - y * eta))

    def residual(self, eta, y):
        return y - expit(np.clip(eta, -ETA_CLAMP, ETA_CLAMP))

    def curvature_weights(self, eta, y):
        mu = expit(np.clip(eta, -ETA_CLAMP, ETA_CLAMP))
        return mu * (1 - mu)

    def in_domain(self, theta, y):
        pi = y - theta
        return bool(np.all((pi >= 0) & (pi <= 1)))

    def conjugate(self, theta, y):
        pi = y - theta
        if not self.in_domain(theta, y):
            return np.inf
        return float(np.sum(xlogy(pi, pi) + xlogy(1 - pi, 1 - pi)))


class Poisson(Family):
    name = "poisson"
    curvature = None  # unbounded; step sizes come from backtracking

    def loss(self, eta, y):
        return float(np.sum(np.exp(eta) - y * eta))

    def residual(self, eta, y):
        return y - np.exp(np.minimum(eta, ETA_CLAMP))

    def curvature_weights(self, eta, y):
        return np.exp(np.minimum(eta, ETA_CLAMP))

    def saturated(self, y):
        return float(np.sum(y - xlogy(y, y)))

    def in_domain(self, theta, y):
        return bool(np.all(y - theta >= 0))

    def conjugate(self, theta, y):
        mu = y - theta
        if not self.in_domain(theta, y):
            return np.inf
        return float(np.sum(xlogy(mu, mu) - mu))


class Multinomial(Family):
    name = "multinomial"
    curvature = 0.5

    def _onehot(self, y, k):
        out = np.zeros((y.size, k))
        out[np.arange(y.size), y] = 1.0
        return out

    def loss(self, eta, y):
        return float(np.sum(logsumexp(eta, axis=1) - eta[np.arange(y.size), y]))

    def residual(self, eta, y):
        return self._onehot(y, eta.shape[1]) - softmax(eta, axis=1)

    def in_domain(self, theta, y):
        pi = self._onehot(y, theta.shape[1]) - theta
        return bool(np.all(pi >= 0) and np.allclose(pi.sum(axis=1), 1.0))

    def conjugate(self, theta, y):
        pi = self._onehot(y, theta.shape[1]) - theta
        if np.any(pi < 0):
            return np.inf
        return float(np.sum(xlogy(pi, pi)))


_FAMILY_CLASSES = {c.name: c for c in (Gaussian, Logistic, Poisson, Multinomial)}


def get_family(name):
    try:
        return _FAMILY_CLASSES[name]()
    except KeyError:
        raise ValueError("unknown family %r" % name) from None


def _matrix(design):
    return design.matrix if isinstance(design, Design) else design


def coef_matrix(beta, p, k):
    """Reshape a flat coefficient vector to ``(p, k)`` (column-major)."""
    beta = np.asarray(beta, dtype=float)
    if beta.size != p * k:
        raise ValueError("expected %d coefficients, got %d" % (p * k, beta.size))
    return beta.reshape((p, k), order="F")


def linear_predictor(X, B, k):
    eta = X @ B
    eta = np.asarray(eta)
    return eta[:, 0] if k == 1 else eta


def loss_value(design, response, beta):
    X = _matrix(design)
    k = response.n_classes
    fam = get_family(response.family)
    eta = linear_predictor(X, coef_matrix(beta, X.shape[1], k), k)
    if not np.all(np.isfinite(eta)):
        raise FloatingPointError("non-finite linear predictor")
    return fam.loss(eta, response.y)


def loss_gradient(design, response, beta):
    """Gradient of the loss with respect to the flat coefficient vector."""
    X = _matrix(design)
    k = response.n_classes
    fam = get_family(response.family)
    eta = linear_predictor(X, coef_matrix(beta, X.shape[1], k), k)
    if not np.all(np.isfinite(eta)):
        raise FloatingPointError("non-finite linear predictor")
    r = fam.residual(eta, response.y)
    g = -(X.T @ r)
    return np.asarray(g).reshape(-1, order="F")


def deviance(design, response, beta):
    fam = get_family(response.family)
    return 2.0 * (loss_value(design, response, beta) - fam.saturated(response.y))


def null_deviance(design, response):
    X = _matrix(design)
    return deviance(design, response, np.zeros(X.shape[1] * response.n_classes))


def deviance_ratio(dev, null_dev):
    if null_dev <= 0:
        raise ZeroDivisionError("null deviance is zero; deviance ratio undefined")
    return 1.0 - dev / null_dev


def standardize(design, response=None):
    """Center and scale predictors; center a gaussian response.

    Dense columns end up with mean 0 and unit L2 norm. Sparse matrices are
    only scaled so they stay sparse. Standardizing twice is a no-op.

    Returns
    -------
    (Design, Response)
        ``Response`` is ``None`` if none was given.
    """
    if not isinstance(design, Design):
        design = Design(design)
    X = design.matrix
    n, p = X.shape
    if n < 2:
        raise ValueError("need at least two observations")

    if design.is_sparse:
        centers = np.zeros(p)
        norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=0)).ravel())
        bad = np.flatnonzero(norms == 0)
        if bad.size:
            raise ValueError("column %d is all zero" % bad[0])
        Xs = X @ sparse.diags(1.0 / norms)
        Xs = sparse.csc_matrix(Xs)
    else:
        centers = X.mean(axis=0)
        Xc = X - centers
        norms = np.linalg.norm(Xc, axis=0)
        scale_ref = np.maximum(np.abs(X).max(axis=0), 1.0)
        bad = np.flatnonzero(norms <= 1e-12 * scale_ref * np.sqrt(n))
        if bad.size:
            raise ValueError("column %d is constant" % bad[0])
        Xs = Xc / norms

    new_design = Design(Xs, design.column_centers + centers * design.column_scales,
                        design.column_scales * norms, standardized=True)

    if response is None:
        return new_design, None
    if response.family == "gaussian" and not response.centered:
        response = replace(response, values=response.values - response.values.mean(),
                           centered=True)
    return new_design, response
