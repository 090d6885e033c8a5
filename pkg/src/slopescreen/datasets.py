"""Synthetic data generators and file readers.

Random numbers come from numpy's PCG64 generator. A ``GenSpec.seed`` is fed
to ``numpy.random.SeedSequence`` and spawned into three independent
streams, used for the design, the true coefficients and the response
noise in that order, so changing e.g. ``rho`` never alters the
coefficients drawn for a given seed.
"""
import csv
from dataclasses import asdict, dataclass

import numpy as np
from scipy import sparse
from scipy.signal import lfilter
from scipy.special import softmax

from .objectives import ETA_CLAMP, FAMILIES, Design, Response

DESIGNS = ("equicorrelated", "ar_chain")
BETA_SCHEMES = ("gaussian_unit", "pm2", "grid_1_20", "grid_fractions",
                "multinomial_rowscatter")


class DataFormatError(ValueError):
    pass


@dataclass
class GenSpec:
    n: int
    p: int
    k: int
    rho: float = 0.0
    design_kind: str = "equicorrelated"
    family: str = "gaussian"
    beta_scheme: str = "gaussian_unit"
    noise_scale: float = None
    seed: int = 0
    n_classes: int = 3

    def __post_init__(self):
        self.design_kind = self.design_kind.replace("-", "_")
        if self.design_kind not in DESIGNS:
            raise ValueError("design_kind must be one of %s" % (DESIGNS,))
        if self.family not in FAMILIES:
            raise ValueError("unknown family %r" % self.family)
        if self.beta_scheme not in BETA_SCHEMES:
            raise ValueError("beta_scheme must be one of %s" % (BETA_SCHEMES,))
        if self.n < 2 or self.p < 1:
            raise ValueError("need n >= 2 and p >= 1")
        if not 0 <= self.k <= self.p:
            raise ValueError("need 0 <= k <= p")
        if self.design_kind == "equicorrelated" and not 0 <= self.rho < 1:
            raise ValueError("rho must lie in [0, 1) for an equicorrelated design")
        if self.beta_scheme in ("grid_1_20", "grid_fractions",
                                "multinomial_rowscatter") and self.k > 20:
            raise ValueError("this beta scheme draws without replacement from 20 values")
        if (self.family == "multinomial") != (self.beta_scheme == "multinomial_rowscatter"):
            raise ValueError("multinomial data needs the multinomial_rowscatter scheme "
                             "and vice versa")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_dict(self):
        return asdict(self)


def _streams(seed):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]


def _true_beta(spec, rng):
    p, k = spec.p, spec.k
    if spec.beta_scheme == "multinomial_rowscatter":
        B = np.zeros((p, spec.n_classes))
        vals = rng.choice(np.arange(1, 21), size=k, replace=False)
        B[np.arange(k), rng.integers(spec.n_classes, size=k)] = vals
        return B.reshape(-1, order="F")
    beta = np.zeros(p)
    if spec.beta_scheme == "gaussian_unit":
        beta[:k] = rng.standard_normal(k)
    elif spec.beta_scheme == "pm2":
        beta[:k] = rng.choice([-2.0, 2.0], size=k)
    elif spec.beta_scheme == "grid_1_20":
        beta[:k] = rng.choice(np.arange(1, 21), size=k, replace=False)
    else:
        beta[:k] = rng.choice(np.arange(1, 21), size=k, replace=False) / 40.0
    return beta


def _response(spec, X, beta, rng):
    noise_scale = spec.noise_scale
    if noise_scale is None:
        noise_scale = 1.0 if spec.design_kind == "equicorrelated" else np.sqrt(20.0)
    n = X.shape[0]
    if spec.family == "multinomial":
        eta = X @ beta.reshape((spec.p, spec.n_classes), order="F")
        prob = softmax(eta, axis=1)
        # inverse-cdf draw, one uniform per row
        u = rng.random(n)[:, None]
        labels = (u > np.cumsum(prob, axis=1)).sum(axis=1)
        labels = np.minimum(labels, spec.n_classes - 1) + 1
        return Response("multinomial", labels)
    eta = X @ beta
    if spec.family == "gaussian":
        return Response("gaussian", eta + noise_scale * rng.standard_normal(n))
    if spec.family == "logistic":
        z = eta + noise_scale * rng.standard_normal(n)
        return Response("logistic", (z > 0).astype(float))
    if eta.max() > ETA_CLAMP:
        raise ValueError("poisson means overflow (max linear predictor %.1f); "
                         "shrink the coefficients" % eta.max())
    return Response("poisson", rng.poisson(np.exp(eta)).astype(float))


def gen_equicorrelated(spec):
    """Rows drawn i.i.d. from N(0, S) with unit variances and correlation ``rho``.

    Uses ``X = sqrt(rho) z 1^T + sqrt(1 - rho) E`` with one shared normal
    ``z`` per row.

    Returns
    -------
    (Design, Response, beta)
        The design is not standardized.
    """
    if spec.design_kind != "equicorrelated":
        raise ValueError("spec is not for an equicorrelated design")
    rx, rb, re = _streams(spec.seed)
    z = rx.standard_normal((spec.n, 1))
    E = rx.standard_normal((spec.n, spec.p))
    X = np.sqrt(spec.rho) * z + np.sqrt(1.0 - spec.rho) * E
    beta = _true_beta(spec, rb)
    return Design(X), _response(spec, X, beta, re), beta


def gen_ar_chain(spec):
    """Columns follow ``X_1 ~ N(0, I)``, ``X_j ~ N(rho X_{j-1}, I)``."""
    if spec.design_kind != "ar_chain":
        raise ValueError("spec is not for an ar_chain design")
    rx, rb, re = _streams(spec.seed)
    E = rx.standard_normal((spec.n, spec.p))
    X = lfilter([1.0], [1.0, -spec.rho], E, axis=1)
    beta = _true_beta(spec, rb)
    return Design(X), _response(spec, X, beta, re), beta


def generate(spec):
    if spec.design_kind == "equicorrelated":
        return gen_equicorrelated(spec)
    return gen_ar_chain(spec)


def checksum(design, response):
    """SHA-256 over the design and response bytes, for matching benchmark cells."""
    import hashlib

    h = hashlib.sha256()
    X = design.matrix
    if sparse.issparse(X):
        for a in (X.data, X.indices, X.indptr):
            h.update(np.ascontiguousarray(a).tobytes())
    else:
        h.update(np.ascontiguousarray(X).tobytes())
    h.update(np.asarray(response.values, dtype=float).tobytes())
    return h.hexdigest()[:16]


def read_csv(path, response_column="y", family="gaussian"):
    """Read a CSV file with a header row into a dense design and a response."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("%s: empty file" % path) from None
        header = [h.strip() for h in header]
        if response_column not in header:
            raise DataFormatError("%s: no column named %r" % (path, response_column))
        ycol = header.index(response_column)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError("%s:%d: expected %d cells, got %d"
                                      % (path, lineno, len(header), len(row)))
            vals = []
            for j, cell in enumerate(row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataFormatError("%s:%d: non-numeric cell %r in column %r"
                                          % (path, lineno, cell, header[j])) from None
            rows.append(vals)
    if not rows:
        raise DataFormatError("%s: no data rows" % path)
    data = np.array(rows)
    X = np.delete(data, ycol, axis=1)
    return Design(X), Response(family, data[:, ycol])


def write_csv(path, design, response, response_column="y"):
    """Write a dense design and response; floats use ``repr`` so they round-trip."""
    X = design.matrix
    if sparse.issparse(X):
        X = X.toarray()
    names = ["x%d" % (j + 1) for j in range(X.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + [response_column])
        for row, yi in zip(X, response.values):
            w.writerow([repr(float(v)) for v in row] + [repr(float(yi))])


def read_libsvm(path, family="gaussian", n_features=None):
    """Read ``label idx:val ...`` lines (1-based, increasing indices) into CSC form."""
    labels, rows, cols, vals = [], [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                labels.append(float(parts[0]))
            except ValueError:
                raise DataFormatError("%s:%d: bad label %r" % (path, lineno, parts[0])) from None
            last = 0
            for tok in parts[1:]:
                idx, sep, val = tok.partition(":")
                try:
                    j = int(idx)
                    v = float(val)
                except ValueError:
                    raise DataFormatError("%s:%d: malformed feature %r"
                                          % (path, lineno, tok)) from None
                if not sep or j < 1:
                    raise DataFormatError("%s:%d: malformed feature %r" % (path, lineno, tok))
                if j <= last:
                    raise DataFormatError("%s:%d: feature indices must be strictly "
                                          "increasing (got %d after %d)"
                                          % (path, lineno, j, last))
                last = j
                rows.append(len(labels) - 1)
                cols.append(j - 1)
                vals.append(v)
    n = len(labels)
    if n == 0:
        raise DataFormatError("%s: no data lines" % path)
    p = max(cols, default=-1) + 1
    if n_features is not None:
        if n_features < p:
            raise DataFormatError("%s: feature index %d exceeds n_features=%d"
                                  % (path, p, n_features))
        p = n_features
    X = sparse.csc_matrix((vals, (rows, cols)), shape=(n, p))
    return Design(X), Response(family, np.array(labels))
