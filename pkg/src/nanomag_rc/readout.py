"""Closed-form linear output layer.

The trained weights play the role of conductances in an ideal crossbar: the
forward pass is a single affine map ``y = W x + b``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import RankDeficiencyError
from .validation import check_features, check_targets

DEFAULT_LAMBDA = 1e-6


class Scheme(str, enum.Enum):
    SIGN = "sign"
    ARGMAX = "argmax"


@dataclass(frozen=True)
class RidgeModel:
    """Output-layer weights ``(T, F)``, bias ``(T,)`` and the lambda used."""

    weights: np.ndarray
    bias: np.ndarray
    lam: float

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weights, dtype=float))
        b = np.atleast_1d(np.asarray(self.bias, dtype=float))
        if b.shape != (w.shape[0],):
            raise ValueError(f"bias shape {b.shape} does not match weights {w.shape}")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ValueError("model weights must be finite")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def n_features(self):
        return self.weights.shape[1]

    @property
    def n_targets(self):
        return self.weights.shape[0]


class RidgeFactor:
    """Cholesky factor of the regularized Gram matrix of one design matrix.

    Lets many target blocks share a single factorization, which is how the
    65536-function Boolean task is trained without holding every target
    column in memory at once.
    """

    def __init__(self, features, lam=DEFAULT_LAMBDA, fit_bias=True):
        X = check_features(features)
        if lam < 0:
            raise ValueError(f"lambda must be >= 0, got {lam}")
        n = X.shape[0]
        self.lam = float(lam)
        self.fit_bias = fit_bias
        self.n_features = X.shape[1]
        self._design = np.hstack([X, np.ones((n, 1))]) if fit_bias else X
        A = self._design
        if lam == 0:
            rank = np.linalg.matrix_rank(A)
            if rank < A.shape[1]:
                raise RankDeficiencyError(
                    f"design matrix has rank {rank} < {A.shape[1]} columns; use lambda > 0"
                )
        gram = A.T @ A
        reg = np.full(A.shape[1], self.lam)
        if fit_bias:
            reg[-1] = 0.0
        gram[np.diag_indices_from(gram)] += reg
        try:
            self._cho = scipy.linalg.cho_factor(gram, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise RankDeficiencyError(f"regularized Gram matrix is singular: {exc}") from exc

    def solve(self, targets):
        Y = check_targets(targets, self._design.shape[0])
        sol = scipy.linalg.cho_solve(self._cho, self._design.T @ Y, check_finite=False)
        if self.fit_bias:
            weights, bias = sol[:-1].T, sol[-1]
        else:
            weights, bias = sol.T, np.zeros(Y.shape[1])
        return RidgeModel(np.ascontiguousarray(weights), np.asarray(bias), self.lam)


def ridge_fit(features, targets, lam=DEFAULT_LAMBDA, fit_bias=True):
    """Solve ``min ||[X 1] W - Y||^2 + lam ||W_x||^2`` in closed form.

    The bias column is never penalized. The normal equations are solved via
    a Cholesky factorization, never an explicit inverse.

    Raises
    ------
    RankDeficiencyError
        If ``lam == 0`` and the augmented design matrix is rank deficient.
    """
    X = check_features(features)
    check_targets(targets, X.shape[0])
    return RidgeFactor(X, lam, fit_bias).solve(targets)


def predict(model, sample):
    """Affine readout of one sample ``(F,)`` or a batch ``(N, F)``."""
    x = np.asarray(sample, dtype=float)
    if x.shape[-1] != model.n_features or x.ndim > 2:
        raise ValueError(
            f"sample has {x.shape[-1] if x.ndim else 0} features, model expects {model.n_features}"
        )
    return x @ model.weights.T + model.bias


def classify(prediction, scheme=Scheme.SIGN):
    """Map continuous outputs to labels.

    ``sign``: 1 where ``y >= 0`` else 0, per target. ``argmax``: index of the
    largest output, ties resolved to the lowest index. Works row-wise on
    2-D input.
    """
    y = np.asarray(prediction, dtype=float)
    if y.size == 0:
        raise ValueError("prediction is empty")
    scheme = Scheme(scheme)
    if scheme is Scheme.SIGN:
        return (y >= 0).astype(np.int8)
    return np.argmax(y, axis=-1)


def save_model(model, path):
    """Write ``model`` as CSV: one header line, then ``T`` rows of ``bias, w_0 .. w_F-1``."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# lambda={model.lam!r},targets={model.n_targets},features={model.n_features}\n")
        table = np.hstack([model.bias[:, None], model.weights])
        np.savetxt(fh, table, delimiter=",", fmt="%.17g")


def load_model(path):
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing model header line")
        meta = dict(kv.split("=", 1) for kv in header[1:].strip().split(","))
        table = np.loadtxt(fh, delimiter=",", ndmin=2)
    t, f = int(meta["targets"]), int(meta["features"])
    if table.shape != (t, f + 1):
        raise ValueError(f"{path}: table shape {table.shape} does not match header ({t}, {f + 1})")
    return RidgeModel(table[:, 1:], table[:, 0], float(meta["lambda"]))


class RidgeReadout(RegressorMixin, BaseEstimator):
    """Estimator wrapper around :func:`ridge_fit` for use in pipelines.

    Parameters
    ----------
    lam : float, default=1e-6
        L2 penalty on the non-bias weights.
    scheme : {"sign", "argmax"}, default="sign"
        How :meth:`predict_labels` turns outputs into labels.
    """

    def __init__(self, lam=DEFAULT_LAMBDA, scheme="sign"):
        self.lam = lam
        self.scheme = scheme

    def fit(self, X, y):
        y = np.asarray(y, dtype=float)
        self.single_output_ = y.ndim == 1
        self.model_ = ridge_fit(X, y, self.lam)
        self.n_features_in_ = self.model_.n_features
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        out = predict(self.model_, check_features(X))
        return out[:, 0] if self.single_output_ else out

    def predict_labels(self, X):
        return classify(self.predict(X), self.scheme)
