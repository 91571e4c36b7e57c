"""Input validation shared by the estimators and functional entry points."""

import numpy as np
from sklearn.utils import check_array


def check_features(X):
    """Return ``X`` as a finite 2-D float array with at least one row."""
    return check_array(X, dtype=np.float64, ensure_2d=True, ensure_min_samples=1)


def check_targets(Y, n_rows):
    """Return targets as a 2-D float array with ``n_rows`` rows."""
    Y = np.asarray(Y)
    if Y.ndim == 1:
        Y = Y[:, None]
    Y = check_array(Y, dtype=np.float64, ensure_2d=True, ensure_min_samples=1)
    if Y.shape[0] != n_rows:
        raise ValueError(f"targets have {Y.shape[0]} rows, features have {n_rows}")
    return Y


def check_symbols(symbols, levels=None, name="symbols"):
    """Return integer symbol sequences shaped ``(n_steps, n_inputs)``.

    A 1-D sequence is treated as a single input column.
    """
    arr = np.asarray(symbols)
    if arr.size == 0:
        return np.zeros((0, 1 if arr.ndim < 2 else arr.shape[1]), dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError(f"{name} must be integers")
        arr = arr.astype(np.int64)
    if levels is not None and (arr.min() < 0 or arr.max() >= levels):
        raise ValueError(f"{name} must lie in [0, {levels}), got range [{arr.min()}, {arr.max()}]")
    return arr
