"""Single-layer linear baseline on a tapped delay line of raw inputs."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import ConfigurationError
from .readout import DEFAULT_LAMBDA
from .tasks import fit_and_score, report_from_score
from .validation import check_symbols

MAX_ONEHOT_COLUMNS = 1 << 16


class Encoding(str, enum.Enum):
    RAW = "raw"
    ONEHOT = "onehot"


@dataclass(frozen=True)
class DelayWindowConfig:
    window: int = 2
    encoding: Encoding = Encoding.RAW

    def __post_init__(self):
        if self.window < 1:
            raise ConfigurationError(f"window must be >= 1, got {self.window}")
        object.__setattr__(self, "encoding", Encoding(self.encoding))


def embed(inputs, config, levels=2):
    """Delay-window features and the mask of rows with a full window.

    Row ``t`` holds symbols ``t-window+1 .. t`` of every input, oldest first
    (input-major). With ``onehot`` encoding the whole window is treated as
    one word and one-hot expanded over ``levels**(n_inputs*window)`` columns,
    which makes every function of the window linear.
    """
    sym = check_symbols(inputs, levels)
    n, k = sym.shape
    w = config.window
    if n < w:
        raise ValueError(f"sequence length {n} is shorter than the window {w}")
    lagged = np.zeros((n, k, w), dtype=np.int64)
    for lag in range(w):
        # column w-1 is the present symbol
        lagged[lag:, :, w - 1 - lag] = sym[: n - lag]
    valid = np.arange(n) >= w - 1
    if config.encoding is Encoding.RAW:
        return lagged.reshape(n, k * w).astype(float), valid
    size = levels ** (k * w)
    if size > MAX_ONEHOT_COLUMNS:
        raise ConfigurationError(f"one-hot window would need {size} columns")
    digits = lagged.reshape(n, k * w)
    word = np.zeros(n, dtype=np.int64)
    for col in range(k * w):
        word = word * levels + digits[:, col]
    feats = np.zeros((n, size))
    feats[np.arange(n), word] = 1.0
    return feats, valid


class DelayEmbedding(TransformerMixin, BaseEstimator):
    """Transformer form of :func:`embed`; rows without a full window are zero-padded."""

    def __init__(self, window=2, encoding="raw", levels=2):
        self.window = window
        self.encoding = encoding
        self.levels = levels

    def fit(self, X, y=None):
        self.config_ = DelayWindowConfig(self.window, self.encoding)
        self.n_features_in_ = check_symbols(X).shape[1]
        return self

    def transform(self, X):
        feats, _ = embed(X, DelayWindowConfig(self.window, self.encoding), self.levels)
        return feats


def run_baseline(task, config=DelayWindowConfig(), lam=DEFAULT_LAMBDA):
    """Train and score the delay-window baseline on the task's own split."""
    feats, valid = embed(task.inputs, config, task.levels)
    result = fit_and_score(feats, task, lam, valid=valid)
    n_train = int(np.count_nonzero((task.mask & valid)[task.train]))
    return report_from_score(task, f"baseline-{config.encoding.value}-w{config.window}",
                             result, lam, n_train, features=feats,
                             info={"window": config.window, "encoding": config.encoding.value})
