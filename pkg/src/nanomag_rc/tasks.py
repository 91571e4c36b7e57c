"""Benchmark tasks: waveform identification, Boolean functions, ECA observer.

Every dataset is a :class:`TaskDataset` of integer input symbols and binary
target labels. Labels are regressed as ``2*label - 1`` and read back by sign
(or argmax for the one-hot waveform classes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exceptions import ConfigurationError
from .readout import Scheme

SQUARE = (3, 3, 3, 0, 0, 0)
TRIANGLE = (0, 1, 2, 3, 2, 1)
WAVEFORM_CLASSES = ("square", "triangle")
DEFAULT_WARMUP = 5
TRAIN_FRACTION = 0.8


@dataclass(frozen=True)
class TaskDataset:
    """Aligned input symbols ``(N, n_inputs)`` and labels ``(N, T)``.

    ``train`` and ``test`` partition ``0..N-1`` temporally; ``mask`` marks the
    indices that take part in fitting and scoring (warm-up steps are False).
    """

    name: str
    inputs: np.ndarray
    targets: np.ndarray
    train: np.ndarray
    test: np.ndarray
    mask: np.ndarray
    seed: int
    levels: int = 2
    scheme: Scheme = Scheme.SIGN
    target_names: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def n_steps(self):
        return self.inputs.shape[0]

    @property
    def n_inputs(self):
        return self.inputs.shape[1]

    def fit_index(self):
        return self.train[self.mask[self.train]]

    def score_index(self):
        return self.test[self.mask[self.test]]

    def regression_targets(self, columns=slice(None)):
        return 2.0 * self.targets[:, columns] - 1.0


def temporal_split(n, warmup, train_fraction=TRAIN_FRACTION):
    """First ``train_fraction`` of the steps train, the rest test; warm-up masked."""
    cut = int(math.floor(train_fraction * n))
    idx = np.arange(n)
    mask = idx >= warmup
    return idx[:cut], idx[cut:], mask


def _finish(name, inputs, targets, seed, warmup, **kw):
    inputs = np.ascontiguousarray(inputs, dtype=np.int64)
    targets = np.ascontiguousarray(targets, dtype=np.int8)
    for arr in (inputs, targets):
        arr.setflags(write=False)
    train, test, mask = temporal_split(inputs.shape[0], warmup)
    return TaskDataset(name, inputs, targets, train, test, mask, seed, **kw)


# -- waveform ---------------------------------------------------------------

def gen_waveform_dataset(periods, seed, square=SQUARE, triangle=TRIANGLE, only=None):
    """Random sequence of square/triangle periods, one 2-bit symbol per sample.

    ``only="square"`` (or ``"triangle"``) forces every period to one class.
    Targets are one-hot over :data:`WAVEFORM_CLASSES`.
    """
    if periods < 2:
        raise ValueError(f"periods must be >= 2, got {periods}")
    if len(square) != len(triangle):
        raise ValueError("square and triangle patterns must have the same length")
    rng = np.random.default_rng(seed)
    if only is None:
        classes = rng.integers(0, 2, periods)
    else:
        classes = np.full(periods, WAVEFORM_CLASSES.index(only))
    patterns = np.array([square, triangle])
    symbols = patterns[classes].reshape(-1)
    labels = np.repeat(classes, len(square))
    onehot = np.eye(2, dtype=np.int8)[labels]
    return _finish("waveform", symbols[:, None], onehot, seed, DEFAULT_WARMUP,
                   levels=4, scheme=Scheme.ARGMAX, target_names=WAVEFORM_CLASSES,
                   meta={"periods": periods, "samples_per_period": len(square)})


# -- Boolean functions --------------------------------------------------------

MAX_BOOLEAN_WIDTH = 4


def window_codes(bits, width):
    """Integer code of the last ``width`` bits at each step.

    The most recent bit is the least significant. Steps with fewer than
    ``width`` bits of history use zeros for the missing bits; they are
    masked from scoring anyway.
    """
    bits = np.asarray(bits, dtype=np.int64)
    code = np.zeros(bits.shape[0], dtype=np.int64)
    for k in range(width):
        shifted = np.zeros_like(bits)
        shifted[k:] = bits[: bits.shape[0] - k]
        code |= shifted << k
    return code


def truth_table_index(fn, width):
    """Column index of the Boolean function ``fn(b_oldest, ..., b_newest)``."""
    f = 0
    for code in range(2**width):
        args = [(code >> k) & 1 for k in reversed(range(width))]
        if fn(*args):
            f |= 1 << code
    return f


def boolean_targets(codes, functions):
    functions = np.asarray(functions, dtype=np.int64)
    return ((functions[None, :] >> codes[:, None]) & 1).astype(np.int8)


def gen_boolean_dataset(width, stream_len, seed):
    """Random bit stream with every ``width``-bit Boolean function as a target.

    Column ``f`` at step ``t`` is bit ``code_t`` of ``f``, where ``code_t``
    packs the last ``width`` bits (see :func:`window_codes`). There are
    ``2**(2**width)`` columns.
    """
    if width not in (2, 3, 4):
        raise ValueError(f"Boolean width must be 2, 3 or 4, got {width}")
    if stream_len <= width:
        raise ValueError(f"stream_len must exceed width ({width}), got {stream_len}")
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, stream_len)
    codes = window_codes(bits, width)
    functions = np.arange(2 ** (2**width))
    targets = boolean_targets(codes, functions)
    warmup = max(width - 1, DEFAULT_WARMUP)
    return _finish(f"boolean-w{width}", bits[:, None], targets, seed, warmup,
                   meta={"width": width, "codes": codes})


# -- elementary cellular automata ------------------------------------------

@dataclass(frozen=True)
class EcaConfig:
    rule: int = 59
    width: int = 24
    steps: int = 400
    stride: int = 3
    seed: int = 0
    boundary: str = "periodic"

    def __post_init__(self):
        if not 0 <= self.rule <= 255:
            raise ConfigurationError(f"ECA rule must be in [0, 255], got {self.rule}")
        if self.width < 3:
            raise ConfigurationError(f"ECA width must be >= 3, got {self.width}")
        if self.stride < 2:
            raise ConfigurationError(f"observe stride must be >= 2, got {self.stride}")
        if self.steps < 1:
            raise ConfigurationError(f"steps must be >= 1, got {self.steps}")
        if self.boundary != "periodic":
            raise ConfigurationError(f"only periodic boundaries are supported, got {self.boundary!r}")

    @property
    def observed_columns(self):
        return np.arange(0, self.width, self.stride)

    @property
    def hidden_columns(self):
        return np.setdiff1d(np.arange(self.width), self.observed_columns)


def eca_step(row, rule, boundary="periodic"):
    """One update of an elementary cellular automaton (Wolfram numbering)."""
    if boundary != "periodic":
        raise ValueError(f"unsupported boundary {boundary!r}")
    row = np.asarray(row, dtype=np.int64)
    if row.ndim != 1 or row.shape[0] < 3:
        raise ValueError("ECA row must be 1-D with at least 3 cells")
    neighborhood = 4 * np.roll(row, 1) + 2 * row + np.roll(row, -1)
    return ((rule >> neighborhood) & 1).astype(np.int8)


def eca_evolve(initial, rule, steps):
    """Space-time table with ``steps`` rows, the first being ``initial``."""
    rows = [np.asarray(initial, dtype=np.int8)]
    for _ in range(steps - 1):
        rows.append(eca_step(rows[-1], rule))
    return np.array(rows, dtype=np.int8)


def gen_eca_observer_dataset(config, max_inputs=None):
    """Observed columns ``0, W, 2W, ...`` as inputs; every other cell as a target."""
    obs = config.observed_columns
    if max_inputs is not None and obs.size > max_inputs:
        raise ConfigurationError(
            f"{obs.size} observed ECA columns exceed the layout's {max_inputs} logical inputs"
        )
    rng = np.random.default_rng(config.seed)
    table = eca_evolve(rng.integers(0, 2, config.width), config.rule, config.steps)
    hidden = config.hidden_columns
    return _finish("eca-observer", table[:, obs], table[:, hidden], config.seed,
                   DEFAULT_WARMUP, target_names=tuple(f"cell{c}" for c in hidden),
                   meta={"table": table, "config": config})


# -- scoring --------------------------------------------------------------------

@dataclass(frozen=True)
class Score:
    correct: np.ndarray
    total: int

    @property
    def per_target(self):
        return self.correct / self.total

    @property
    def mean(self):
        return float(Fraction(int(self.correct.sum()), self.total * self.correct.size))


def score(predictions, targets, mask):
    """Accuracy of label predictions against ``targets`` over ``mask``.

    ``mask`` is a boolean vector over rows or an index array. Counts are
    exact integers; :attr:`Score.mean` is computed as an exact fraction.
    """
    p = np.asarray(predictions)
    t = np.asarray(targets)
    if p.shape != t.shape:
        raise ValueError(f"predictions {p.shape} and targets {t.shape} differ in shape")
    if p.ndim == 1:
        p, t = p[:, None], t[:, None]
    mask = np.asarray(mask)
    rows = np.nonzero(mask)[0] if mask.dtype == bool else mask
    if rows.size == 0:
        raise ValueError("score mask selects no rows")
    correct = (p[rows] == t[rows]).sum(axis=0)
    return Score(correct.astype(np.int64), int(rows.size))


# -- training and reports ---------------------------------------------------

TARGET_CHUNK = 4096


@dataclass
class TaskReport:
    """Outcome of one task run, reservoir or baseline."""

    task: str
    method: str
    mean_accuracy: float
    per_target: np.ndarray
    target_names: tuple
    n_train: int
    n_test: int
    lam: float
    features: np.ndarray = field(default=None, repr=False)
    transient: object = field(default=None, repr=False)
    info: dict = field(default_factory=dict)

    def summary_lines(self):
        lines = [
            f"task: {self.task}",
            f"method: {self.method}",
            f"lambda: {self.lam!r}",
            f"train_samples: {self.n_train}",
            f"test_samples: {self.n_test}",
            f"targets: {self.per_target.size}",
            f"mean_accuracy: {self.mean_accuracy:.6f}",
            f"min_target_accuracy: {float(self.per_target.min()):.6f}",
        ]
        lines += [f"{k}: {v}" for k, v in sorted(self.info.items())]
        return lines


def fit_and_score(features, dataset, lam, valid=None):
    """Ridge-fit the train split and score the test split of ``dataset``.

    ``valid`` further restricts the dataset mask (the delay-window baseline
    uses it for rows without a full window). Targets are processed in
    blocks sharing one factorization. Returns the :class:`Score` and, when
    there is a single block, the fitted :class:`RidgeModel`.
    """
    from .readout import RidgeFactor, classify, predict

    X = np.asarray(features, dtype=float)
    if X.shape[0] != dataset.n_steps:
        raise ValueError(f"{X.shape[0]} feature rows for {dataset.n_steps} dataset steps")
    mask = dataset.mask if valid is None else dataset.mask & valid
    fit_rows = dataset.train[mask[dataset.train]]
    test_rows = dataset.test[mask[dataset.test]]
    if fit_rows.size == 0 or test_rows.size == 0:
        raise ValueError("empty train or test split after masking")
    factor = RidgeFactor(X[fit_rows], lam)
    if dataset.scheme is Scheme.ARGMAX:
        model = factor.solve(dataset.regression_targets()[fit_rows])
        labels = classify(predict(model, X[test_rows]), Scheme.ARGMAX)
        truth = np.argmax(dataset.targets[test_rows], axis=1)
        return score(labels, truth, np.arange(test_rows.size)), model
    n_t = dataset.targets.shape[1]
    correct = np.zeros(n_t, dtype=np.int64)
    model = None
    for lo in range(0, n_t, TARGET_CHUNK):
        cols = slice(lo, min(n_t, lo + TARGET_CHUNK))
        block = factor.solve(dataset.regression_targets(cols)[fit_rows])
        labels = classify(predict(block, X[test_rows]), Scheme.SIGN)
        correct[cols] = (labels == dataset.targets[test_rows, cols]).sum(axis=0)
        if n_t <= TARGET_CHUNK:
            model = block
    return Score(correct, int(test_rows.size)), model


def report_from_score(dataset, method, result, lam, n_train, **extra):
    s, _ = result
    names = dataset.target_names if dataset.scheme is Scheme.SIGN else ("class",)
    if not names:
        names = tuple(f"f{i}" for i in range(s.correct.size))
    return TaskReport(dataset.name, method, s.mean, s.per_target, names, n_train,
                      s.total, lam, **extra)


def run_task(task, layout, protocol, params, lam, initial=None, method="reservoir"):
    """Reset the reservoir, drive it with ``task.inputs`` and score the readout.

    ``initial`` skips the reset when a relaxed reference state is already at
    hand. The returned report carries the full :class:`SequenceResult` as
    its transient.
    """
    from .reservoir import reset, run_sequence

    if task.n_inputs != layout.n_inputs:
        raise ConfigurationError(
            f"dataset has {task.n_inputs} logical inputs, layout has {layout.n_inputs}"
        )
    if task.levels != protocol.levels:
        raise ConfigurationError(f"dataset uses {task.levels} levels, protocol {protocol.levels}")
    if initial is None:
        initial = reset(layout, params).state
    run = run_sequence(layout, protocol, params, task.inputs, initial=initial)
    result = fit_and_score(run.samples, task, lam)
    info = {
        "pulse_strength": protocol.pulse_strength,
        "pulse_duration": protocol.pulse_duration,
        "symbol_period": protocol.symbol_period,
        "layout": layout.name,
        "magnets": layout.n_magnets,
    }
    return report_from_score(task, method, result, lam, int(task.fit_index().size),
                             features=run.samples, transient=run, info=info)


def _fmt(x):
    return format(float(x), ".9g")


def write_report(report, directory, prefix=""):
    """Write ``report.txt``, ``accuracies.csv`` and, if present, the transient.

    Every file is a deterministic function of the report, so identical runs
    give byte-identical output.
    """
    import csv
    import os

    os.makedirs(directory, exist_ok=True)
    paths = {}
    p = os.path.join(directory, f"{prefix}report.txt")
    with open(p, "w") as fh:
        fh.write("\n".join(report.summary_lines()) + "\n")
    paths["report"] = p
    p = os.path.join(directory, f"{prefix}accuracies.csv")
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["target", "accuracy"])
        for name, acc in zip(report.target_names, report.per_target):
            w.writerow([name, _fmt(acc)])
    paths["accuracies"] = p
    run = report.transient
    if run is not None:
        from .reservoir import write_samples, write_trajectory

        paths["transient"] = write_trajectory(run, os.path.join(directory, f"{prefix}transient.csv"))
        paths["samples"] = write_samples(run.samples, os.path.join(directory, f"{prefix}samples.csv"))
    return paths


def write_eca_table(dataset, path):
    """Space-time ECA table as CSV bits, one row per step (header ``step,c0..``)."""
    table = dataset.meta["table"]
    with open(path, "w") as fh:
        fh.write(",".join(["step"] + [f"c{i}" for i in range(table.shape[1])]) + "\n")
        for t, row in enumerate(table):
            fh.write(f"{t}," + ",".join(str(int(b)) for b in row) + "\n")
    return path
