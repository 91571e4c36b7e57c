"""Nanomagnet reservoir: layouts, STT symbol encoding and readout sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import CalibrationError, ConfigurationError, LayoutParseError
from .magnetics import (
    LLGParams,
    MagnetArray,
    NanomagnetSpec,
    Role,
    SimState,
    SttDrive,
    advance,
    relax,
    validate_no_overlap,
)
from .validation import check_symbols


@dataclass(frozen=True)
class PhysicsPreset:
    """Named material, geometry and integrator settings.

    ``ku`` is the effective perpendicular anisotropy of reservoir magnets;
    input magnets use ``input_ku`` so that a written state survives the
    dipolar pull of its neighbours until it is read.
    """

    name: str
    ms: float
    ku: float
    input_ku: float
    diameter: float
    thickness: float
    pitch: float
    alpha: float
    jitter: float
    gamma: float
    dt: float

    def llg_params(self, temperature=0.0, rng_seed=0):
        return LLGParams(gamma=self.gamma, dt=self.dt, temperature=temperature, rng_seed=rng_seed)

    def magnet(self, position, role=Role.READOUT):
        ku = self.input_ku if Role(role) is Role.INPUT else self.ku
        return NanomagnetSpec(position=position, diameter=self.diameter, thickness=self.thickness,
                              ms=self.ms, ku=ku, alpha=self.alpha, role=role)


# 13 nm Co discs at 60 nm pitch; ku puts the nearest-neighbour coupling
# 2*B_dip/B_k at ~1.0: adjacent magnets order antiparallel and stay
# perpendicular, while the array as a whole remains soft enough to respond.
PRESETS = {
    "default-pma": PhysicsPreset(
        name="default-pma", ms=1.4e6, ku=2.3e4, input_ku=1.48e5, diameter=50.0,
        thickness=13.0, pitch=60.0, alpha=0.5, jitter=2.0, gamma=1.76e11, dt=2e-12,
    ),
}


def get_preset(name_or_preset="default-pma", **overrides):
    if isinstance(name_or_preset, PhysicsPreset):
        preset = name_or_preset
    else:
        try:
            preset = PRESETS[name_or_preset]
        except KeyError:
            raise ConfigurationError(
                f"unknown physics preset {name_or_preset!r}; known: {sorted(PRESETS)}"
            ) from None
    return replace(preset, **overrides) if overrides else preset


# -- layouts ------------------------------------------------------------------

@dataclass(frozen=True)
class ReservoirLayout:
    """Magnets plus which of them are driven and which are read.

    ``input_ids`` is copy-major: logical input ``k`` drives magnets
    ``input_ids[k + c * n_inputs]`` for each copy ``c < duplication``.
    """

    magnets: tuple
    input_ids: tuple
    readout_ids: tuple
    duplication: int = 1
    name: str = "custom"
    grid_shape: tuple = None
    _magnet_array: MagnetArray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        magnets = tuple(self.magnets)
        object.__setattr__(self, "magnets", magnets)
        object.__setattr__(self, "input_ids", tuple(int(i) for i in self.input_ids))
        object.__setattr__(self, "readout_ids", tuple(int(i) for i in self.readout_ids))
        n = len(magnets)
        if not self.input_ids:
            raise ConfigurationError("layout needs at least one input magnet")
        if not self.readout_ids:
            raise ConfigurationError("layout needs at least one readout magnet")
        for i in self.input_ids + self.readout_ids:
            if not 0 <= i < n:
                raise ConfigurationError(f"magnet id {i} is out of range for {n} magnets")
        if len(set(self.input_ids)) != len(self.input_ids):
            raise ConfigurationError("input ids must map to distinct magnets")
        if set(self.input_ids) & set(self.readout_ids):
            raise ConfigurationError("input and readout magnets must be disjoint")
        for i in self.input_ids:
            if magnets[i].role is not Role.INPUT:
                raise ConfigurationError(f"magnet {i} is listed as an input but has role {magnets[i].role.value}")
        if self.duplication < 1 or len(self.input_ids) % self.duplication:
            raise ConfigurationError(
                f"{len(self.input_ids)} input magnets cannot be split into {self.duplication} copies"
            )
        validate_no_overlap(magnets)
        object.__setattr__(self, "_magnet_array", MagnetArray(magnets))

    @property
    def n_magnets(self):
        return len(self.magnets)

    @property
    def n_inputs(self):
        """Number of logical inputs."""
        return len(self.input_ids) // self.duplication

    def physical_inputs(self, k):
        return self.input_ids[k :: self.n_inputs]

    @classmethod
    def from_magnets(cls, magnets, duplication=1, name="custom"):
        """Inputs are the ``input``-role magnets in order; every other magnet is read."""
        magnets = tuple(magnets)
        inputs = [i for i, m in enumerate(magnets) if m.role is Role.INPUT]
        readouts = [i for i, m in enumerate(magnets) if m.role is not Role.INPUT]
        return cls(magnets, inputs, readouts, duplication, name)


def grid_layout(nx, ny, input_cells, preset="default-pma", duplication=1, jitter=None,
                seed=0, name="grid"):
    """Square grid of ``nx * ny`` magnets.

    ``input_cells`` lists ``(column, row)`` grid cells of the input magnets in
    copy-major order. Every position gets an independent seeded Gaussian
    offset of standard deviation ``jitter`` nm in the plane (fabrication
    scatter; it also breaks the grid's mirror symmetry).
    """
    preset = get_preset(preset)
    jitter = preset.jitter if jitter is None else jitter
    rng = np.random.default_rng(seed)
    offsets = jitter * rng.standard_normal((ny, nx, 2))
    cell_to_input = {tuple(c): k for k, c in enumerate(input_cells)}
    if len(cell_to_input) != len(input_cells):
        raise ConfigurationError("input cells must be distinct")
    magnets, input_ids = [], [None] * len(input_cells)
    for row in range(ny):
        for col in range(nx):
            idx = len(magnets)
            role = Role.READOUT
            if (col, row) in cell_to_input:
                input_ids[cell_to_input[(col, row)]] = idx
                role = Role.INPUT
            dx, dy = offsets[row, col]
            magnets.append(preset.magnet((preset.pitch * col + dx, preset.pitch * row + dy, 0.0), role))
    if any(i is None for i in input_ids):
        raise ConfigurationError(f"input cells {input_cells} fall outside the {nx}x{ny} grid")
    readouts = [i for i in range(len(magnets)) if i not in set(input_ids)]
    return ReservoirLayout(magnets, input_ids, readouts, duplication, name, grid_shape=(ny, nx))


OBSERVER_COLUMNS = (1, 3, 6, 8, 11, 13, 16, 18)


def build_layout(kind, preset="default-pma", path=None, seed=0):
    """Build one of the named layouts, or read a layout file for ``custom``.

    * ``waveform``: 5x5 grid, single input at the centre.
    * ``boolean35``: 7x5 grid (35 magnets), single input at the centre.
    * ``observer200``: 20x10 grid (200 magnets), 8 logical inputs each
      duplicated on two rows (16 input magnets).
    """
    if kind == "waveform":
        return grid_layout(5, 5, [(2, 2)], preset, seed=seed, name=kind)
    if kind == "boolean35":
        return grid_layout(7, 5, [(3, 2)], preset, seed=seed, name=kind)
    if kind == "observer200":
        cells = [(c, 2) for c in OBSERVER_COLUMNS] + [(c, 7) for c in OBSERVER_COLUMNS]
        return grid_layout(20, 10, cells, preset, duplication=2, seed=seed, name=kind)
    if kind == "custom":
        if path is None:
            raise ConfigurationError("custom layouts need a file path")
        return read_layout(path)
    raise ConfigurationError(f"unknown layout kind {kind!r}")


# -- layout files ---------------------------------------------------------------
#
#   # comment
#   duplication 2
#   defaults diameter=50 thickness=13 ms=1.4e6 ku=1.85e4 alpha=0.5
#   magnet x=0 y=0 z=0 role=input
#   magnet x=60 y=0 ku=2e4 easy=0,0,1
#
# Positions and sizes in nm. Input magnets are taken in file order.

_FLOAT_KEYS = {"x", "y", "z", "diameter", "thickness", "ms", "ku", "alpha"}
_KNOWN_KEYS = _FLOAT_KEYS | {"role", "easy"}


def _parse_fields(tokens, lineno):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise LayoutParseError(f"expected key=value, got {tok!r}", lineno)
        key, value = tok.split("=", 1)
        if key not in _KNOWN_KEYS:
            raise LayoutParseError(f"unknown key {key!r}", lineno)
        try:
            if key in _FLOAT_KEYS:
                out[key] = float(value)
            elif key == "easy":
                out[key] = tuple(float(v) for v in value.split(","))
            else:
                out[key] = Role(value)
        except ValueError as exc:
            raise LayoutParseError(f"bad value for {key}: {value!r} ({exc})", lineno) from None
    return out


def parse_layout(text, name="custom"):
    defaults = {}
    magnets = []
    duplication = 1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "duplication":
            if len(rest) != 1 or not rest[0].isdigit():
                raise LayoutParseError("duplication takes one positive integer", lineno)
            duplication = int(rest[0])
        elif head == "defaults":
            defaults.update(_parse_fields(rest, lineno))
        elif head == "magnet":
            rec = {**defaults, **_parse_fields(rest, lineno)}
            if "x" not in rec or "y" not in rec:
                raise LayoutParseError("magnet record needs x and y", lineno)
            kw = {k: rec[k] for k in ("diameter", "thickness", "ms", "ku", "alpha", "role") if k in rec}
            if "easy" in rec:
                kw["easy_axis"] = rec["easy"]
            try:
                magnets.append(NanomagnetSpec(position=(rec["x"], rec["y"], rec.get("z", 0.0)), **kw))
            except ConfigurationError as exc:
                raise LayoutParseError(str(exc), lineno) from None
        else:
            raise LayoutParseError(f"unknown record type {head!r}", lineno)
    if not magnets:
        raise LayoutParseError("layout contains no magnet records")
    return ReservoirLayout.from_magnets(magnets, duplication, name)


def read_layout(path):
    with open(path) as fh:
        return parse_layout(fh.read(), name=str(path))


def format_layout(layout):
    lines = [f"# {layout.name}: {layout.n_magnets} magnets", f"duplication {layout.duplication}"]
    order = list(layout.input_ids) + [i for i in range(layout.n_magnets) if i not in set(layout.input_ids)]
    for i in order:
        m = layout.magnets[i]
        x, y, z = m.position
        easy = ",".join(repr(c) for c in m.easy_axis)
        lines.append(
            f"magnet x={x!r} y={y!r} z={z!r} diameter={m.diameter!r} thickness={m.thickness!r} "
            f"ms={m.ms!r} ku={m.ku!r} alpha={m.alpha!r} easy={easy} role={m.role.value}"
        )
    return "\n".join(lines) + "\n"


def write_layout(layout, path):
    """Write ``layout``; inputs come first so reading it back keeps their order."""
    with open(path, "w") as fh:
        fh.write(format_layout(layout))


# -- symbols and drives -------------------------------------------------------

@dataclass(frozen=True)
class SymbolProtocol:
    """Timing and amplitude of the per-symbol STT write.

    ``sample_offset`` defaults to the full period (read just before the next
    write). ``polarization_tilt`` (degrees, in the x-z plane) keeps the
    spin polarization slightly off the easy axis: a torque that is exactly
    collinear with a relaxed magnet vanishes and cannot start a reversal.
    """

    symbol_period: float = 1.25e-9
    pulse_duration: float = 0.9e-9
    pulse_strength: float = 0.2
    levels: int = 2
    sample_offset: float = None
    polarization_tilt: float = 10.0

    def __post_init__(self):
        if self.sample_offset is None:
            object.__setattr__(self, "sample_offset", self.symbol_period)
        if not 0 < self.pulse_duration < self.symbol_period:
            raise ConfigurationError(
                f"need 0 < pulse_duration < symbol_period, got {self.pulse_duration} / {self.symbol_period}"
            )
        if not 0 < self.sample_offset <= self.symbol_period:
            raise ConfigurationError(f"sample_offset must be in (0, symbol_period], got {self.sample_offset}")
        if self.levels < 2:
            raise ConfigurationError(f"levels must be >= 2, got {self.levels}")
        if self.pulse_strength < 0:
            raise ConfigurationError(f"pulse_strength must be >= 0, got {self.pulse_strength}")

    def steps(self, dt):
        """Integer step counts ``(period, pulse, sample)`` for timestep ``dt``."""
        n_period = max(1, int(round(self.symbol_period / dt)))
        n_pulse = min(n_period - 1, max(1, int(round(self.pulse_duration / dt))))
        n_sample = min(n_period, max(1, int(round(self.sample_offset / dt))))
        return n_period, n_pulse, n_sample


def encode_symbol(symbol, protocol, input_id, start=0.0):
    """STT pulse writing ``symbol`` into magnet ``input_id``.

    The symbol maps linearly onto a signed level in ``[-1, 1]``; the sign
    picks a +z or -z polarization and the magnitude scales ``pulse_strength``.
    """
    s = int(symbol)
    if s != symbol or not 0 <= s < protocol.levels:
        raise ValueError(f"symbol {symbol!r} outside [0, {protocol.levels})")
    level = -1.0 + 2.0 * s / (protocol.levels - 1)
    th = math.radians(protocol.polarization_tilt)
    sign = 1.0 if level >= 0 else -1.0
    return SttDrive(
        target_index=int(input_id),
        polarization=(math.sin(th), 0.0, sign * math.cos(th)),
        strength=protocol.pulse_strength * abs(level),
        start=start,
        duration=protocol.pulse_duration,
    )


@dataclass(frozen=True)
class StateSample:
    values: np.ndarray
    symbol_index: int


@dataclass
class SequenceResult:
    """Per-symbol readout samples plus the recorded transient.

    ``samples`` has one row per symbol and one column per readout magnet;
    ``input_samples`` holds the input magnets' ``m_z`` at the same instants.
    ``trajectory`` is ``(n_records, N, 3)`` at ``times``.
    """

    samples: np.ndarray
    input_samples: np.ndarray
    times: np.ndarray
    trajectory: np.ndarray
    final_state: SimState

    def state_samples(self):
        return [StateSample(row, k) for k, row in enumerate(self.samples)]


def reset(layout, params, seed=0, max_time=100e-9, torque_tol=1e5):
    """Relaxed reference state for ``layout``.

    Every magnet starts along +z tilted by 1 degree in a seeded random
    transverse direction, then relaxes with all drives off.
    """
    arr = MagnetArray.of(layout)
    rng = np.random.default_rng(seed)
    phi = rng.uniform(0.0, 2.0 * np.pi, arr.n)
    tilt = math.radians(1.0)
    m0 = np.column_stack([np.sin(tilt) * np.cos(phi), np.sin(tilt) * np.sin(phi),
                          np.full(arr.n, np.cos(tilt))])
    return relax(SimState(m0), arr, params, max_time=max_time, torque_tol=torque_tol)


def _drive_arrays(layout, protocol, row):
    n = layout.n_magnets
    p = np.zeros((n, 3))
    a = np.zeros(n)
    for k, sym in enumerate(row):
        for mid in layout.physical_inputs(k):
            d = encode_symbol(sym, protocol, mid)
            p[mid] = d.polarization
            a[mid] = d.strength
    return p, a


def run_sequence(layout, protocol, params, symbols, initial=None, record_stride=None,
                 record=True):
    """Drive the reservoir with one symbol per period and sample ``m_z``.

    ``symbols`` is ``(n_steps, n_inputs)`` (or 1-D for one input). Each
    period applies the encoded pulse for ``pulse_duration`` then lets the
    array evolve freely; the readout is taken ``sample_offset`` after the
    period starts. ``initial`` defaults to :func:`reset` with seed 0.
    The transient is recorded every ``record_stride`` steps (default: five
    records per period).
    """
    sym = check_symbols(symbols, protocol.levels)
    if sym.shape[1] != layout.n_inputs and sym.shape[0]:
        raise ConfigurationError(f"{sym.shape[1]} input sequences for {layout.n_inputs} logical inputs")
    arr = MagnetArray.of(layout)
    if initial is None:
        initial = reset(layout, params).state
    m = np.array(initial.magnetizations)
    t0 = initial.time
    n_period, n_pulse, n_sample = protocol.steps(params.dt)
    stride = record_stride or max(1, n_period // 5)
    readout = np.array(layout.readout_ids)
    inputs = np.array(layout.input_ids)
    samples = np.empty((sym.shape[0], readout.size))
    in_samples = np.empty((sym.shape[0], inputs.size))
    times, traj = [t0], [m.copy()] if record else []
    bounds = sorted({n_pulse, n_sample, n_period})
    k = 0
    for idx, row in enumerate(sym):
        p, a = _drive_arrays(layout, protocol, row)
        pos = 0
        for b in bounds:
            while pos < b:
                n = min(b - pos, stride - (k % stride))
                if pos < n_pulse:
                    n = min(n, n_pulse - pos)
                    advance(m, arr, params, n, None, p, a, t0=t0 + k * params.dt)
                else:
                    advance(m, arr, params, n, t0=t0 + k * params.dt)
                pos += n
                k += n
                if record and k % stride == 0:
                    times.append(t0 + k * params.dt)
                    traj.append(m.copy())
            if b == n_sample:
                samples[idx] = m[readout, 2]
                in_samples[idx] = m[inputs, 2]
    final = SimState(m, t0 + k * params.dt)
    trajectory = np.array(traj) if record else np.empty((0, arr.n, 3))
    return SequenceResult(samples, in_samples, np.array(times) if record else np.empty(0),
                          trajectory, final)


DEFAULT_STRENGTHS = (0.02, 0.05, 0.08, 0.1, 0.12, 0.15, 0.2, 0.3, 0.4, 0.6)


_VERIFY_CHUNK = 32


def calibration_sequence(n_inputs, levels, length=512, seed=0):
    """Extreme symbols ``[max, 0, max]`` followed by a seeded random tail.

    The tail matters: a drive that flips a magnet out of its relaxed state
    can still lose a write once the neighbours have settled into a pattern
    that opposes it.
    """
    hi = levels - 1
    head = np.tile(np.array([[hi], [0], [hi]]), (1, n_inputs))
    rng = np.random.default_rng(seed)
    tail = hi * rng.integers(0, 2, size=(max(0, length - 3), n_inputs))
    return np.vstack([head, tail])


def calibrate_drive(layout, protocol, params, strengths=DEFAULT_STRENGTHS, durations=None,
                    threshold=0.9, initial=None, verify_length=512, seed=0):
    """Weakest ``(pulse_strength, pulse_duration)`` that saturates every input.

    Candidates are tried in order of increasing ``strength * duration`` (then
    strength). A candidate passes when replaying
    :func:`calibration_sequence` from the reset state leaves every input
    magnet with ``|m_z| >= threshold`` and the written sign at each sample.
    """
    durations = (protocol.pulse_duration,) if durations is None else tuple(durations)
    cands = sorted(
        ((float(s), float(d)) for s in strengths for d in durations),
        key=lambda sd: (sd[0] * sd[1], sd[0]),
    )
    if not cands:
        raise CalibrationError("empty calibration bounds")
    if initial is None:
        initial = reset(layout, params).state
    seq = calibration_sequence(layout.n_inputs, protocol.levels, verify_length, seed)
    want = np.where(seq > 0, 1.0, -1.0)
    want = np.tile(want, (1, layout.duplication))
    best, best_margin = None, -np.inf
    for strength, duration in cands:
        if strength == 0.0:
            margin = -1.0
        else:
            cand = replace(protocol, pulse_strength=strength, pulse_duration=duration)
            state, margin = initial, np.inf
            for lo in range(0, len(seq), _VERIFY_CHUNK):
                res = run_sequence(layout, cand, params, seq[lo : lo + _VERIFY_CHUNK],
                                   initial=state, record=False)
                margin = min(margin, float(np.min(res.input_samples * want[lo : lo + _VERIFY_CHUNK])))
                if margin < threshold:
                    break
                state = res.final_state
            if margin >= threshold:
                return cand
        if margin > best_margin:
            best, best_margin = (strength, duration), margin
    raise CalibrationError(
        f"no candidate drive reaches |m_z| >= {threshold}; best was strength={best[0]}, "
        f"duration={best[1]} with min signed m_z {best_margin:.3f}",
        best=best,
    )


class NanomagnetReservoir(TransformerMixin, BaseEstimator):
    """Estimator view of the reservoir: symbol sequences in, ``m_z`` samples out.

    ``fit`` builds the layout, optionally calibrates the drive strength and
    relaxes the initial state. ``transform`` then runs every call from that
    same reference state, so it is a deterministic function of its input.

    Parameters
    ----------
    layout : str or ReservoirLayout, default="boolean35"
    preset : str, default="default-pma"
    levels : int, default=2
    symbol_period, pulse_duration, pulse_strength : float
        Protocol settings; ``pulse_strength`` is replaced by the calibrated
        value when ``calibrate`` is true.
    calibrate : bool, default=True
    seed : int, default=0
        Seed of the reset perturbation and the layout jitter.
    """

    def __init__(self, layout="boolean35", preset="default-pma", levels=2, symbol_period=1.25e-9,
                 pulse_duration=0.9e-9, pulse_strength=0.2, polarization_tilt=10.0,
                 calibrate=True, seed=0):
        self.layout = layout
        self.preset = preset
        self.levels = levels
        self.symbol_period = symbol_period
        self.pulse_duration = pulse_duration
        self.pulse_strength = pulse_strength
        self.polarization_tilt = polarization_tilt
        self.calibrate = calibrate
        self.seed = seed

    def fit(self, X=None, y=None):
        preset = get_preset(self.preset)
        if isinstance(self.layout, ReservoirLayout):
            self.layout_ = self.layout
        else:
            self.layout_ = build_layout(self.layout, preset, seed=self.seed)
        self.params_ = preset.llg_params()
        protocol = SymbolProtocol(self.symbol_period, self.pulse_duration, self.pulse_strength,
                                  self.levels, polarization_tilt=self.polarization_tilt)
        start = reset(self.layout_, self.params_, seed=self.seed)
        self.initial_state_ = start.state
        self.reset_converged_ = start.converged
        if self.calibrate:
            protocol = calibrate_drive(self.layout_, protocol, self.params_, initial=start.state)
        self.protocol_ = protocol
        self.n_features_in_ = self.layout_.n_inputs
        return self

    def transform(self, X):
        check_is_fitted(self, "protocol_")
        self.last_run_ = run_sequence(self.layout_, self.protocol_, self.params_, X,
                                      initial=self.initial_state_)
        return self.last_run_.samples


# -- exports -----------------------------------------------------------------

def _fmt(x):
    return format(float(x), ".9g")


def write_trajectory(run, path):
    """Transient as CSV: ``time_s, m0_x, m0_y, m0_z, m1_x, ...``, one row per record."""
    n = run.trajectory.shape[1] if run.trajectory.size else run.final_state.magnetizations.shape[0]
    header = ["time_s"] + [f"m{i}_{c}" for i in range(n) for c in "xyz"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for t, m in zip(run.times, run.trajectory):
            fh.write(_fmt(t) + "," + ",".join(_fmt(v) for v in m.reshape(-1)) + "\n")
    return path


def write_samples(samples, path):
    """Sample matrix as CSV: ``symbol_index, s0, s1, ...``."""
    samples = np.atleast_2d(samples)
    with open(path, "w") as fh:
        fh.write(",".join(["symbol_index"] + [f"s{i}" for i in range(samples.shape[1])]) + "\n")
        for k, row in enumerate(samples):
            fh.write(f"{k}," + ",".join(_fmt(v) for v in row) + "\n")
    return path


def snapshot_grid(state, layout):
    """``m_z`` arranged as the layout's ``(rows, columns)`` grid.

    Layouts without grid metadata come back as a single row.
    """
    mz = np.asarray(state.magnetizations)[:, 2]
    if layout.grid_shape is None:
        return mz[None, :]
    return mz.reshape(layout.grid_shape)


def write_snapshot(state, layout, path):
    """One instant of ``m_z`` as a signed CSV grid (+1 up, -1 down)."""
    grid = snapshot_grid(state, layout)
    with open(path, "w") as fh:
        for row in grid:
            fh.write(",".join(format(float(v), "+.6f") for v in row) + "\n")
    return path


def aligned_pairs(state, layout, cutoff=None):
    """Neighbouring pairs (centre distance <= ``cutoff`` nm) whose ``m_z`` agree in sign.

    ``cutoff`` defaults to 1.5 times the smallest centre distance, which on
    a square grid takes edge and diagonal neighbours.
    Returns ``(aligned, total)``.
    """
    pos = np.array([m.position for m in layout.magnets])
    if len(pos) < 2:
        return 0, 0
    d = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
    iu = np.triu_indices(len(pos), 1)
    if cutoff is None:
        cutoff = 1.5 * d[iu].min()
    mz = np.asarray(state.magnetizations)[:, 2]
    close = d[iu] <= cutoff
    same = np.sign(mz[iu[0]]) == np.sign(mz[iu[1]])
    return int(np.count_nonzero(close & same)), int(np.count_nonzero(close))
