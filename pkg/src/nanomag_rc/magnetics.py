"""Coupled macrospin dynamics.

Each nanomagnet is a single unit vector ``m_i`` of fixed magnitude ``Ms``.
Fields are expressed in tesla (``mu0 * H``), positions in the public
:class:`NanomagnetSpec` are in nanometres and converted to SI internally.

The equation of motion is the Landau-Lifshitz-Gilbert equation in explicit
form with a Slonczewski damping-like spin-transfer term::

    dm/dt = -gamma/(1+alpha^2) [m x B + alpha m x (m x B)] - gamma a_J m x (m x p)

integrated with Heun's predictor-corrector and renormalized after each step.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .exceptions import ConfigurationError, IntegrationDivergedError

MU0 = 4e-7 * math.pi
DIPOLE_PREFACTOR = MU0 / (4.0 * math.pi)
GAMMA_ELECTRON = 1.76e11
K_BOLTZMANN = 1.380649e-23
NM = 1e-9


class Role(str, enum.Enum):
    INPUT = "input"
    READOUT = "readout"


def _unit(v, tol=None, name="vector"):
    v = np.asarray(v, dtype=float).reshape(3)
    n = float(np.linalg.norm(v))
    if n == 0.0 or not np.isfinite(n):
        raise ConfigurationError(f"{name} must be a finite non-zero vector")
    if tol is not None and abs(n - 1.0) > tol:
        raise ConfigurationError(f"{name} must be unit norm (got |v|={n:.3e})")
    return v / n


@dataclass(frozen=True)
class NanomagnetSpec:
    """Geometry, material and role of one macrospin.

    ``position``, ``diameter`` and ``thickness`` are in nanometres, ``ms`` in
    A/m and ``ku`` in J/m^3.
    """

    position: tuple
    diameter: float = 50.0
    thickness: float = 1.5
    ms: float = 8e5
    ku: float = 5e5
    easy_axis: tuple = (0.0, 0.0, 1.0)
    alpha: float = 0.05
    role: Role = Role.READOUT

    def __post_init__(self):
        pos = tuple(float(c) for c in self.position)
        if len(pos) != 3 or not all(math.isfinite(c) for c in pos):
            raise ConfigurationError("position must be three finite numbers")
        object.__setattr__(self, "position", pos)
        if not self.diameter > 0:
            raise ConfigurationError(f"diameter must be > 0, got {self.diameter}")
        if not self.thickness > 0:
            raise ConfigurationError(f"thickness must be > 0, got {self.thickness}")
        if not self.ms > 0:
            raise ConfigurationError(f"ms must be > 0, got {self.ms}")
        if not self.ku >= 0:
            raise ConfigurationError(f"ku must be >= 0, got {self.ku}")
        if not 0 < self.alpha <= 1:
            raise ConfigurationError(f"alpha must be in (0, 1], got {self.alpha}")
        axis = _unit(self.easy_axis, tol=1e-12, name="easy_axis")
        object.__setattr__(self, "easy_axis", tuple(float(c) for c in axis))
        object.__setattr__(self, "role", Role(self.role))

    @property
    def volume(self):
        """Disc volume in m^3."""
        r = 0.5 * self.diameter * NM
        return math.pi * r * r * self.thickness * NM

    @property
    def moment(self):
        """Magnetic moment magnitude ``Ms * V`` in A m^2."""
        return self.ms * self.volume

    @property
    def anisotropy_field(self):
        """Uniaxial anisotropy field ``2 Ku / Ms`` in tesla."""
        return 2.0 * self.ku / self.ms


@dataclass(frozen=True)
class LLGParams:
    gamma: float = GAMMA_ELECTRON
    dt: float = 1e-12
    temperature: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be > 0, got {self.dt}")
        if not self.gamma > 0:
            raise ConfigurationError(f"gamma must be > 0, got {self.gamma}")
        if not self.temperature >= 0:
            raise ConfigurationError(f"temperature must be >= 0, got {self.temperature}")


@dataclass(frozen=True)
class SimState:
    """Unit magnetizations of every magnet, shape ``(N, 3)``, at ``time`` seconds."""

    magnetizations: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        m = np.array(self.magnetizations, dtype=float)
        if m.ndim != 2 or m.shape[1] != 3:
            raise ConfigurationError(f"magnetizations must have shape (N, 3), got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "magnetizations", m)
        object.__setattr__(self, "time", float(self.time))

    @classmethod
    def from_vectors(cls, vectors, time=0.0):
        """Build a state from arbitrary non-zero vectors, normalizing each."""
        m = np.asarray(vectors, dtype=float).reshape(-1, 3)
        norms = np.linalg.norm(m, axis=1, keepdims=True)
        if np.any(norms == 0) or not np.all(np.isfinite(norms)):
            raise ConfigurationError("magnetization vectors must be finite and non-zero")
        return cls(m / norms, time)

    @property
    def mz(self):
        return self.magnetizations[:, 2]

    def __len__(self):
        return self.magnetizations.shape[0]

    def max_norm_error(self):
        return float(np.max(np.abs(1.0 - np.linalg.norm(self.magnetizations, axis=1))))


@dataclass(frozen=True)
class SttDrive:
    """A rectangular spin-transfer-torque pulse on one magnet.

    ``strength`` is the damping-like prefactor ``a_J`` in tesla; a positive
    value pulls the magnetization toward ``polarization``.
    """

    target_index: int
    polarization: tuple = (0.0, 0.0, 1.0)
    strength: float = 0.0
    start: float = 0.0
    duration: float = 1e-9

    def __post_init__(self):
        if not self.duration > 0:
            raise ConfigurationError(f"drive duration must be > 0, got {self.duration}")
        p = _unit(self.polarization, tol=1e-9, name="polarization")
        object.__setattr__(self, "polarization", tuple(float(c) for c in p))

    def active(self, t):
        return self.start <= t < self.start + self.duration


class MagnetArray:
    """Precomputed arrays for a fixed set of magnets.

    Positions never change, so the full dipolar interaction is a constant
    ``(3N, 3N)`` matrix applied to the flattened magnetization.
    """

    def __init__(self, magnets: Sequence[NanomagnetSpec]):
        magnets = tuple(magnets)
        if not magnets:
            raise ConfigurationError("a layout needs at least one magnet")
        self.magnets = magnets
        self.n = len(magnets)
        self.positions = np.array([m.position for m in magnets]) * NM
        self.volume = np.array([m.volume for m in magnets])
        self.ms = np.array([m.ms for m in magnets])
        self.moment = self.ms * self.volume
        self.ku = np.array([m.ku for m in magnets])
        self.b_anis = 2.0 * self.ku / self.ms
        self.easy = np.array([m.easy_axis for m in magnets])
        self.alpha = np.array([m.alpha for m in magnets])
        self.roles = tuple(m.role for m in magnets)
        self.dipole_matrix = _dipole_matrix(self.positions, self.moment)

    @classmethod
    def of(cls, layout):
        if isinstance(layout, MagnetArray):
            return layout
        cached = getattr(layout, "_magnet_array", None)
        if cached is not None:
            return cached
        magnets = getattr(layout, "magnets", layout)
        return cls(magnets)


def validate_no_overlap(magnets: Sequence[NanomagnetSpec]):
    """Reject layouts where two discs are closer than the sum of their radii."""
    pos = np.array([m.position for m in magnets], dtype=float)
    radii = np.array([0.5 * m.diameter for m in magnets])
    for i in range(len(magnets)):
        d = np.linalg.norm(pos[i + 1:] - pos[i], axis=1)
        bad = np.nonzero(d < radii[i + 1:] + radii[i])[0]
        if bad.size:
            j = i + 1 + int(bad[0])
            raise ConfigurationError(
                f"magnets {i} and {j} overlap: centre distance {d[bad[0]]:.3g} nm "
                f"< sum of radii {radii[i] + radii[j]:.3g} nm"
            )


def _dipole_matrix(positions, moments):
    n = positions.shape[0]
    r = positions[:, None, :] - positions[None, :, :]  # r[i, j] = r_i - r_j
    dist = np.linalg.norm(r, axis=2)
    np.fill_diagonal(dist, np.inf)
    rhat = r / dist[:, :, None]
    eye = np.eye(3)
    # block (i, j) maps m_j to the field it creates at r_i
    blocks = (3.0 * rhat[:, :, :, None] * rhat[:, :, None, :] - eye) / dist[:, :, None, None] ** 3
    blocks *= DIPOLE_PREFACTOR * moments[None, :, None, None]
    blocks[np.arange(n), np.arange(n)] = 0.0
    return blocks.transpose(0, 2, 1, 3).reshape(3 * n, 3 * n)


def _cross(a, b):
    ax, ay, az = a[..., 0], a[..., 1], a[..., 2]
    bx, by, bz = b[..., 0], b[..., 1], b[..., 2]
    return np.stack((ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx), axis=-1)


def dipole_field(moment, displacement, prefactor=DIPOLE_PREFACTOR):
    """Field of a point dipole ``moment`` at ``displacement`` from it.

    Returns ``prefactor * (3 (m.r^) r^ - m) / |r|^3``; with the default
    prefactor ``mu0/4pi`` the result is in tesla for ``moment`` in A m^2 and
    ``displacement`` in metres.
    """
    m = np.asarray(moment, dtype=float)
    r = np.asarray(displacement, dtype=float)
    d = float(np.linalg.norm(r))
    if d == 0.0:
        raise ValueError("dipole field is undefined at zero displacement")
    rhat = r / d
    return prefactor * (3.0 * np.dot(m, rhat) * rhat - m) / d**3


def _external_array(external, n):
    if external is None:
        return np.zeros((n, 3))
    ext = np.asarray(external, dtype=float)
    return np.broadcast_to(ext, (n, 3))


def _field(m, arr, ext):
    proj = np.einsum("ij,ij->i", m, arr.easy)
    h = (arr.b_anis * proj)[:, None] * arr.easy
    h += (arr.dipole_matrix @ m.reshape(-1)).reshape(-1, 3)
    h += ext
    return h


def effective_field(state, layout, external=None):
    """Per-magnet effective field in tesla: anisotropy + dipolar + external.

    Spin-transfer torque is not a field here; it enters :func:`llg_rhs`
    as a separate torque.
    """
    arr = MagnetArray.of(layout)
    m = _magnetizations(state, arr)
    return _field(m, arr, _external_array(external, arr.n))


def _magnetizations(state, arr):
    m = state.magnetizations if isinstance(state, SimState) else np.asarray(state, dtype=float)
    if m.shape != (arr.n, 3):
        raise ConfigurationError(f"state has shape {m.shape}, layout has {arr.n} magnets")
    return m


def llg_rhs(m, h_eff, alpha, gamma, stt=None):
    """Time derivative of ``m`` under LLG plus optional damping-like STT.

    Works on single vectors or ``(N, 3)`` stacks. ``stt`` is ``(p, a_J)``
    with ``a_J`` in tesla.
    """
    m = np.asarray(m, dtype=float)
    h = np.asarray(h_eff, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    pre = -gamma / (1.0 + alpha**2)
    if pre.ndim:
        pre = pre[..., None]
    mxh = _cross(m, h)
    out = pre * (mxh + (alpha[..., None] if alpha.ndim else alpha) * _cross(m, mxh))
    if stt is not None:
        p, a_j = stt
        p = np.asarray(p, dtype=float)
        a_j = np.asarray(a_j, dtype=float)
        out = out - gamma * (a_j[..., None] if a_j.ndim else a_j) * _cross(m, _cross(m, p))
    return out


def _rhs(m, arr, gamma, ext, stt_p, stt_a):
    h = _field(m, arr, ext)
    pre = (-gamma / (1.0 + arr.alpha**2))[:, None]
    mxh = _cross(m, h)
    out = pre * (mxh + arr.alpha[:, None] * _cross(m, mxh))
    if stt_p is not None:
        out -= gamma * stt_a[:, None] * _cross(m, _cross(m, stt_p))
    return out


def _drive_arrays(drives, n, t):
    active = [d for d in drives if d.active(t)]
    if not active:
        return None, None
    p = np.zeros((n, 3))
    a = np.zeros(n)
    for d in active:
        # overlapping pulses on one magnet superpose
        p[d.target_index] = p[d.target_index] * a[d.target_index] + np.multiply(d.polarization, d.strength)
        s = np.linalg.norm(p[d.target_index])
        a[d.target_index] = s
        if s > 0:
            p[d.target_index] /= s
    return p, a


def thermal_sigma(arr, params):
    """Per-magnet standard deviation (tesla) of the Langevin field."""
    if params.temperature == 0:
        return None
    return np.sqrt(
        2.0 * arr.alpha * K_BOLTZMANN * params.temperature
        / (params.gamma * arr.moment * params.dt)
    )


def heun_step(m, arr, params, ext, stt_p=None, stt_a=None, noise=None):
    """Advance raw magnetizations by one step; returns the renormalized array."""
    dt = params.dt
    if noise is not None:
        ext = ext + noise
    k1 = _rhs(m, arr, params.gamma, ext, stt_p, stt_a)
    k2 = _rhs(m + dt * k1, arr, params.gamma, ext, stt_p, stt_a)
    out = m + 0.5 * dt * (k1 + k2)
    out /= np.sqrt(np.einsum("ij,ij->i", out, out))[:, None]
    return out


def _check_finite(m, t):
    if not np.isfinite(m).all():
        bad = int(np.nonzero(~np.isfinite(m).all(axis=1))[0][0])
        raise IntegrationDivergedError(bad, t)


def step(state, layout, params, external=None, drives: Iterable[SttDrive] = (), rng=None):
    """One Heun step of length ``params.dt``.

    Drives are sampled at the start of the step. With ``temperature > 0`` a
    Langevin field is drawn from ``rng`` (a ``numpy.random.Generator``); pass
    the same generator across steps to keep a trajectory reproducible.
    """
    arr = MagnetArray.of(layout)
    m = _magnetizations(state, arr)
    stt_p, stt_a = _drive_arrays(tuple(drives), arr.n, state.time)
    noise = None
    sigma = thermal_sigma(arr, params)
    if sigma is not None:
        if rng is None:
            rng = np.random.default_rng(params.rng_seed)
        noise = sigma[:, None] * rng.standard_normal((arr.n, 3))
    out = heun_step(m, arr, params, _external_array(external, arr.n), stt_p, stt_a, noise)
    t = state.time + params.dt
    _check_finite(out, t)
    return SimState(out, t)


def torque_magnitudes(state, layout, gamma, external=None):
    """``|dm/dt|`` per magnet with drives off, in 1/s."""
    arr = MagnetArray.of(layout)
    m = _magnetizations(state, arr)
    d = _rhs(m, arr, gamma, _external_array(external, arr.n), None, None)
    return np.linalg.norm(d, axis=1)


def total_energy(state, layout, external=None):
    """Anisotropy + dipolar + Zeeman energy in joules."""
    arr = MagnetArray.of(layout)
    m = _magnetizations(state, arr)
    proj = np.einsum("ij,ij->i", m, arr.easy)
    e_anis = -np.sum(arr.ku * arr.volume * proj**2)
    b_dip = (arr.dipole_matrix @ m.reshape(-1)).reshape(-1, 3)
    e_dip = -0.5 * np.sum(arr.moment * np.einsum("ij,ij->i", m, b_dip))
    ext = _external_array(external, arr.n)
    e_zee = -np.sum(arr.moment * np.einsum("ij,ij->i", m, ext))
    return float(e_anis + e_dip + e_zee)


def pair_dipole_energy(state, layout, i, j):
    """Dipolar energy of the pair ``(i, j)`` as ``-mu_i . B_j(r_i)``."""
    arr = MagnetArray.of(layout)
    m = _magnetizations(state, arr)
    b = dipole_field(arr.moment[j] * m[j], arr.positions[i] - arr.positions[j])
    return float(-arr.moment[i] * np.dot(m[i], b))


def advance(m, layout, params, n_steps, external=None, stt_p=None, stt_a=None, t0=0.0):
    """Advance raw ``(N, 3)`` magnetizations ``n_steps`` Heun steps in place.

    Deterministic fast path (compiled); drives are held constant over the
    call. Raises :class:`IntegrationDivergedError` on a non-finite result.
    """
    if params.temperature != 0:
        raise ConfigurationError("the compiled integrator is deterministic; use step() for T > 0")
    arr = MagnetArray.of(layout)
    ext = np.ascontiguousarray(_external_array(external, arr.n))
    if stt_p is None:
        stt_p = np.zeros((arr.n, 3))
        stt_a = np.zeros(arr.n)
    bad = _kernels.heun_run(m, arr.dipole_matrix, arr.b_anis, arr.easy, arr.alpha,
                            float(params.gamma), float(params.dt), ext,
                            np.ascontiguousarray(stt_p, dtype=float),
                            np.ascontiguousarray(stt_a, dtype=float), int(n_steps))
    if bad >= 0:
        raise IntegrationDivergedError(int(bad), t0 + n_steps * params.dt)
    return m


@dataclass(frozen=True)
class RelaxResult:
    state: SimState
    converged: bool
    max_torque: float
    energies: np.ndarray = field(repr=False, default=None)


def relax(state, layout, params, external=None, max_time=50e-9, torque_tol=1e6,
          check_every=50, record_energy=False):
    """Integrate with drives off until every ``|dm/dt| < torque_tol``.

    The torque is checked every ``check_every`` steps (every step when
    ``record_energy`` is set, which also stores the energy after each step).
    If ``max_time`` of simulated time elapses first, the last state is
    returned with ``converged=False``.
    """
    if params.temperature != 0:
        raise ConfigurationError("relax() is deterministic; temperature must be 0")
    arr = MagnetArray.of(layout)
    m = np.array(_magnetizations(state, arr))
    ext = np.ascontiguousarray(_external_array(external, arr.n))
    t0 = state.time
    n_max = max(1, int(math.ceil(max_time / params.dt)))
    chunk = 1 if record_energy else max(1, int(check_every))
    energies = [total_energy(m, arr, external)] if record_energy else None
    k = 0
    while True:
        torque = _kernels.max_torque(m, arr.dipole_matrix, arr.b_anis, arr.easy,
                                     arr.alpha, float(params.gamma), ext)
        if torque < torque_tol or k >= n_max:
            break
        n = min(chunk, n_max - k)
        advance(m, arr, params, n, external, t0=t0 + k * params.dt)
        k += n
        if record_energy:
            energies.append(total_energy(m, arr, external))
    final = SimState(m, t0 + k * params.dt)
    return RelaxResult(final, bool(torque < torque_tol), float(torque),
                       np.array(energies) if record_energy else None)
