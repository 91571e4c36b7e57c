import numpy as np
import pytest
from sklearn.base import clone

from nanomag_rc.exceptions import CalibrationError, ConfigurationError, LayoutParseError
from nanomag_rc.magnetics import Role, SimState, relax
from nanomag_rc.reservoir import (
    NanomagnetReservoir,
    ReservoirLayout,
    SymbolProtocol,
    _drive_arrays,
    aligned_pairs,
    build_layout,
    calibrate_drive,
    calibration_sequence,
    encode_symbol,
    get_preset,
    parse_layout,
    read_layout,
    reset,
    run_sequence,
    snapshot_grid,
    write_layout,
    write_samples,
    write_snapshot,
    write_trajectory,
)

from conftest import square_layout


@pytest.fixture(scope="module")
def boolean_res():
    return NanomagnetReservoir("boolean35").fit()


# -- layouts -------------------------------------------------------------------

def test_boolean35_shape():
    lay = build_layout("boolean35")
    assert lay.n_magnets == 35
    assert len(lay.input_ids) == 1 and len(lay.readout_ids) == 34
    assert lay.input_ids == (17,)
    assert lay.grid_shape == (5, 7)


def test_observer200_shape():
    lay = build_layout("observer200")
    assert lay.n_magnets == 200
    assert lay.duplication == 2 and lay.n_inputs == 8
    assert len(set(lay.input_ids)) == 16
    assert len(lay.readout_ids) == 184
    for k in range(8):
        assert len(lay.physical_inputs(k)) == 2


def test_waveform_layout_center_input():
    lay = build_layout("waveform")
    assert lay.n_magnets == 25 and lay.input_ids == (12,)


def test_readouts_are_all_non_inputs():
    lay = build_layout("observer200")
    assert sorted(lay.readout_ids + lay.input_ids) == list(range(200))


def test_layout_jitter_seeded():
    a, b = build_layout("boolean35", seed=3), build_layout("boolean35", seed=3)
    assert a.magnets == b.magnets
    assert build_layout("boolean35", seed=4).magnets != a.magnets


def test_unknown_layout_kind():
    with pytest.raises(ConfigurationError):
        build_layout("hexagonal")


def test_layout_invariants_checked(preset):
    mags = [preset.magnet((0, 0, 0), Role.INPUT), preset.magnet((60, 0, 0))]
    with pytest.raises(ConfigurationError):
        ReservoirLayout(mags, [0], [0])
    with pytest.raises(ConfigurationError):
        ReservoirLayout(mags, [1], [0])  # magnet 1 is not input-role
    with pytest.raises(ConfigurationError):
        ReservoirLayout(mags, [], [1])
    with pytest.raises(ConfigurationError):
        ReservoirLayout(mags, [0], [1], duplication=2)


def test_custom_file_overlap_rejected(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("magnet x=0 y=0 role=input\nmagnet x=20 y=0\n")
    with pytest.raises(ConfigurationError, match="overlap"):
        build_layout("custom", path=p)


@pytest.mark.parametrize("text,line", [
    ("magnet x=0 y=0 role=input\nmagnet x=100 y=oops\n", 2),
    ("# header\n\nmagnet x=0 y=0 bogus=1\n", 3),
    ("duplication two\n", 1),
    ("magnet x=0 y=0 role=input\nwire 0 1\n", 2),
    ("magnet y=0 role=input\n", 1),
    ("magnet x=0 y=0 role=input alpha=3\n", 1),
])
def test_layout_parse_errors_carry_line(text, line):
    with pytest.raises(LayoutParseError) as info:
        parse_layout(text)
    assert info.value.lineno == line
    assert f"line {line}" in str(info.value)


def test_layout_file_roundtrip(tmp_path):
    lay = build_layout("observer200")
    p = tmp_path / "obs.txt"
    write_layout(lay, p)
    back = read_layout(p)
    order = list(lay.input_ids) + [i for i in range(lay.n_magnets) if i not in lay.input_ids]
    assert back.magnets == tuple(lay.magnets[i] for i in order)
    assert back.duplication == 2 and back.n_inputs == 8
    np.testing.assert_array_equal(
        [back.magnets[i].position for i in back.input_ids],
        [lay.magnets[i].position for i in lay.input_ids],
    )


def test_layout_defaults_record():
    lay = parse_layout("defaults ku=1e4 thickness=3\nmagnet x=0 y=0 role=input\nmagnet x=80 y=0 ku=2e4\n")
    assert lay.magnets[0].ku == 1e4 and lay.magnets[1].ku == 2e4
    assert lay.magnets[1].thickness == 3


# -- symbol encoding -------------------------------------------------------------

STRAIGHT = SymbolProtocol(pulse_strength=0.3, polarization_tilt=0.0)


def test_encode_binary_one_is_plus_z():
    d = encode_symbol(1, STRAIGHT, 17)
    assert d.polarization == (0.0, 0.0, 1.0) and d.strength == 0.3 and d.target_index == 17


def test_encode_binary_zero_is_minus_z():
    d = encode_symbol(0, STRAIGHT, 17)
    assert d.polarization == (0.0, 0.0, -1.0) and d.strength == 0.3


def test_encode_four_levels():
    p = SymbolProtocol(pulse_strength=0.3, levels=4, polarization_tilt=0.0)
    full, third = encode_symbol(3, p, 0), encode_symbol(2, p, 0)
    assert full.polarization[2] == 1.0 and full.strength == pytest.approx(0.3)
    assert third.polarization[2] == 1.0 and third.strength == pytest.approx(0.1)
    assert encode_symbol(1, p, 0).polarization[2] == -1.0
    assert encode_symbol(0, p, 0).strength == pytest.approx(0.3)


def test_encode_tilt_keeps_sign():
    p = SymbolProtocol(polarization_tilt=10.0)
    up, down = encode_symbol(1, p, 0).polarization, encode_symbol(0, p, 0).polarization
    assert up[2] == pytest.approx(np.cos(np.radians(10))) and down[2] == -up[2]
    assert np.linalg.norm(up) == pytest.approx(1.0)


@pytest.mark.parametrize("sym", [-1, 2, 1.5])
def test_encode_out_of_range(sym):
    with pytest.raises(ValueError):
        encode_symbol(sym, STRAIGHT, 0)


@pytest.mark.parametrize("kw", [dict(pulse_duration=2e-9), dict(pulse_duration=0.0),
                                dict(sample_offset=2e-9), dict(levels=1), dict(pulse_strength=-1)])
def test_protocol_validation(kw):
    with pytest.raises(ConfigurationError):
        SymbolProtocol(**kw)


def test_drives_only_touch_inputs():
    lay = build_layout("observer200")
    p, a = _drive_arrays(lay, SymbolProtocol(), np.array([1, 0, 1, 1, 0, 0, 1, 0]))
    touched = set(np.nonzero(a)[0])
    assert touched == set(lay.input_ids)
    assert all(lay.magnets[i].role is Role.INPUT for i in touched)


# -- reset -----------------------------------------------------------------------

def test_reset_deterministic(params):
    lay = build_layout("boolean35")
    a, b = reset(lay, params, seed=5), reset(lay, params, seed=5)
    assert np.array_equal(a.state.magnetizations, b.state.magnetizations)
    assert a.converged


def test_reset_passes_relax_tolerance(params):
    lay = build_layout("waveform")
    r = reset(lay, params, torque_tol=1e5)
    again = relax(r.state, lay, params, torque_tol=1e5)
    assert again.converged and again.state.time == r.state.time  # no further steps needed


def test_reset_2x2_non_uniform(preset, params):
    lay = square_layout(preset)
    for seed in range(3):
        mz = reset(lay, params, seed=seed).state.mz
        assert np.sign(mz).min() < 0 < np.sign(mz).max()


# -- run_sequence ----------------------------------------------------------------

def test_empty_sequence(params):
    lay = build_layout("waveform")
    init = reset(lay, params).state
    res = run_sequence(lay, SymbolProtocol(), params, [], initial=init)
    assert res.samples.shape == (0, 24) and res.state_samples() == []
    assert np.array_equal(res.final_state.magnetizations, init.magnetizations)


def test_sample_bounds_and_shape(boolean_res):
    X = boolean_res.transform(np.array([1, 0, 0, 1, 1, 0, 1]))
    assert X.shape == (7, 34)
    assert np.all(np.abs(X) <= 1.0)
    run = boolean_res.last_run_
    assert run.trajectory.shape[1:] == (35, 3)
    assert np.all(np.diff(run.times) > 0)
    samples = run.state_samples()
    assert [s.symbol_index for s in samples] == list(range(7))


def test_calibrated_drive_saturates_input(boolean_res):
    boolean_res.transform([1, 0, 1, 1, 0])
    inp = boolean_res.last_run_.input_samples[:, 0]
    assert inp[0] > 0.9 and inp[1] < -0.9 and inp[3] > 0.9


def test_separation(boolean_res):
    a = boolean_res.transform([1, 0, 1, 1])
    b = boolean_res.transform([1, 1, 0, 1])
    assert not np.allclose(a, b)


def test_causality_bit_exact(boolean_res):
    base = np.array([1, 0, 1, 1, 0, 0, 1, 0, 1, 1])
    ref = boolean_res.transform(base)
    for k in (3, 7):
        alt = base.copy()
        alt[k] ^= 1
        out = boolean_res.transform(alt)
        assert np.array_equal(out[:k], ref[:k])
        assert not np.array_equal(out[k:], ref[k:])


def test_transform_deterministic(boolean_res):
    seq = np.random.default_rng(0).integers(0, 2, 30)
    assert np.array_equal(boolean_res.transform(seq), boolean_res.transform(seq))


def test_sequence_length_mismatch_rejected(params):
    lay = build_layout("observer200")
    with pytest.raises(ConfigurationError):
        run_sequence(lay, SymbolProtocol(), params, np.zeros((3, 5), dtype=int))


def test_echo_state_diagnostic(params, capsys):
    """Reported, not asserted: whether different initial states converge."""
    lay = build_layout("boolean35")
    proto = SymbolProtocol(pulse_strength=0.2)
    seq = np.random.default_rng(1).integers(0, 2, 24)
    s1, s2 = reset(lay, params, seed=1).state, reset(lay, params, seed=2).state
    d0 = float(np.linalg.norm(s1.mz[list(lay.readout_ids)] - s2.mz[list(lay.readout_ids)]))
    r1 = run_sequence(lay, proto, params, seq, initial=s1, record=False)
    r2 = run_sequence(lay, proto, params, seq, initial=s2, record=False)
    d1 = float(np.linalg.norm(r1.samples[-1] - r2.samples[-1]))
    print(f"echo diagnostic: initial distance {d0:.4g}, after {len(seq)} symbols {d1:.4g}")


# -- calibration -------------------------------------------------------------------

def _passes(lay, proto, params, init, strength):
    from dataclasses import replace

    seq = calibration_sequence(lay.n_inputs, proto.levels)
    want = np.where(seq > 0, 1.0, -1.0)
    run = run_sequence(lay, replace(proto, pulse_strength=strength), params, seq, initial=init, record=False)
    return float(np.min(run.input_samples * want)) >= 0.9


def test_calibration_returns_weakest_passing(params):
    lay = build_layout("boolean35")
    init = reset(lay, params).state
    grid = (0.05, 0.1, 0.12, 0.3)
    got = calibrate_drive(lay, SymbolProtocol(), params, strengths=grid, initial=init)
    # independent oracle: first grid point that passes the same replay
    expect = next(s for s in grid if _passes(lay, SymbolProtocol(), params, init, s))
    assert got.pulse_strength == expect
    assert got.pulse_strength <= 0.3


def test_calibration_zero_strength_fails(params):
    lay = build_layout("boolean35")
    with pytest.raises(CalibrationError) as info:
        calibrate_drive(lay, SymbolProtocol(), params, strengths=(0.0,))
    assert info.value.best == (0.0, SymbolProtocol().pulse_duration)


def test_calibrated_replay_101(boolean_res):
    run = run_sequence(boolean_res.layout_, boolean_res.protocol_, boolean_res.params_, [1, 0, 1],
                       initial=boolean_res.initial_state_)
    v = run.input_samples[:, 0]
    assert np.all(np.abs(v) >= 0.9) and v[0] > 0 > v[1] and v[2] > 0


def test_calibration_duration_ordering(params):
    lay = build_layout("boolean35")
    got = calibrate_drive(lay, SymbolProtocol(), params, strengths=(0.3,), durations=(0.3e-9, 0.9e-9))
    assert got.pulse_duration in (0.3e-9, 0.9e-9)
    if got.pulse_duration == 0.9e-9:
        with pytest.raises(CalibrationError):
            calibrate_drive(lay, SymbolProtocol(), params, strengths=(0.3,), durations=(0.3e-9,))


# -- estimator ----------------------------------------------------------------------

def test_estimator_params_roundtrip():
    est = NanomagnetReservoir(layout="waveform", levels=4, seed=3)
    assert est.get_params()["levels"] == 4
    c = clone(est)
    assert c.get_params() == est.get_params()


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        get_preset("permalloy")


def test_transform_requires_fit():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        NanomagnetReservoir().transform([1, 0])


# -- exports -------------------------------------------------------------------------

def test_exports(tmp_path, boolean_res):
    boolean_res.transform([1, 0, 1])
    run = boolean_res.last_run_
    t = write_trajectory(run, tmp_path / "t.csv")
    lines = open(t).read().splitlines()
    assert lines[0].startswith("time_s,m0_x,m0_y,m0_z,m1_x")
    assert len(lines[0].split(",")) == 1 + 3 * 35 and len(lines) == 1 + len(run.times)
    s = write_samples(run.samples, tmp_path / "s.csv")
    lines = open(s).read().splitlines()
    assert lines[0].split(",")[:3] == ["symbol_index", "s0", "s1"] and len(lines) == 4
    g = write_snapshot(run.final_state, boolean_res.layout_, tmp_path / "g.csv")
    rows = open(g).read().splitlines()
    assert len(rows) == 5 and all(len(r.split(",")) == 7 for r in rows)
    assert snapshot_grid(run.final_state, boolean_res.layout_).shape == (5, 7)


def test_aligned_pairs_checkerboard(preset):
    lay = square_layout(preset)
    checker = SimState([[0, 0, 1.0], [0, 0, -1.0], [0, 0, -1.0], [0, 0, 1.0]])
    assert aligned_pairs(checker, lay) == (2, 6)
    up = SimState(np.tile([0, 0, 1.0], (4, 1)))
    assert aligned_pairs(up, lay) == (6, 6)
