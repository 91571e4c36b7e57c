import json
import os

import pytest

from nanomag_rc.cli import ConfigError, config_hash, load_config, main, parse_config, sweep_points

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")
WAVE = "seed: 0\ntask: waveform\ndataset:\n  periods: 12\n"


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_all(d):
    return {f: open(os.path.join(d, f), "rb").read() for f in sorted(os.listdir(d))}


# -- config parsing ----------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(f for f in os.listdir(CONFIG_DIR) if f.endswith(".yaml")))
def test_example_configs_parse(name):
    cfg = load_config(os.path.join(CONFIG_DIR, name))
    assert cfg["seed"] == 0

def test_defaults_filled():
    cfg = parse_config("seed: 3\ntask: boolean\n")
    assert cfg["lambda"] == 1e-6 and cfg["physics"]["preset"] == "default-pma"
    assert cfg["protocol"]["calibrate"] is True and cfg["dataset"]["width"] == 2


def test_json_accepted():
    cfg = parse_config(json.dumps({"seed": 1, "task": "efficiency"}))
    assert cfg["task"] == "efficiency"


@pytest.mark.parametrize("text,field,line", [
    ("task: boolean\n", "seed", None),
    ("seed: 0\ntask: boolean\nphysics:\n  dt: -1.0e-12\n", "physics.dt", 4),
    ("seed: 0\ntask: boolean\nprotocl: {}\n", "protocl", 3),
    ("seed: 0\ntask: boolean\nprotocol:\n  pulse_strenght: 0.1\n", "protocol.pulse_strenght", 4),
    ("seed: 0\ntask: nonsense\n", "task", 2),
    ("seed: -2\ntask: boolean\n", "seed", 1),
    ("seed: 0\ntask: boolean\nprotocol:\n  pulse_duration: 2.0e-9\n", "protocol.pulse_duration", 4),
    ("seed: 0\ntask: boolean\nlayout:\n  kind: custom\n", "layout.file", 4),
    ("seed: 0\ntask: boolean\nsweep:\n  colour: [1]\n", "sweep.colour", 4),
    ("seed: 0\ntask: [\n", "<syntax>", None),
])
def test_invalid_configs(text, field, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == field
    if line is not None:
        assert info.value.line == line


def test_config_hash_stable():
    a = parse_config("seed: 0\ntask: boolean\n")
    b = parse_config("task: boolean\nseed: 0\n")
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(parse_config("seed: 1\ntask: boolean\n"))


def test_sweep_points_order():
    keys, pts = sweep_points({"lambda": [1, 2], "seed": [0, 1, 2]})
    assert keys == ["lambda", "seed"] and len(pts) == 6
    assert pts[0] == {"lambda": 1, "seed": 0} and pts[1] == {"lambda": 1, "seed": 1}
    with pytest.raises(ConfigError):
        sweep_points({})


# -- run -------------------------------------------------------------------------------

def test_run_waveform_writes_artifacts(tmp_path, capsys):
    cfg = write(tmp_path, "w.yaml", WAVE)
    out = tmp_path / "o"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    files = set(os.listdir(out))
    assert {"report.txt", "accuracies.csv", "transient.csv", "samples.csv", "manifest.json",
            "snapshot_initial.csv", "snapshot_final.csv", "layout.txt"} <= files
    assert any(l.startswith("mean_accuracy:") for l in open(out / "report.txt"))
    man = json.load(open(out / "manifest.json"))
    assert man["seed"] == 0 and len(man["config_sha256"]) == 64
    assert "numpy" in man["versions"] and "report.txt" in man["artifacts"]


def test_run_deterministic(tmp_path):
    cfg = write(tmp_path, "w.yaml", WAVE)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", cfg, "--out", str(a)]) == 0
    assert main(["run", "--config", cfg, "--out", str(b)]) == 0
    assert read_all(a) == read_all(b)


def test_seed_override_changes_output(tmp_path):
    cfg = write(tmp_path, "w.yaml", WAVE)
    main(["run", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["run", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "5"])
    assert json.load(open(tmp_path / "b" / "manifest.json"))["seed"] == 5
    assert open(tmp_path / "a" / "samples.csv").read() != open(tmp_path / "b" / "samples.csv").read()


def test_run_negative_dt_exit2(tmp_path, capsys):
    cfg = write(tmp_path, "bad.yaml", "seed: 0\ntask: waveform\nphysics:\n  dt: -1.0e-12\n")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "physics.dt" in err and "line 4" in err


def test_run_missing_file_exit2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_run_baseline_task(tmp_path):
    cfg = write(tmp_path, "b.yaml", "seed: 0\ntask: baseline\nbaseline:\n  of: boolean\n  window: 2\n")
    out = tmp_path / "o"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    assert "method: baseline-raw-w2" in open(out / "report.txt").read()


def test_run_boolean_width_error(tmp_path):
    cfg = write(tmp_path, "b.yaml", "seed: 0\ntask: boolean\ndataset:\n  width: 5\n")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_run_calibration_failure_exit4(tmp_path):
    cfg = write(tmp_path, "c.yaml", WAVE + "protocol:\n  strengths: [0.0]\n")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 4


# -- relax ----------------------------------------------------------------------------------

SQUARE = """defaults diameter=50 thickness=13 ms=1.4e6 ku=2.3e4 alpha=0.5
magnet x=0 y=0 role=input
magnet x=60 y=0
magnet x=0 y=60
magnet x=60 y=60
"""


def test_relax_square_reports_frustration(tmp_path):
    lay = write(tmp_path, "sq.txt", SQUARE)
    out = tmp_path / "r"
    assert main(["relax", "--layout", lay, "--out", str(out)]) == 0
    summary = dict(l.split(": ") for l in open(out / "summary.txt").read().splitlines())
    assert summary["converged"] == "True" and int(summary["aligned_pairs"]) >= 1
    rows = open(out / "relaxed.csv").read().splitlines()
    assert rows[0] == "index,x_nm,y_nm,z_nm,m_x,m_y,m_z" and len(rows) == 5


def test_relax_single_magnet(tmp_path):
    lay = write(tmp_path, "one.txt", "magnet x=0 y=0 ms=1.4e6 ku=2.3e4 thickness=13 alpha=0.5 role=input\n"
                                     "magnet x=2000 y=0 ms=1.4e6 ku=2.3e4 thickness=13 alpha=0.5\n")
    out = tmp_path / "r"
    assert main(["relax", "--layout", lay, "--out", str(out)]) == 0
    mz = [float(r.split(",")[-1]) for r in open(out / "relaxed.csv").read().splitlines()[1:]]
    assert all(abs(abs(v) - 1) < 1e-6 for v in mz)


def test_relax_malformed_exit2(tmp_path):
    lay = write(tmp_path, "bad.txt", "magnet x=0 y=0 role=input\nmagnet x=zz y=0\n")
    assert main(["relax", "--layout", lay, "--out", str(tmp_path / "r")]) == 2


def test_relax_builtin_kind(tmp_path):
    assert main(["relax", "--layout", "waveform", "--out", str(tmp_path / "r")]) == 0
    assert len(open(tmp_path / "r" / "snapshot.csv").read().splitlines()) == 5


def test_relax_unconverged_exit4(tmp_path):
    lay = write(tmp_path, "sq.txt", SQUARE)
    out = tmp_path / "r"
    assert main(["relax", "--layout", lay, "--max-time", "1e-11", "--out", str(out)]) == 4
    assert "converged: False" in open(out / "summary.txt").read()


# -- sweep ----------------------------------------------------------------------------------

def test_sweep_lambda_rows(tmp_path):
    cfg = write(tmp_path, "s.yaml", WAVE + "sweep:\n  lambda: [1.0e-8, 1.0e-6, 1.0e-4]\n")
    out = tmp_path / "s"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    rows = open(out / "sweep.csv").read().splitlines()
    assert len(rows) == 4 and rows[0].startswith("lambda,status,mean_accuracy")
    assert [r.split(",")[0] for r in rows[1:]] == ["1e-08", "1e-06", "0.0001"]


def test_sweep_strength_zero_records_failure(tmp_path):
    cfg = write(tmp_path, "s.yaml", WAVE + "sweep:\n  protocol.pulse_strength: [0.0, 0.2]\n")
    out = tmp_path / "s"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--threads", "2"]) == 0
    rows = open(out / "sweep.csv").read().splitlines()
    assert rows[1].split(",")[1] == "calibration-failed"
    assert rows[2].split(",")[1] == "ok"


def test_sweep_empty_grid(tmp_path):
    cfg = write(tmp_path, "s.yaml", WAVE + "sweep:\n  lambda: []\n")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "s")]) == 2
    cfg = write(tmp_path, "t.yaml", WAVE)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "s")]) == 2


# -- efficiency -------------------------------------------------------------------------------

def test_efficiency_command(tmp_path, capsys):
    out = tmp_path / "e"
    assert main(["efficiency", "--out", str(out)]) == 0
    text = open(out / "efficiency.txt").read()
    assert "aedp_ratio" in text and "area_ratio" in text
    assert (out / "efficiency.csv").exists() and (out / "manifest.json").exists()


def test_efficiency_overrides(tmp_path):
    cfg = write(tmp_path, "e.yaml", "seed: 0\ntask: efficiency\nefficiency:\n  cmos:\n    node_count: 35\n")
    out = tmp_path / "e"
    assert main(["efficiency", "--config", cfg, "--out", str(out)]) == 0
    assert "area_ratio: 416667" in open(out / "efficiency.txt").read()
