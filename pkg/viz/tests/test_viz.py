import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

VIZ_DIR = Path(__file__).resolve().parents[1]
PRIMARY_SRC = VIZ_DIR.parent / "src"
sys.path.insert(0, str(VIZ_DIR))

from snapshots import SnapshotFormatError, load_frame, load_run
from plot_timeseries import fitted_decay_rate, series


def run_cli(args, cwd):
    env = {"PYTHONPATH": str(PRIMARY_SRC), "PATH": "/usr/bin:/bin:/usr/local/bin",
           "MPLBACKEND": "Agg", "HOME": str(cwd)}
    return subprocess.run([sys.executable, "-m", "kane_hydro", *args],
                          cwd=cwd, env=env, capture_output=True, text=True)


def run_script(script, args, cwd):
    env = {"PYTHONPATH": str(PRIMARY_SRC), "PATH": "/usr/bin:/bin:/usr/local/bin",
           "MPLBACKEND": "Agg", "HOME": str(cwd)}
    return subprocess.run([sys.executable, str(VIZ_DIR / script), *args],
                          cwd=cwd, env=env, capture_output=True, text=True)


def base_config(**overrides):
    doc = {
        "material": {"alpha": [0.4, 0.2, 0.0], "gamma": 0.6},
        "grid": {"n_cells": 24, "x_min": 0.0, "x_max": 1.0, "boundary": "periodic"},
        "initial": {
            "plus": {"n": {"shape": "gaussian_pulse", "amplitude": 0.3,
                           "baseline": 1.0, "center": 0.5, "width": 0.1},
                     "u": {"shape": "uniform", "value": [0.1, 0.0, 0.0]}},
            "minus": {"n": {"shape": "uniform", "value": 1.0},
                      "u": {"shape": "uniform", "value": [0.0, 0.0, 0.0]}},
        },
        "output": {"t_end": 0.2, "snapshot_every": 0.02, "out_dir": "run"},
    }
    doc.update(overrides)
    return doc


@pytest.fixture(scope="module")
def reference_run(tmp_path_factory):
    """No-coupling periodic run produced through the primary CLI."""
    work = tmp_path_factory.mktemp("reference")
    cfg = work / "cfg.json"
    cfg.write_text(json.dumps(base_config()))
    out = work / "run"
    res = run_cli(["run", "--config", str(cfg), "--out", str(out)], cwd=work)
    assert res.returncode == 0, res.stderr
    return out


@pytest.fixture(scope="module")
def band_flip_run(tmp_path_factory):
    """Homogeneous band-flip run: polarization decays at exactly 2/tau."""
    work = tmp_path_factory.mktemp("bandflip")
    doc = base_config(coupling={"mechanism": "band_flip", "tau": 0.5},
                      output={"t_end": 0.5, "snapshot_every": 0.05, "out_dir": "run"})
    doc["initial"]["plus"]["n"] = {"shape": "uniform", "value": 2.0}
    doc["initial"]["plus"]["u"] = {"shape": "uniform", "value": [0.0, 0.0, 0.0]}
    cfg = work / "cfg.json"
    cfg.write_text(json.dumps(doc))
    out = work / "run"
    res = run_cli(["run", "--config", str(cfg), "--out", str(out)], cwd=work)
    assert res.returncode == 0, res.stderr
    return out


def test_profiles_image(reference_run, tmp_path):
    snap = sorted(reference_run.glob("snap_*.csv"))[0]
    img = tmp_path / "profiles.png"
    res = run_script("plot_profiles.py", [str(snap), str(img)], cwd=tmp_path)
    assert res.returncode == 0, res.stderr
    assert img.exists() and img.stat().st_size > 0


def test_profiles_flat_for_uniform_state(tmp_path):
    doc = base_config(output={"t_end": 0.0, "out_dir": "run"})
    doc["initial"]["plus"]["n"] = {"shape": "uniform", "value": 1.5}
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "run"
    res = run_cli(["run", "--config", str(cfg), "--out", str(out)], cwd=tmp_path)
    assert res.returncode == 0, res.stderr
    frame = load_frame(sorted(out.glob("snap_*.csv"))[0])
    # plotted y-ranges collapse to the constant
    assert frame.n_plus.max() - frame.n_plus.min() < 1e-12
    assert frame.n_minus.max() - frame.n_minus.min() < 1e-12
    img = tmp_path / "flat.png"
    res = run_script("plot_profiles.py", [str(sorted(out.glob('snap_*.csv'))[0]), str(img)],
                     cwd=tmp_path)
    assert res.returncode == 0 and img.stat().st_size > 0


def test_profiles_rejects_malformed_header(reference_run, tmp_path):
    snap = sorted(reference_run.glob("snap_*.csv"))[0]
    lines = snap.read_text().splitlines()
    truncated = tmp_path / "broken.csv"
    truncated.write_text("\n".join(
        [",".join(lines[0].split(",")[:-2])] + [",".join(r.split(",")[:-2]) for r in lines[1:]]))
    img = tmp_path / "broken.png"
    res = run_script("plot_profiles.py", [str(truncated), str(img)], cwd=tmp_path)
    assert res.returncode == 1
    assert "missing column 'v_total'" in res.stderr
    assert not img.exists()


def test_profiles_usage_error(tmp_path):
    res = run_script("plot_profiles.py", ["only-one-arg"], cwd=tmp_path)
    assert res.returncode == 2


def test_timeseries_mass_flat_without_coupling(reference_run, tmp_path):
    img = tmp_path / "series.png"
    res = run_script("plot_timeseries.py", [str(reference_run), str(img)], cwd=tmp_path)
    assert res.returncode == 0, res.stderr
    assert img.exists() and img.stat().st_size > 0
    frames = load_run(reference_run)
    t, mass_p, mass_m, mom, pol = series(frames)
    assert np.ptp(mass_p) < 1e-12 * mass_p[0]
    assert np.ptp(mass_m) < 1e-12 * mass_m[0]
    assert np.ptp(mom, axis=0).max() < 1e-12


def test_timeseries_band_flip_rate(band_flip_run, tmp_path):
    img = tmp_path / "flip.png"
    res = run_script("plot_timeseries.py", [str(band_flip_run), str(img)], cwd=tmp_path)
    assert res.returncode == 0, res.stderr
    rate_line = [l for l in res.stdout.splitlines()
                 if l.startswith("polarization_decay_rate:")]
    assert rate_line, res.stdout
    rate = float(rate_line[0].split(":")[1])
    want = 2.0 / 0.5
    assert abs(rate - want) / want < 0.05
    # the same fit from the loaded series
    frames = load_run(band_flip_run)
    t, *_rest, pol = series(frames)
    assert abs(fitted_decay_rate(t, pol) - want) / want < 0.05


def test_timeseries_single_snapshot_usage_error(tmp_path):
    doc = base_config(output={"t_end": 0.0, "out_dir": "run"})
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "run"
    assert run_cli(["run", "--config", str(cfg), "--out", str(out)], cwd=tmp_path).returncode == 0
    assert len(list(out.glob("snap_*.csv"))) == 1
    res = run_script("plot_timeseries.py", [str(out), str(tmp_path / "x.png")], cwd=tmp_path)
    assert res.returncode == 2


def test_images_reproducible_bytes(reference_run, tmp_path):
    snap = sorted(reference_run.glob("snap_*.csv"))[0]
    img1, img2 = tmp_path / "a.png", tmp_path / "b.png"
    assert run_script("plot_profiles.py", [str(snap), str(img1)], cwd=tmp_path).returncode == 0
    assert run_script("plot_profiles.py", [str(snap), str(img2)], cwd=tmp_path).returncode == 0
    assert img1.read_bytes() == img2.read_bytes()


def test_loader_rejects_empty_and_missing(tmp_path):
    with pytest.raises(SnapshotFormatError):
        load_run(tmp_path)
    bad = tmp_path / "snap_000000.csv"
    bad.write_text("")
    with pytest.raises(SnapshotFormatError):
        load_frame(bad)
