import json
import math

import numpy as np
import pytest

import thermobeat as tb

SHORT = """
[forward]
n_atoms = 20000
rephase_interval = 1 ms
[backward]
n_atoms = 20000
[detector]
jitter_sigma = 0 s
[run]
duration = 0.5 s
"""


def test_physics_helpers():
    theta = math.radians(2.0)
    assert tb.beat_frequency(100e6, theta) == pytest.approx(199.878e6, rel=1e-5)
    assert tb.g20_from_r(0.02) == pytest.approx(1.9612, abs=1e-4)
    assert tb.r_from_g20(tb.g20_from_r(0.3)) == pytest.approx(0.3, abs=1e-12)
    assert tb.visibility_from_ratio(1.0) == pytest.approx(1.0)
    sb = tb.sigma_backward(9.6e6 / math.sin(theta), theta, 6.07e6)
    assert sb == pytest.approx(15.48e6, rel=1e-3)


def test_config_errors_are_typed():
    cfg = tb.parse_config("[experiment]\ndetuning = 100 MHz\n")
    assert cfg.detuning == 1e8
    assert len(cfg.config_hash()) == 16
    with pytest.raises(tb.ConfigError, match="detuning"):
        tb.parse_config("[experiment]\ndetunning = 100 MHz\n")
    with pytest.raises(tb.Error):
        tb.parse_config("[run]\nduration = 10\n")


def test_predict_single_channel_peaks_at_two():
    g2 = tb.predict(tb.parse_config("[experiment]\nrate_backward = 0 Hz\n"))
    assert isinstance(g2.values, np.ndarray)
    i = int(np.argmax(g2.values))
    assert g2.tau[i] == 0.0
    assert g2.values[i] == pytest.approx(2.0)


def test_simulate_correlate_estimate():
    cfg = tb.parse_config(SHORT)
    a, b = tb.simulate(cfg)
    assert a.dtype == np.int64 and np.all(np.diff(a) > 0)
    a2, b2 = tb.simulate(cfg)
    assert np.array_equal(a, a2) and np.array_equal(b, b2)
    g2 = tb.correlate(cfg, a, b, cfg.duration)
    assert len(g2) == 6401
    assert g2.total_coincidences == int(g2.counts.sum())
    e = tb.estimate_beat(g2, cfg)
    assert abs(e.f_mod - tb.beat_frequency(100e6, cfg.observation_angle)) < 5e6
    assert e.sigma_f > 0


def test_histogram_matches_numpy():
    rng = np.random.default_rng(3)
    a = np.unique(rng.integers(0, 10**7, 2000))
    b = np.unique(rng.integers(0, 10**7, 2000))
    w, k = 1000, 20
    counts = tb.histogram(a, b, 1e-5, w * 1e-12, k * w * 1e-12, chunks=4)
    d = (b[None, :] - a[:, None]).ravel()
    ref = np.zeros(2 * k + 1, dtype=np.uint64)
    for x in d:
        m = abs(int(x))
        j = 0 if 2 * m <= w else (2 * m - w - 1) // (2 * w) + 1
        if j <= k:
            ref[k + (j if x > 0 else -j)] += 1
    assert np.array_equal(counts, ref)


def test_run_pipeline_writes_manifest(tmp_path):
    cfg = tb.parse_config("[experiment]\nrate_backward = 0 Hz\n")
    paths = tb.run_pipeline(cfg, "predict", str(tmp_path))
    assert paths[-1].endswith("manifest.json")
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config_hash"] == cfg.config_hash()
    with pytest.raises(tb.ConfigError):
        tb.run_pipeline(cfg, "correlate", str(tmp_path))
