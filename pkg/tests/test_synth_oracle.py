import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from appear import io, synth
from appear.core import Recording
from appear.errors import ArgumentError
from appear.preclean import decimate

QUIET = dict(gradient_mv=0, bcg_uv=0, blink_uv=0, saccade_uv=0, muscle_uv=0)


@pytest.fixture(scope="module")
def session():
    return synth.generate(duration_s=60.0, seed=1)


def test_raw_is_sum_of_constituents(session):
    assert np.array_equal(session.raw.data, session.truth_sum())
    assert set(session.truth) == set(synth.CONSTITUENTS)


def test_quiet_spec_leaves_only_neural_on_scalp():
    s = synth.generate(duration_s=30.0, seed=2, **QUIET)
    n = s.raw.n_channels - 1
    assert np.array_equal(s.raw.data[:n], s.truth["neural"].data[:n])
    for name in ("gradient", "bcg", "ocular", "muscle"):
        assert not s.truth[name].data.any()


@pytest.mark.parametrize("seed", range(5))
def test_heart_rate_gives_expected_peak_count(seed):
    s = synth.generate(duration_s=60.0, seed=seed, **QUIET)
    assert abs(len(s.r_peaks) - 72) <= 2
    assert np.all(np.diff(s.r_peaks) > 0)


def test_markers_match_schedule(session):
    info = session.info["gradient"]
    slices = session.raw.markers_labelled("R128")
    assert len(slices) == info["n_volumes"] * session.spec.n_slices
    assert slices[0].sample == info["start"]


def test_task_markers_and_onsets():
    s = synth.generate(duration_s=60.0, seed=3, mode="task", n_trials=10)
    stims = s.raw.markers_labelled("S  1")
    assert [m.sample for m in stims] == s.stim_onsets.tolist()
    assert 0 < len(stims) <= 10
    # onsets land on samples shared by the 250 Hz base grid
    assert np.all(s.stim_onsets % 20 == 0)


def test_same_seed_is_bit_identical():
    a = synth.generate(duration_s=20.0, seed=11)
    b = synth.generate(duration_s=20.0, seed=11)
    assert np.array_equal(a.raw.data, b.raw.data)
    assert np.array_equal(a.oximetry.data, b.oximetry.data)
    assert np.array_equal(a.r_peaks, b.r_peaks)
    assert a.raw.markers == b.raw.markers
    c = synth.generate(duration_s=20.0, seed=12)
    assert not np.array_equal(a.raw.data, c.raw.data)


def test_gradient_energy_sits_on_slice_harmonics(session):
    g = session.truth["gradient"].data[:-1].astype(float)
    power = np.abs(np.fft.rfft(g, axis=1)) ** 2
    f = np.fft.rfftfreq(g.shape[1], 1 / session.raw.fs)
    slice_f = session.spec.slice_freq
    assert slice_f == pytest.approx(19.5)
    near = np.abs(f - slice_f * np.round(f / slice_f)) <= 0.5
    assert power[:, near].sum() / power.sum() >= 0.90


def test_constituents_roughly_uncorrelated():
    pairs = {}
    for seed in range(5):
        s = synth.generate(duration_s=60.0, seed=seed)
        n = s.raw.n_channels - 1
        flat = {k: s.truth[k].data[:n].ravel().astype(float) for k in synth.CONSTITUENTS
                if k != "ecg"}
        names = list(flat)
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                pairs.setdefault((a, b), []).append(abs(np.corrcoef(flat[a], flat[b])[0, 1]))
    for key, vals in pairs.items():
        assert np.median(vals) < 0.05, key


def test_oximetry_lags_beats():
    s = synth.generate(duration_s=30.0, seed=4, **QUIET)
    oxi = s.oximetry
    assert oxi.fs == 40.0 and oxi.n_samples == 1200
    lags = []
    for beat in np.asarray(s.info["beats_s"]):
        a = int(np.ceil(beat * 40))
        seg = oxi.data[0, a:a + 32]
        if seg.size == 32:
            lags.append((a + int(np.argmax(seg))) / 40 - beat)
    # the pulse wave peaks some time after its 0.3 s onset delay
    assert 0.3 <= np.median(lags) <= 0.8


@pytest.mark.parametrize("bad", [
    dict(duration_s=5.0), dict(hr_bpm=0), dict(blink_per_min=-1), dict(mode="sleep"),
    dict(fs_raw=4999), dict(channels=("Fz", "Cz")),
])
def test_invalid_specs(bad):
    with pytest.raises(ArgumentError):
        synth.generate(**bad)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(40, 120))
def test_raw_sum_identity_holds_for_any_seed(seed, hr):
    s = synth.generate(duration_s=10.0, seed=seed, hr_bpm=hr, fs_raw=1000.0, tr_s=2.0)
    assert np.array_equal(s.raw.data, s.truth_sum())


# ---------------------------------------------------------------- scoring

@pytest.fixture(scope="module")
def scored(session):
    truth = decimate(session.truth["neural"], 20)
    raw = decimate(session.raw, 20)
    return truth, raw


def test_truth_scores_one_and_zeros_score_zero(scored):
    truth, _ = scored
    assert synth.score_recovery(truth, truth)["mean_correlation"] == pytest.approx(1.0)
    zeros = Recording(np.zeros_like(truth.data), truth.fs, truth.channels)
    assert synth.score_recovery(zeros, truth)["mean_correlation"] == 0.0


def test_raw_scores_below_artifact_free_input(scored, session):
    truth, raw = scored
    partial = decimate(Recording(session.raw.data - session.truth["gradient"].data,
                                 session.raw.fs, session.raw.channels), 20)
    r_raw = synth.score_recovery(raw, truth)["mean_correlation"]
    r_partial = synth.score_recovery(partial, truth)["mean_correlation"]
    assert r_raw < r_partial


def test_score_rejects_mismatch(scored):
    truth, _ = scored
    with pytest.raises(ArgumentError):
        synth.score_recovery(Recording(truth.data[:, :1000], truth.fs, truth.channels), truth)
    with pytest.raises(ArgumentError):
        synth.score_recovery(Recording(truth.data, 500.0, truth.channels), truth)


# ------------------------------------------------------------------ files

def test_write_session_round_trip(tmp_path):
    s = synth.generate(duration_s=12.0, seed=5, fs_raw=1000.0)
    paths = synth.write_session(s, tmp_path, name="demo")
    for key in ["raw", "oximetry", "truth_json"] + [f"truth_{c}" for c in synth.CONSTITUENTS]:
        assert Path(paths[key]).exists(), key
    back = io.read_brainvision(paths["raw"])
    assert back.labels == s.raw.labels
    assert back.markers == s.raw.markers
    np.testing.assert_allclose(back.data, s.raw.data, rtol=1e-6)
    doc = json.loads(Path(paths["truth_json"]).read_text())
    assert doc["r_peaks"] == s.r_peaks.tolist()


def test_load_spec(tmp_path):
    p = tmp_path / "spec.json"
    p.write_text(json.dumps({"duration_s": 20, "hr_bpm": 60}))
    spec = synth.load_spec(p)
    assert spec.duration_s == 20 and spec.hr_bpm == 60
    p.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(ArgumentError):
        synth.load_spec(p)
