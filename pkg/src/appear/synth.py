"""Synthetic EEG-fMRI sessions with known constituents.

A session is the exact float32 sum of separately stored constituents
(neural, gradient, BCG, ocular, muscle, ECG), so every stage of the
pipeline can be scored against ground truth.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

from . import montage
from .core import ChannelInfo, IntervalSet, Kind, Marker, Recording, excise_intervals
from .errors import ArgumentError
from .io import write_brainvision, write_json, write_oximetry
from .preclean import fir_bandpass, welch_psd

CONSTITUENTS = ("neural", "gradient", "bcg", "ocular", "muscle", "ecg")
BASE_FS = 250.0


@dataclass
class SynthSpec:
    duration_s: float = 480.0
    channels: tuple = montage.DEFAULT_31
    fs_raw: float = 5000.0
    tr_s: float = 2.0
    n_slices: int = 39
    scan_start_s: float = 1.0
    gradient_mv: float = 2.0
    gradient_jitter: float = 0.005
    gradient_drift: float = 0.0
    hr_bpm: float = 72.0
    rr_jitter: float = 0.04
    bcg_uv: float = 150.0
    bcg_beat_jitter: float = 0.1
    blink_per_min: float = 12.0
    blink_uv: float = 100.0
    saccade_per_min: float = 6.0
    saccade_uv: float = 40.0
    muscle_per_min: float = 6.0
    muscle_uv: float = 8.0
    muscle_channels: tuple = ("T8", "FC6", "CP6", "TP10")
    neural_uv: float = 50.0
    n_neural_sources: int = 26
    alpha_uv: float = 10.0
    noise_exponent: float = 1.0
    sensor_noise_uv: float = 1.0
    ecg_mv: float = 1.0
    ecg_gradient_gain: float = 1.5
    oximetry_fs: float = 40.0
    oximetry_delay_s: float = 0.3
    oximetry_noise: float = 0.02
    mode: str = "rest"
    n_trials: int = 72
    isi_s: tuple = (3.0, 5.0)
    n2_uv: float = -5.0
    p3_uv: float = 10.0
    seed: int = 0

    def validate(self):
        if self.duration_s < 10:
            raise ArgumentError(f"duration must be at least 10 s, got {self.duration_s}")
        rates = ("fs_raw", "tr_s", "hr_bpm", "oximetry_fs")
        for name in rates:
            if not getattr(self, name) > 0:
                raise ArgumentError(f"{name} must be positive")
        nonneg = ("gradient_mv", "gradient_jitter", "rr_jitter", "bcg_uv", "bcg_beat_jitter",
                  "blink_per_min", "blink_uv", "saccade_per_min", "saccade_uv",
                  "muscle_per_min", "muscle_uv", "neural_uv", "alpha_uv",
                  "sensor_noise_uv", "ecg_mv", "scan_start_s", "n_trials", "oximetry_noise")
        for name in nonneg:
            if getattr(self, name) < 0:
                raise ArgumentError(f"{name} must be non-negative")
        if self.n_slices < 1:
            raise ArgumentError("n_slices must be at least 1")
        if self.mode not in ("rest", "task"):
            raise ArgumentError(f"mode must be rest or task, got {self.mode!r}")
        ratio = self.fs_raw / BASE_FS
        if abs(ratio - round(ratio)) > 1e-9:
            raise ArgumentError(f"fs_raw must be a multiple of {BASE_FS:g}")
        for lab in self.channels:
            if montage.canonical_label(lab) is None:
                raise ArgumentError(f"unknown channel {lab!r}")
        if len(set(self.channels)) != len(self.channels) or len(self.channels) < 8:
            raise ArgumentError("need at least 8 distinct scalp channels")
        tr_samples = self.tr_s * self.fs_raw
        if abs(tr_samples - round(tr_samples)) > 1e-6:
            raise ArgumentError("TR must span a whole number of raw samples")

    @property
    def slice_freq(self):
        return self.n_slices / self.tr_s


@dataclass(eq=False)
class SynthSession:
    raw: Recording
    truth: dict
    ecg: Recording
    oximetry: Recording
    r_peaks: np.ndarray
    spec: SynthSpec
    stim_onsets: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    info: dict = field(default_factory=dict)

    def truth_sum(self):
        """Constituents added in the same order, and precision, as ``raw``."""
        total = np.zeros(self.raw.data.shape, dtype=np.float32)
        for name in CONSTITUENTS:
            total += self.truth[name].data
        return total


# ------------------------------------------------------------------ pieces

def _gauss(t, mu, sigma):
    return np.exp(-0.5 * ((t - mu) / sigma) ** 2)


def _slice_waveform(t, period, axis):
    """Gradient-induced voltage of one slice on one gradient axis.

    Built from Gaussian-derivative spikes (ramp edges of the slice-select,
    phase-encode and readout lobes). ``t`` is time within the slice.
    """
    dg = lambda mu, s: -(t - mu) / s * _gauss(t, mu, s)
    out = np.zeros_like(t)
    if axis == 0:
        edges = [(0.0010, 1.0), (0.0035, -1.0), (0.0045, -0.5), (0.0060, 0.5)]
    elif axis == 1:
        edges = [(0.0080 + 0.0022 * k, 0.25 * (-1) ** k) for k in range(18)]
    else:
        edges = [(0.0070, 0.6), (0.0075, -0.6)] + [
            (0.0080 + 0.0022 * k + 0.0011, 0.12 * (-1) ** k) for k in range(18)]
    for mu, a in edges:
        if mu < period - 0.002:
            out += a * dg(mu, 0.0003)
    # slow envelope of the slice (eddy currents, slice-select plateau)
    slow = {0: (0.012, 0.004, 0.5), 1: (0.025, 0.006, -0.4), 2: (0.018, 0.005, 0.45)}[axis]
    out += slow[2] * (_gauss(t, slow[0], slow[1]) - _gauss(t, slow[0] + 2.5 * slow[1], slow[1]))
    return out


def gradient_volume(spec: SynthSpec):
    """Three axis waveforms over one TR, exactly periodic at the slice rate."""
    n = int(round(spec.tr_s * spec.fs_raw))
    period = spec.tr_s / spec.n_slices
    t = np.arange(n) / spec.fs_raw
    phase = np.mod(t, period)
    waves = np.stack([_slice_waveform(phase, period, a) for a in range(3)])
    return waves / np.abs(waves).max(axis=1, keepdims=True)


def pink_noise(rng, n, fs, exponent=1.0, fmin=0.5):
    """Unit-variance noise with power falling as 1/f**exponent."""
    spec = rng.standard_normal(n // 2 + 1) + 1j * rng.standard_normal(n // 2 + 1)
    f = np.fft.rfftfreq(n, 1.0 / fs)
    spec *= np.maximum(f, fmin) ** (-exponent / 2.0)
    spec[0] = 0.0
    x = np.fft.irfft(spec, n)
    return x / x.std()


def band_noise(rng, n, fs, lo, hi, order=4):
    sos = signal.butter(order, [lo, hi], btype="bandpass", fs=fs, output="sos")
    x = signal.sosfiltfilt(sos, rng.standard_normal(n))
    return x / x.std()


def blob_gains(positions, centre, width):
    d2 = np.sum((positions - np.asarray(centre)) ** 2, axis=1)
    return np.exp(-0.5 * d2 / width ** 2)


def beat_times(rng, duration, hr_bpm, jitter, start=0.5):
    rr0 = 60.0 / hr_bpm
    times = []
    t = start + rng.uniform(0, rr0)
    while t < duration - 0.05:
        times.append(t)
        t += rr0 * float(np.clip(1.0 + jitter * rng.standard_normal(), 0.7, 1.3))
    return np.asarray(times)


def bcg_waveform(t):
    """Cardiac-locked artifact: damped 4 Hz oscillation starting 0.2 s after R."""
    tau = t - 0.2
    out = np.zeros_like(t)
    m = tau >= 0
    out[m] = np.exp(-tau[m] / 0.15) * np.sin(2 * np.pi * 4.0 * tau[m]) * (1 - np.exp(-tau[m] / 0.02))
    return out / 0.75


def ecg_waveform(t):
    """PQRST complex in mV for one beat, R at t = 0."""
    return (0.12 * _gauss(t, -0.18, 0.025) - 0.12 * _gauss(t, -0.028, 0.008)
            + 1.0 * _gauss(t, 0.0, 0.010) - 0.25 * _gauss(t, 0.030, 0.010)
            + 0.30 * _gauss(t, 0.26, 0.045))


def pulse_waveform(t):
    return _gauss(t, 0.15, 0.07) + 0.35 * _gauss(t, 0.42, 0.09)


def _place(out, fs, times, fn, span, amps=None):
    """Add ``fn(t - time) * amp`` around each event time (in seconds)."""
    lo_s, hi_s = span
    offs = np.arange(int(np.floor(lo_s * fs)), int(np.ceil(hi_s * fs)) + 1)
    for i, tt in enumerate(times):
        centre = int(np.floor(tt * fs))
        idx = centre + offs
        keep = (idx >= 0) & (idx < out.size)
        if not keep.any():
            continue
        a = 1.0 if amps is None else amps[i]
        out[idx[keep]] += a * fn(idx[keep] / fs - tt)


def _upsample(x, factor):
    if factor == 1:
        return x
    return signal.resample_poly(x, factor, 1, padtype="line")


def erp_waveform(t, n2_uv, p3_uv):
    return n2_uv * _gauss(t, 0.200, 0.020) + p3_uv * _gauss(t, 0.400, 0.035)


ERP_GAINS = {"Fz": (1.0, 0.6), "FCz": (1.0, 0.8), "Cz": (0.9, 1.0), "Pz": (0.4, 1.0)}


def _erp_maps(labels, positions):
    """Per-channel (N2, P3) gains: tabulated on the midline, smooth elsewhere."""
    n2 = blob_gains(positions, (0.0, 0.25), 0.35)
    p3 = blob_gains(positions, (0.0, -0.2), 0.45)
    for i, lab in enumerate(labels):
        if lab in ERP_GAINS:
            n2[i], p3[i] = ERP_GAINS[lab]
    return n2, p3


def neural_sources(spec: SynthSpec, rng, n_base, positions):
    """Mixing matrix and base-rate activations of the brain sources."""
    k = spec.n_neural_sources
    cols, rows = [], []
    for _ in range(k):
        r = 0.75 * np.sqrt(rng.uniform())
        th = rng.uniform(0, 2 * np.pi)
        centre = (r * np.cos(th), min(r * np.sin(th), 0.3))
        g = blob_gains(positions, centre, rng.uniform(0.3, 0.6)) * rng.choice([-1.0, 1.0])
        cols.append(g)
        rows.append(pink_noise(rng, n_base, BASE_FS, spec.noise_exponent))
    # occipital alpha, amplitude-modulated 10 Hz
    alpha = band_noise(rng, n_base, BASE_FS, 9.0, 11.0)
    env = 1.0 + 0.5 * band_noise(rng, n_base, BASE_FS, 0.05, 0.5, order=2)
    alpha = alpha * np.clip(env, 0.1, None)
    alpha /= alpha.std()
    cols.append(blob_gains(positions, montage.POSITIONS["Oz"], 0.35))
    rows.append(alpha)
    A = np.stack(cols, axis=1)
    S = np.stack(rows)
    bg = A[:, :k] @ S[:k]
    bg_scale = (spec.neural_uv / 4.0) / np.sqrt(np.mean(bg ** 2)) if np.any(bg) else 0.0
    A[:, :k] *= bg_scale
    A[:, k] *= spec.alpha_uv / max(A[:, k].max(), 1e-12) / np.sqrt(2)
    return A, S


def generate(spec: SynthSpec | None = None, **overrides) -> SynthSession:
    """Build a synthetic session; equal specs give bit-identical output."""
    spec = dataclasses.replace(spec or SynthSpec(), **overrides)
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    fs = spec.fs_raw
    factor = int(round(fs / BASE_FS))
    n_base = int(round(spec.duration_s * BASE_FS))
    n = n_base * factor
    labels = [montage.canonical_label(l) for l in spec.channels]
    positions = np.array([montage.POSITIONS[l] for l in labels])
    n_scalp = len(labels)
    channels = tuple(ChannelInfo.from_label(l) for l in labels) + (ChannelInfo.from_label("ECG"),)
    rows = n_scalp + 1
    t_all = None
    truth = {name: np.zeros((rows, n), dtype=np.float32) for name in CONSTITUENTS}
    info = {}

    # neural background, alpha, sensor noise (and ERPs in task mode)
    A, S = neural_sources(spec, rng, n_base, positions)
    noise = rng.standard_normal((n_scalp, n_base)) * spec.sensor_noise_uv
    base = A @ S + noise
    markers = []
    stim = np.zeros(0, dtype=np.int64)
    if spec.mode == "task" and spec.n_trials > 0:
        onsets = []
        t = spec.scan_start_s + 2.0
        for _ in range(spec.n_trials):
            t += rng.uniform(*spec.isi_s)
            if t > spec.duration_s - 1.5:
                break
            onsets.append(t)
        stim = np.array([int(round(o * fs)) for o in onsets], dtype=np.int64)
        n2g, p3g = _erp_maps(labels, positions)
        erp_n2 = np.zeros(n_base)
        erp_p3 = np.zeros(n_base)
        base_onsets = stim / fs
        _place(erp_n2, BASE_FS, base_onsets, lambda u: erp_waveform(u, spec.n2_uv, 0.0), (-0.1, 0.4))
        _place(erp_p3, BASE_FS, base_onsets, lambda u: erp_waveform(u, 0.0, spec.p3_uv), (0.1, 0.7))
        base += np.outer(n2g, erp_n2) + np.outer(p3g, erp_p3)
        # onsets fall on base-rate samples so the planted latencies are exact
        stim = (np.round(stim / factor) * factor).astype(np.int64)
        markers += [Marker(int(s), "S  1") for s in stim]
        info["erp_gains"] = {"n2": n2g.tolist(), "p3": p3g.tolist()}
    for ch in range(n_scalp):
        truth["neural"][ch] = _upsample(base[ch], factor)
    del base, S, noise
    info["neural_mixing"] = A.tolist()

    # gradient
    n_vol = 0
    if spec.gradient_mv > 0:
        vol = gradient_volume(spec)
        L = vol.shape[1]
        start = int(round(spec.scan_start_s * fs))
        n_vol = max(0, (n - start - int(fs)) // L)
        w = rng.uniform(-1, 1, size=(rows, 3))
        peak = np.abs(w @ vol).max(axis=1)
        gains = rng.uniform(0.5, 1.0, size=rows) * spec.gradient_mv * 1000.0 / peak
        gains[-1] *= spec.ecg_gradient_gain
        w *= gains[:, None]
        amp = (1.0 + spec.gradient_jitter * rng.standard_normal(n_vol)
               + spec.gradient_drift * np.linspace(0, 1, n_vol))
        per_ch = w @ vol
        for k in range(n_vol):
            truth["gradient"][:, start + k * L:start + (k + 1) * L] = amp[k] * per_ch
        slice_starts = [start + k * L + int(round(j * L / spec.n_slices))
                        for k in range(n_vol) for j in range(spec.n_slices)]
        markers += [Marker(s, "R128") for s in slice_starts]
        info["gradient"] = {"start": start, "n_volumes": n_vol, "volume_samples": L}

    # heartbeats: BCG, ECG, oximetry
    beats = beat_times(rng, spec.duration_s, spec.hr_bpm, spec.rr_jitter)
    r_peaks = np.floor(beats * fs).astype(np.int64)
    r_peaks = r_peaks[r_peaks < n]
    if spec.bcg_uv > 0:
        wave = np.zeros(n)
        amps = 1.0 + spec.bcg_beat_jitter * rng.standard_normal(beats.size)
        _place(wave, fs, beats, bcg_waveform, (0.0, 1.1), amps)
        x = positions[:, 0]
        g = x / np.abs(x).max() + 0.05 * rng.standard_normal(n_scalp)
        g *= spec.bcg_uv / np.abs(g).max()
        for ch in range(n_scalp):
            truth["bcg"][ch] = g[ch] * wave
        info["bcg_gains"] = g.tolist()
    ecg = np.zeros(n)
    _place(ecg, fs, beats, ecg_waveform, (-0.35, 0.5))
    wander = 0.05 * np.sin(2 * np.pi * 0.15 * np.arange(n) / fs + rng.uniform(0, 6.3))
    truth["ecg"][-1] = spec.ecg_mv * 1000.0 * (ecg + wander) + 5.0 * _upsample(
        rng.standard_normal(n_base), factor)
    n_oxi = int(np.floor(spec.duration_s * spec.oximetry_fs))
    oxi = np.zeros(n_oxi)
    _place(oxi, spec.oximetry_fs, beats + spec.oximetry_delay_s, pulse_waveform, (0.0, 0.8))
    oxi += spec.oximetry_noise * rng.standard_normal(n_oxi)

    # ocular: blinks (frontal, unipolar) and saccades (frontal, left/right)
    front = blob_gains(positions, (0.0, 0.95), 0.3)
    front /= front.max()
    blink_t = _poisson_times(rng, spec.duration_s, spec.blink_per_min, 0.3)
    if spec.blink_uv > 0 and blink_t.size:
        wave = np.zeros(n_base)
        _place(wave, BASE_FS, blink_t, lambda u: np.where(
            np.abs(u - 0.15) <= 0.15, 0.5 - 0.5 * np.cos(2 * np.pi * u / 0.3), 0.0), (0.0, 0.3))
        truth["ocular"][:n_scalp] += np.outer(front * spec.blink_uv, _upsample(wave, factor)).astype(np.float32)
    sac_t = _poisson_times(rng, spec.duration_s, spec.saccade_per_min, 1.5)
    if spec.saccade_uv > 0 and sac_t.size:
        wave = np.zeros(n_base)
        for tt in sac_t:
            a, b = int(tt * BASE_FS), int((tt + rng.uniform(0.4, 1.0)) * BASE_FS)
            wave[a:min(b, n_base)] += rng.choice([-1.0, 1.0])
        wave = signal.sosfiltfilt(signal.butter(2, 20.0, fs=BASE_FS, output="sos"), wave)
        lat = blob_gains(positions, (0.0, 0.7), 0.45) * positions[:, 0]
        lat /= np.abs(lat).max()
        truth["ocular"][:n_scalp] += np.outer(lat * spec.saccade_uv, _upsample(wave, factor)).astype(np.float32)
    info["blinks_s"] = blink_t.tolist()
    info["saccades_s"] = sac_t.tolist()

    # muscle bursts on a few channels
    mus_t = _poisson_times(rng, spec.duration_s, spec.muscle_per_min, 2.5)
    if spec.muscle_uv > 0 and mus_t.size:
        env = np.zeros(n_base)
        for tt in mus_t:
            a, b = int(tt * BASE_FS), int((tt + rng.uniform(0.5, 2.0)) * BASE_FS)
            seg = min(b, n_base) - a
            if seg > 0:
                env[a:a + seg] = np.maximum(env[a:a + seg], signal.windows.tukey(seg, 0.3))
        burst = band_noise(rng, n_base, BASE_FS, 30.0, 60.0) * env
        mg = np.zeros(n_scalp)
        for lab in spec.muscle_channels:
            if lab in labels:
                mg += blob_gains(positions, montage.POSITIONS[lab], 0.15)
        if mg.max() > 0:
            mg = mg / mg.max() * spec.muscle_uv
            truth["muscle"][:n_scalp] += np.outer(mg, _upsample(burst, factor)).astype(np.float32)
    info["muscle_s"] = mus_t.tolist()

    raw = np.zeros((rows, n), dtype=np.float32)
    for name in CONSTITUENTS:
        raw += truth[name]
    markers.sort()
    truth_recs = {name: Recording(truth[name], fs, channels) for name in CONSTITUENTS}
    raw_rec = Recording(raw, fs, channels, tuple(markers))
    ecg_rec = Recording(truth["ecg"][-1:], fs, (channels[-1],), (), Kind.ECG)
    oxi_rec = Recording(oxi[np.newaxis], spec.oximetry_fs, (ChannelInfo("PPG"),), (), Kind.OXIMETRY)
    info["n_volumes"] = n_vol
    info["beats_s"] = beats.tolist()
    return SynthSession(raw_rec, truth_recs, ecg_rec, oxi_rec, r_peaks, spec, stim, info)


def _poisson_times(rng, duration, per_min, min_gap):
    if per_min <= 0:
        return np.zeros(0)
    count = rng.poisson(per_min * duration / 60.0)
    t = np.sort(rng.uniform(1.0, max(1.0, duration - 3.0), count))
    keep = []
    for x in t:
        if not keep or x - keep[-1] >= min_gap:
            keep.append(x)
    return np.asarray(keep)


# ------------------------------------------------------------------ scoring

def _corr(a, b):
    a = a - a.mean()
    b = b - b.mean()
    den = np.sqrt(np.dot(a, a) * np.dot(b, b))
    return float(np.dot(a, b) / den) if den > 0 else 0.0


def score_recovery(cleaned: Recording, truth_neural: Recording, bad: IntervalSet | None = None,
                   band=(1.0, 70.0)):
    """Correlation with the true neural signal and residual band powers.

    Both inputs are band-passed, then ``bad`` intervals are cut from both.
    Only channels present in both (by label) are scored.
    """
    if cleaned.fs != truth_neural.fs:
        raise ArgumentError("cleaned and truth must share a sampling rate")
    labels = [l for l in cleaned.labels if l in truth_neural.labels and not
              montage.is_ecg_label(l)]
    if cleaned.n_samples != truth_neural.n_samples or not labels:
        raise ArgumentError("cleaned and truth recordings do not match")
    c = fir_bandpass(cleaned.pick(labels), *band)
    t = fir_bandpass(truth_neural.pick(labels), *band)
    if bad is not None and len(bad):
        c, _ = excise_intervals(c, bad)
        t, _ = excise_intervals(t, bad)
    corr = np.array([_corr(np.asarray(c.data[i], float), np.asarray(t.data[i], float))
                     for i in range(len(labels))])
    resid = np.asarray(c.data, float) - np.asarray(t.data, float)
    out = {"labels": labels, "correlation": corr.tolist(),
           "mean_correlation": float(corr.mean()), "median_correlation": float(np.median(corr))}
    try:
        f, p = welch_psd(resid, c.fs)
        out["residual_band_db"] = {
            name: float(10 * np.log10(max(p[:, (f >= lo) & (f < hi)].mean(), 1e-30)))
            for name, (lo, hi) in {"delta": (1, 4), "theta": (4, 8), "alpha": (8, 13),
                                   "beta": (13, 30), "gamma": (30, 70)}.items()}
    except Exception:  # too short for a PSD window
        out["residual_band_db"] = {}
    out["residual_rms"] = float(np.sqrt(np.mean(resid ** 2)))
    return out


# -------------------------------------------------------------------- files

def write_session(session: SynthSession, out_dir, truth=True, name="session"):
    """BrainVision raw data, oximetry text, truth triplets and a truth JSON."""
    out_dir = Path(out_dir)
    paths = {"raw": write_brainvision(session.raw, out_dir, name)[0]}
    paths["oximetry"] = write_oximetry(session.oximetry, out_dir / f"{name}_oximetry.txt")
    if truth:
        for cname in CONSTITUENTS:
            paths[f"truth_{cname}"] = write_brainvision(
                session.truth[cname], out_dir / "truth", f"{name}_{cname}")[0]
    doc = {"spec": dataclasses.asdict(session.spec), "r_peaks": session.r_peaks,
           "stim_onsets": session.stim_onsets, "fs": session.raw.fs,
           "n_volumes": session.info.get("n_volumes", 0)}
    paths["truth_json"] = write_json(doc, out_dir / f"{name}_truth.json")
    return {k: str(v) for k, v in paths.items()}


def load_spec(path) -> SynthSpec:
    """Read a JSON spec (any subset of SynthSpec fields)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    names = {f.name for f in dataclasses.fields(SynthSpec)}
    unknown = set(doc) - names
    if unknown:
        raise ArgumentError(f"unknown spec fields {sorted(unknown)}")
    for key in ("channels", "muscle_channels", "isi_s"):
        if key in doc:
            doc[key] = tuple(doc[key])
    spec = SynthSpec(**doc)
    spec.validate()
    return spec


# -------------------------------------------------------- planted components

PLANTED = ("bcg", "blink", "saccade", "single_channel", "muscle", "alpha")
PLANTED_LABELS = {"bcg": "BCG", "blink": "Blink", "saccade": "Saccade",
                  "single_channel": "SingleChannel", "muscle": "Muscle", "alpha": "Neural",
                  "neural": "Neural"}


def planted_components(seed, duration_s=120.0, fs=BASE_FS, channels=montage.DEFAULT_31):
    """A known mixing matrix and sources with one component of each kind.

    Returns ``(A, S, kinds)`` with ``kinds[j]`` naming component ``j``:
    the six planted kinds followed by ``neural`` components (posterior or
    central 1/f sources) filling the remaining columns.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * fs))
    labels = list(channels)
    pos = np.array([montage.POSITIONS[l] for l in labels])
    nch = len(labels)
    cols, rows, kinds = [], [], []
    jit = lambda g, s=0.05: g + s * np.abs(g).max() * rng.standard_normal(g.size)

    beats = beat_times(rng, duration_s, rng.uniform(55, 85), 0.04)
    w = np.zeros(n)
    _place(w, fs, beats, bcg_waveform, (0.0, 1.1), 1.0 + 0.3 * rng.standard_normal(beats.size))
    w += 0.1 * pink_noise(rng, n, fs)
    cols.append(jit(pos[:, 0] / np.abs(pos[:, 0]).max()) * rng.uniform(20, 40))
    rows.append(w / w.std())
    kinds.append("bcg")

    w = np.zeros(n)
    _place(w, fs, _poisson_times(rng, duration_s, rng.uniform(10, 20), 0.5),
           lambda u: 0.5 - 0.5 * np.cos(2 * np.pi * np.clip(u, 0, 0.3) / 0.3), (0.0, 0.3))
    w += 0.05 * pink_noise(rng, n, fs)
    g = blob_gains(pos, (rng.uniform(-0.1, 0.1), 0.95), rng.uniform(0.25, 0.35))
    cols.append(jit(g) * rng.uniform(40, 100))
    rows.append(w / w.std())
    kinds.append("blink")

    w = np.zeros(n)
    for tt in _poisson_times(rng, duration_s, 10, 1.5):
        a, b = int(tt * fs), int((tt + rng.uniform(0.4, 1.0)) * fs)
        w[a:min(b, n)] += rng.choice([-1.0, 1.0])
    w = signal.sosfiltfilt(signal.butter(2, [1.0, 20.0], btype="bandpass", fs=fs, output="sos"), w)
    w += 0.05 * w.std() * pink_noise(rng, n, fs)
    g = blob_gains(pos, (0.0, 0.7), 0.45) * pos[:, 0]
    cols.append(jit(g / np.abs(g).max()) * rng.uniform(20, 50))
    rows.append(w / w.std())
    kinds.append("saccade")

    w = np.zeros(n)
    for tt in _poisson_times(rng, duration_s, 20, 1.0):
        a = int(tt * fs)
        seg = np.arange(int(0.5 * fs)) / fs
        burst = (np.sin(2 * np.pi * 2.0 * seg) + 0.6 * np.sin(2 * np.pi * 20.0 * seg)) * np.hanning(seg.size)
        b = min(n, a + seg.size)
        w[a:b] += burst[:b - a] * rng.uniform(0.5, 1.5)
    w += 0.02 * rng.standard_normal(n)
    g = np.zeros(nch)
    g[rng.integers(nch)] = 1.0
    g += 0.03 * rng.standard_normal(nch)
    cols.append(g * rng.uniform(20, 60))
    rows.append(w / w.std())
    kinds.append("single_channel")

    env = np.zeros(n)
    for tt in _poisson_times(rng, duration_s, 12, 2.5):
        a, b = int(tt * fs), int((tt + rng.uniform(0.5, 2.0)) * fs)
        seg = min(b, n) - a
        if seg > 0:
            env[a:a + seg] = np.maximum(env[a:a + seg], signal.windows.tukey(seg, 0.3))
    w = band_noise(rng, n, fs, 30.0, 60.0) * (0.2 + env)
    centre = montage.POSITIONS[rng.choice(["T7", "T8", "FT7", "FT8", "TP7", "TP8"])] \
        if all(l in montage.POSITIONS for l in ("FT7", "FT8", "TP7", "TP8")) else montage.POSITIONS["T8"]
    cols.append(jit(blob_gains(pos, centre, 0.25)) * rng.uniform(5, 15))
    rows.append(w / w.std())
    kinds.append("muscle")

    a = band_noise(rng, n, fs, 9.0, 11.5)
    a *= np.clip(1 + 0.5 * band_noise(rng, n, fs, 0.05, 0.5, order=2), 0.1, None)
    a += 0.2 * pink_noise(rng, n, fs)
    g = blob_gains(pos, (rng.uniform(-0.15, 0.15), -0.85), rng.uniform(0.25, 0.4))
    cols.append(jit(g) * rng.uniform(5, 15))
    rows.append(a / a.std())
    kinds.append("alpha")

    while len(cols) < nch:
        centre = (rng.uniform(-0.6, 0.6), rng.uniform(-0.7, 0.2))
        g = blob_gains(pos, centre, rng.uniform(0.3, 0.5)) * rng.choice([-1.0, 1.0])
        cols.append(jit(g) * rng.uniform(3, 10))
        rows.append(pink_noise(rng, n, fs))
        kinds.append("neural")
    return np.stack(cols, axis=1), np.stack(rows), kinds
