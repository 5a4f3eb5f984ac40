"""Evaluation measures: band power tables, Morse scalograms, ERPs and paired
statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal, special
from numpy.lib.stride_tricks import sliding_window_view

from .core import ChannelInfo, Recording
from .errors import (ArgumentError, DegenerateError, EmptyDataError,
                     InsufficientDataError)
from .preclean import band_average, compute_psd

EEG_BANDS = {"delta": (1.0, 4.0), "theta": (4.0, 8.0), "alpha": (8.0, 13.0),
             "beta": (13.0, 30.0)}
NOISE_EPS_UV = 0.01


# ---------------------------------------------------------------- spectra

def band_table(rec: Recording, bands=None, win_s=4.096, overlap=0.5):
    """Per-band dB power, one value per channel, for each named band."""
    psd = compute_psd(rec, win_s, overlap)
    return {name: band_average(psd, b) for name, b in (bands or EEG_BANDS).items()}


@dataclass(frozen=True, eq=False)
class Scalogram:
    times: np.ndarray
    freqs: np.ndarray
    magnitude: np.ndarray


def morse_wavelet(omega, gamma=3.0, beta=20.0):
    """Frequency response of the analytic Morse wavelet with peak value 2.

    ``omega`` is in radians at the wavelet's own scale; the response peaks
    at ``(beta/gamma)**(1/gamma)``.
    """
    omega = np.asarray(omega, dtype=np.float64)
    wp = (beta / gamma) ** (1.0 / gamma)
    out = np.zeros_like(omega)
    pos = omega > 0
    w = omega[pos]
    out[pos] = 2.0 * np.exp(beta * np.log(w / wp) - (w ** gamma - wp ** gamma))
    return out


def cwt_morse(x, fs, gamma=3.0, beta=20.0, voices=10, fmin=1.0, fmax=None):
    """Magnitude CWT with an analytic Morse filter bank.

    Centre frequencies run from ``fmin`` to ``fmax`` (default fs/2) at
    ``voices`` per octave. Filters peak at 2 on positive frequencies, so a
    unit-amplitude cosine gives a ridge of magnitude 1. The signal is
    reflected at both ends before transforming.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ArgumentError("cwt_morse expects a single signal")
    n = x.size
    if n < 2 * fs:
        raise InsufficientDataError(f"need at least 2 s of data, got {n / fs:.2f} s")
    fmax = fs / 2 if fmax is None else fmax
    n_freq = int(math.floor(voices * math.log2(fmax / fmin) + 1e-9)) + 1
    freqs = fmin * 2.0 ** (np.arange(n_freq) / voices)
    pad = n // 2
    ext = np.concatenate([x[pad:0:-1], x, x[-2:-pad - 2:-1]])
    m = ext.size
    spec = np.fft.fft(ext)
    omega = 2 * np.pi * np.fft.fftfreq(m)
    wp = (beta / gamma) ** (1.0 / gamma)
    mag = np.empty((n_freq, n))
    for i, f in enumerate(freqs):
        scale = wp / (2 * np.pi * f / fs)
        coef = np.fft.ifft(spec * morse_wavelet(scale * omega, gamma, beta))
        mag[i] = np.abs(coef[pad:pad + n])
    return Scalogram(np.arange(n) / fs, freqs, mag)


def channel_average(rec: Recording) -> Recording:
    """Mean across channels, as a one-channel recording."""
    if rec.n_channels < 1:
        raise ArgumentError("no channels to average")
    avg = np.asarray(rec.data, dtype=np.float64).mean(axis=0, keepdims=True)
    return Recording(avg, rec.fs, (ChannelInfo("Average"),), rec.markers, rec.kind)


# --------------------------------------------------------------------- ERP

@dataclass(frozen=True, eq=False)
class ErpSet:
    epochs: np.ndarray
    fs: float
    labels: tuple
    tmin: float = -0.2
    rejected: np.ndarray | None = None
    reasons: tuple = ()
    onsets: tuple = ()
    dropped: tuple = ()

    def __post_init__(self):
        n = self.epochs.shape[0]
        if self.rejected is None:
            object.__setattr__(self, "rejected", np.zeros(n, dtype=bool))
        if not self.reasons:
            object.__setattr__(self, "reasons", tuple(() for _ in range(n)))

    @property
    def times(self):
        return self.tmin + np.arange(self.epochs.shape[-1]) / self.fs

    @property
    def n_trials(self):
        return self.epochs.shape[0]

    @property
    def accepted(self):
        return self.epochs[~self.rejected]


def epoch_erp(rec: Recording, stim_markers, tmin=-0.2, tmax=0.8) -> ErpSet:
    """Cut ``[tmin, tmax]`` around each stimulus, both ends inclusive.

    Trials whose window leaves the data are dropped and listed in
    ``dropped`` with reason ``"boundary"``.
    """
    pre = int(round(-tmin * rec.fs))
    post = int(round(tmax * rec.fs))
    onsets, dropped, epochs = [], [], []
    data = np.asarray(rec.data, dtype=np.float64)
    for m in stim_markers:
        s = int(getattr(m, "sample", m))
        if s - pre < 0 or s + post >= rec.n_samples:
            dropped.append((s, "boundary"))
            continue
        onsets.append(s)
        epochs.append(data[:, s - pre:s + post + 1])
    if not epochs:
        raise EmptyDataError("no stimulus has a complete epoch window")
    return ErpSet(np.stack(epochs), rec.fs, tuple(rec.labels), -pre / rec.fs,
                  onsets=tuple(onsets), dropped=tuple(dropped))


def baseline_correct(erp: ErpSet) -> ErpSet:
    """Subtract each trial/channel's mean over the pre-stimulus samples."""
    base = erp.times < 0
    if not base.any():
        raise ArgumentError("epochs have no pre-stimulus samples")
    mean = erp.epochs[..., base].mean(axis=-1, keepdims=True)
    return replace(erp, epochs=erp.epochs - mean)


def lowpass_sos(fs, cutoff=30.0, order=5):
    if not 0 < cutoff < fs / 2:
        raise ArgumentError(f"cutoff {cutoff} Hz invalid at fs {fs}")
    return signal.butter(order, cutoff, btype="lowpass", fs=fs, output="sos")


def erp_lowpass(erp: ErpSet, cutoff=30.0, order=5) -> ErpSet:
    """Zero-phase Butterworth low-pass applied along each epoch.

    Run forward and backward, a Butterworth of order n is 6 dB down at its
    cutoff and loses about 12n dB per octave, so the default order 5 drops
    more than 48 dB between ``cutoff`` and twice that.
    """
    sos = lowpass_sos(erp.fs, cutoff, order)
    return replace(erp, epochs=signal.sosfiltfilt(sos, erp.epochs, axis=-1))


def _window_ranges(x, width):
    """Max - min over every ``width``-sample window of the last axis."""
    if x.shape[-1] < width:
        width = x.shape[-1]
    win = sliding_window_view(x, width, axis=-1)
    return win.max(axis=-1) - win.min(axis=-1)


def reject_trials(erp: ErpSet, step_uv=50.0, range_uv=200.0, flat_uv=0.5,
                  window_s=0.2) -> ErpSet:
    """Mark trials breaking the step, range or flat-line rules on any channel.

    Sliding windows hold ``round(window_s * fs)`` samples. Every rule that
    fires is listed in the trial's reasons.
    """
    width = max(2, int(round(window_s * erp.fs)))
    reasons = []
    for trial in erp.epochs:
        why = []
        if trial.shape[-1] > 1 and np.any(np.abs(np.diff(trial, axis=-1)) > step_uv):
            why.append("step")
        ranges = _window_ranges(trial, width)
        if np.any(ranges > range_uv):
            why.append("range")
        if np.any(ranges < flat_uv):
            why.append("flat")
        reasons.append(tuple(why))
    rejected = np.array([bool(r) for r in reasons], dtype=bool)
    return replace(erp, rejected=rejected, reasons=tuple(reasons))


@dataclass
class ErpMeasures:
    per_channel: dict = field(default_factory=dict)
    n_trials: int = 0

    def to_dict(self):
        return {"n_trials": self.n_trials, "channels": self.per_channel}


N2_WINDOW = (0.175, 0.225)
P3_WINDOW = (0.300, 0.500)
N2_CHANNELS = ("Fz", "FCz", "Cz")


def _component(avg, times, window, polarity, noise):
    sel = (times >= window[0] - 1e-9) & (times <= window[1] + 1e-9)
    seg = avg[sel]
    i = int(np.argmin(seg) if polarity < 0 else np.argmax(seg))
    peak = float(seg[i])
    mean = float(seg.mean())
    return {"amplitude": peak, "latency_ms": float(times[sel][i] * 1000.0),
            "mean": mean, "snr_peak": abs(peak) / noise, "snr_mean": abs(mean) / noise}


def erp_measures(erp: ErpSet, channels=("Fz", "FCz", "Cz", "Pz")) -> ErpMeasures:
    """N2/P3 peaks, window means and baseline-noise SNRs of the trial average.

    N2 is the minimum in 175-225 ms (not computed at Pz), P3 the maximum
    in 300-500 ms. Noise is the baseline peak-to-peak, floored at 0.01 uV.
    """
    acc = erp.accepted
    if acc.shape[0] == 0:
        raise EmptyDataError("no accepted trials")
    avg = acc.mean(axis=0)
    t = erp.times
    base = t <= 0
    out = ErpMeasures(n_trials=int(acc.shape[0]))
    for ch in channels:
        if ch not in erp.labels:
            raise ArgumentError(f"channel {ch} not in the epochs")
        y = avg[erp.labels.index(ch)]
        noise = max(float(y[base].max() - y[base].min()), NOISE_EPS_UV)
        rec = {"noise": noise}
        if ch in N2_CHANNELS:
            rec["N2"] = _component(y, t, N2_WINDOW, -1, noise)
        rec["P3"] = _component(y, t, P3_WINDOW, +1, noise)
        out.per_channel[ch] = rec
    return out


# -------------------------------------------------------------- statistics

@dataclass(frozen=True)
class PairedStats:
    t: float
    df: int
    p: float
    cohen_d: float


def t_sf_two_sided(t, df):
    """Two-sided tail probability of Student's t via the incomplete beta."""
    return float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))


def paired_stats(a, b) -> PairedStats:
    """Dependent-samples t-test on ``a - b`` with Cohen's d = mean/sd."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ArgumentError("paired samples must have equal length")
    n = a.size
    if n < 2:
        raise ArgumentError("need at least two pairs")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0:
        if mean == 0:
            return PairedStats(0.0, n - 1, 1.0, 0.0)
        raise DegenerateError("differences are constant and non-zero")
    t = mean / (sd / math.sqrt(n))
    return PairedStats(t, n - 1, t_sf_two_sided(t, n - 1), mean / sd)
