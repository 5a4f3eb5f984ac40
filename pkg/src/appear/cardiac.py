"""Heartbeat detection, cardiac source selection, BCG subtraction and
bad-interval screening."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

from .core import IntervalSet, Recording
from .errors import (ArgumentError, ExcessiveArtifactError,
                     InsufficientEventsError, NoCandidateError, NoPeaksError,
                     UnreliableError)

RR_RANGE_S = (0.25, 3.0)


class Method(str, enum.Enum):
    ECG = "ECG"
    ICA = "ICA"
    OXIMETRY = "Oximetry"


def mean_hr(peaks, fs, rr_range=RR_RANGE_S):
    """60 / mean RR, using only RR intervals inside ``rr_range`` seconds."""
    rr = np.diff(np.asarray(peaks, dtype=np.float64)) / fs
    rr = rr[(rr >= rr_range[0]) & (rr <= rr_range[1])]
    if rr.size == 0:
        return float("nan")
    return 60.0 / float(rr.mean())


@dataclass(frozen=True)
class CardiacEvents:
    peaks: np.ndarray
    fs: float
    mean_hr_bpm: float
    method: Method

    @classmethod
    def from_peaks(cls, peaks, fs, method):
        peaks = np.unique(np.asarray(peaks, dtype=np.int64))
        if peaks.size < 2:
            raise NoPeaksError(f"only {peaks.size} peaks found")
        hr = mean_hr(peaks, fs)
        if not np.isfinite(hr):
            raise NoPeaksError("no RR interval inside the plausible range")
        return cls(peaks, float(fs), hr, Method(method))

    def rr_cv(self):
        rr = np.diff(self.peaks) / self.fs
        return float(rr.std() / rr.mean())


def _moving_average(x, n):
    n = max(int(n), 1)
    return ndimage.uniform_filter1d(x, n, mode="nearest")


def detect_r_peaks_ecg(ecg: Recording) -> CardiacEvents:
    """Derivative/square/integrate QRS detector with adaptive thresholds.

    The ECG is band-passed 5-15 Hz, differentiated, squared and integrated
    over a centred 150 ms window. Local maxima of the integrated signal are
    classified as QRS or noise against running signal and noise levels
    (threshold = noise + 0.25 * (signal - noise)), with a 300 ms refractory
    period and a search-back at half threshold when no beat is found for
    1.66 mean RR intervals. Each detection is moved to the largest deviation
    of the raw ECG from its local median within +/-50 ms.
    """
    if ecg.n_channels != 1:
        raise ArgumentError("ECG detection needs a single channel")
    fs = ecg.fs
    x = np.asarray(ecg.data[0], dtype=np.float64)
    if x.size < int(2 * fs) or not np.any(np.diff(x)):
        raise NoPeaksError("ECG is too short or flat")
    sos = signal.butter(3, [5.0, 15.0], btype="bandpass", fs=fs, output="sos")
    filt = signal.sosfiltfilt(sos, x)
    energy = np.gradient(filt) ** 2
    mwi = _moving_average(energy, round(0.150 * fs))
    if mwi.max() <= 0:
        raise NoPeaksError("no QRS energy")
    refractory = int(round(0.300 * fs))
    cand, _ = signal.find_peaks(mwi, distance=max(1, int(round(0.2 * fs))))
    if cand.size == 0:
        raise NoPeaksError("no candidate peaks")
    head = mwi[: int(2 * fs)]
    spk = 0.25 * head.max()
    npk = 0.5 * head.mean()
    qrs = []
    rr_avg = None
    for c in cand:
        thr = npk + 0.25 * (spk - npk)
        v = mwi[c]
        if qrs and c - qrs[-1] < refractory:
            if v > mwi[qrs[-1]] and v > thr:
                qrs[-1] = c
            continue
        if qrs and rr_avg is not None and c - qrs[-1] > 1.66 * rr_avg:
            gap = cand[(cand > qrs[-1] + refractory) & (cand < c - refractory)]
            if gap.size:
                best = gap[np.argmax(mwi[gap])]
                if mwi[best] > 0.5 * thr:
                    qrs.append(int(best))
                    spk = 0.25 * mwi[best] + 0.75 * spk
        if v > thr:
            qrs.append(int(c))
            spk = 0.125 * v + 0.875 * spk
            if len(qrs) >= 2:
                recent = np.diff(qrs[-9:])
                rr_avg = float(recent.mean())
        else:
            npk = 0.125 * v + 0.875 * npk
    if len(qrs) < 2:
        raise NoPeaksError(f"only {len(qrs)} QRS complexes detected")
    half = int(round(0.050 * fs))
    refined = []
    for q in qrs:
        a, b = max(0, q - half), min(x.size, q + half + 1)
        ctx = x[max(0, q - 4 * half):min(x.size, q + 4 * half + 1)]
        dev = np.abs(x[a:b] - np.median(ctx))
        refined.append(a + int(np.argmax(dev)))
    return CardiacEvents.from_peaks(refined, fs, Method.ECG)


def detect_pulse_peaks(oxi: Recording, smooth_s=0.25) -> CardiacEvents:
    """Pulse-wave maxima with prominence >= 0.3 * IQR and spacing >= 0.25 s.

    The waveform is first smoothed with a ``smooth_s`` moving average.
    """
    x = np.asarray(oxi.data[0], dtype=np.float64)
    fs = oxi.fs
    if smooth_s:
        x = _moving_average(x, round(smooth_s * fs))
    q75, q25 = np.percentile(x, [75, 25])
    iqr = q75 - q25
    if iqr <= 0:
        raise NoPeaksError("pulse waveform has no spread")
    peaks, _ = signal.find_peaks(x, prominence=0.3 * iqr,
                                 distance=max(1, int(math.ceil(0.25 * fs))))
    return CardiacEvents.from_peaks(peaks, fs, Method.OXIMETRY)


ICA_SCALES_S = (0.05, 0.1, 0.2, 0.4)


def pulse_train_peaks(activation, fs, scales=ICA_SCALES_S, max_cv=0.5,
                      prominence_fraction=0.35):
    """Peaks of a smoothed |activation| at the scale with the most regular RR.

    Returns ``(peaks, scale, cvs)``; raises :class:`UnreliableError` when
    the coefficient of variation exceeds ``max_cv`` at every scale.
    """
    a = np.abs(np.asarray(activation, dtype=np.float64))
    cvs = {}
    best = None
    for w in scales:
        sm = _moving_average(a, round(w * fs))
        hi, mid = np.percentile(sm, [99, 50])
        if hi <= mid:
            cvs[w] = float("inf")
            continue
        pk, _ = signal.find_peaks(sm, prominence=prominence_fraction * (hi - mid),
                                  distance=max(1, int(round(RR_RANGE_S[0] * fs))))
        if pk.size < 3:
            cvs[w] = float("inf")
            continue
        rr = np.diff(pk)
        cv = float(rr.std() / rr.mean())
        cvs[w] = cv
        if best is None or cv < best[2]:
            best = (pk, w, cv)
    if best is None or best[2] > max_cv:
        raise UnreliableError(f"no regular pulse train at any scale (CV {cvs})")
    return best[0], best[1], cvs


def detect_r_peaks_ica(decomp, bcg_candidates, x_full: Recording | None = None,
                       fs=None) -> CardiacEvents:
    """Heartbeats from the strongest BCG-candidate component.

    Strength is ``||A[:, j]||^2 * var(S_j)``. With ``x_full`` the candidate's
    activation is computed over the whole session; otherwise the
    decomposition's own sources are used.
    """
    cands = sorted(set(int(c) for c in bcg_candidates))
    if not cands:
        raise NoCandidateError("no BCG candidate component")
    strength = [np.sum(decomp.A[:, j] ** 2) * np.var(decomp.S_short[j]) for j in cands]
    j = cands[int(np.argmax(strength))]
    if x_full is not None:
        act = decomp.unmix[j] @ np.asarray(x_full.data, dtype=np.float64)
        fs = x_full.fs
    else:
        act = decomp.S_short[j]
        fs = decomp.fs if fs is None else fs
    peaks, _, _ = pulse_train_peaks(act, fs)
    return CardiacEvents.from_peaks(peaks, fs, Method.ICA)


@dataclass(frozen=True)
class HrSelection:
    hr_ecg: float
    hr_ica: float
    hr_oxi: float
    chosen: Method


def select_cardiac_source(hr_ecg, hr_ica, hr_oxi) -> HrSelection:
    """Pick the method whose mean rate is closest to oximetry; ties go to ICA."""
    vals = (hr_ecg, hr_ica, hr_oxi)
    if any(v is None or not np.isfinite(v) or v <= 0 for v in vals):
        raise ArgumentError(f"heart rates must be finite and positive, got {vals}")
    d_ecg = abs(hr_ecg - hr_oxi)
    d_ica = abs(hr_ica - hr_oxi)
    chosen = Method.ICA if d_ica <= d_ecg else Method.ECG
    return HrSelection(float(hr_ecg), float(hr_ica), float(hr_oxi), chosen)


def bcg_epoch_bounds(peaks):
    rr_med = float(np.median(np.diff(peaks)))
    return int(round(0.3 * rr_med)), int(round(0.7 * rr_med))


def bcg_aas(rec: Recording, events: CardiacEvents, n_template=21) -> Recording:
    """Subtract a running-average BCG template from every beat epoch.

    Epochs span ``[peak - 0.3*RRmed, peak + 0.7*RRmed)``; only epochs fully
    inside the data are used. Beat k's template is the mean of the
    ``n_template`` preceding epochs; the first beats, which lack that many,
    use the first ``n_template`` epochs of the session. Templates are built
    from the uncorrected data, and where epochs overlap the later beat's
    correction is kept. Samples outside every epoch are returned untouched.
    """
    peaks = np.asarray(events.peaks, dtype=np.int64)
    if peaks.size < 2:
        raise InsufficientEventsError("BCG subtraction needs at least 2 beats")
    if n_template < 1:
        raise ArgumentError("n_template must be positive")
    pre, post = bcg_epoch_bounds(peaks)
    starts = peaks - pre
    keep = (starts >= 0) & (peaks + post <= rec.n_samples)
    starts = starts[keep]
    n = starts.size
    if n < 2:
        raise InsufficientEventsError(f"only {n} complete beat epochs")
    length = pre + post
    idx = starts[:, None] + np.arange(length)
    k = min(n_template, n)
    lo = np.maximum(np.arange(n) - n_template, 0)
    lo[np.arange(n) < n_template] = 0
    hi = np.where(np.arange(n) < n_template, k, np.arange(n))
    out = np.array(rec.data, copy=True)
    for ch in range(rec.n_channels):
        ep = np.asarray(rec.data[ch], dtype=np.float64)[idx]
        csum = np.zeros((n + 1, length))
        np.cumsum(ep, axis=0, out=csum[1:])
        templates = (csum[hi] - csum[lo]) / (hi - lo)[:, None]
        corrected = ep - templates
        row = out[ch]
        for i in range(n):
            row[idx[i]] = corrected[i]
    return rec.with_data(out)


def detect_bad_intervals(rec: Recording, window_s=1.0, step_s=0.5, band=(20.0, 40.0),
                         power_db=10.0, abs_uv=250.0, pad_s=0.25,
                         max_fraction=0.5) -> IntervalSet:
    """Flag windows with excess 20-40 Hz power or extreme amplitude.

    A window is flagged when, on any channel, its band power is at least
    ``power_db`` above that channel's median window power, or when any
    sample exceeds ``abs_uv`` in magnitude. Flagged windows are merged and
    padded by ``pad_s`` on each side.
    """
    fs = rec.fs
    n = rec.n_samples
    win = int(round(window_s * fs))
    step = int(round(step_s * fs))
    if win < 1 or step < 1:
        raise ArgumentError("window and step must span at least one sample")
    if n < win:
        starts = np.array([0])
        win = n
    else:
        starts = np.arange(0, n - win + 1, step)
        if starts[-1] + win < n:
            starts = np.append(starts, n - win)
    sos = signal.butter(4, band, btype="bandpass", fs=fs, output="sos")
    flagged = np.zeros(starts.size, dtype=bool)
    for ch in range(rec.n_channels):
        x = np.asarray(rec.data[ch], dtype=np.float64)
        bp = signal.sosfiltfilt(sos, x) if n > 27 else x
        csum = np.concatenate([[0.0], np.cumsum(bp * bp)])
        pw = (csum[starts + win] - csum[starts]) / win
        with np.errstate(divide="ignore"):
            db = 10.0 * np.log10(np.maximum(pw, 1e-30))
        flagged |= db >= np.median(db) + power_db
        absx = np.abs(x)
        big = absx > abs_uv
        if big.any():
            cbig = np.concatenate([[0], np.cumsum(big)])
            flagged |= (cbig[starts + win] - cbig[starts]) > 0
    pad = int(round(pad_s * fs))
    ivs = [(max(0, s - pad), min(n, s + win + pad)) for s in starts[flagged]]
    bad = IntervalSet.merged(ivs)
    if bad.total > max_fraction * n:
        raise ExcessiveArtifactError(
            f"{100.0 * bad.total / n:.1f}% of the session is flagged as bad")
    return bad
