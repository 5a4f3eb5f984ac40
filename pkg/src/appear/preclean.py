"""Gradient artifact removal, resampling, filtering and spectral primitives.

Filters run channel by channel so that an 8-minute 5 kHz session never
needs more than one float64 channel copy at a time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .core import Marker, Recording
from .errors import (ArgumentError, InsufficientDataError,
                     InsufficientEpochsError, TriggerCountError)

PSD_FLOOR_DB = -120.0
VOLUME_LABEL = "Volume"


def derive_volume_triggers(markers, n_slices, slice_label=None):
    """Keep every ``n_slices``-th slice trigger, starting with the first.

    Parameters
    ----------
    markers : sequence of Marker
        Marker list; when ``slice_label`` is given only markers with that
        label count as slice triggers.
    n_slices : int
        Slices per volume.

    Returns
    -------
    list of Marker
        Volume triggers labelled ``"Volume"``.
    """
    if n_slices < 1:
        raise ArgumentError("n_slices must be at least 1")
    slices = [m for m in markers if slice_label is None or m.label == slice_label]
    slices.sort()
    remainder = len(slices) % n_slices
    if not slices or remainder:
        raise TriggerCountError(
            f"{len(slices)} slice triggers is not a multiple of {n_slices}",
            remainder=remainder if slices else 0)
    return [Marker(m.sample, VOLUME_LABEL) for m in slices[::n_slices]]


def _window_means(epochs, half_width):
    """Mean of the 2W+1 epochs around each epoch, window shifted at the edges."""
    n = epochs.shape[0]
    span = min(2 * half_width + 1, n)
    csum = np.zeros((n + 1,) + epochs.shape[1:])
    np.cumsum(epochs, axis=0, out=csum[1:])
    starts = np.clip(np.arange(n) - half_width, 0, n - span)
    return (csum[starts + span] - csum[starts]) / span


def _obs_fit(resid, n_pc, resid_hp=None):
    """Remove each epoch residual's projection onto the leading PCs.

    With ``resid_hp`` (the same residuals high-passed) the components are
    found and fitted on the high-passed residuals only, and the fitted
    high-frequency waveforms are what gets subtracted.
    """
    if n_pc <= 0:
        return np.zeros_like(resid)
    ref = resid if resid_hp is None else resid_hp
    gram = ref @ ref.T
    vals, vecs = np.linalg.eigh(gram)
    order = np.argsort(vals)[::-1][:n_pc]
    keep = order[vals[order] > vals.max() * 1e-12] if vals.max() > 0 else order[:0]
    if keep.size == 0:
        return np.zeros_like(resid)
    u = vecs[:, keep]
    basis_ref = ref.T @ u
    norms = np.linalg.norm(basis_ref, axis=0)
    basis_ref /= norms
    coef = ref @ basis_ref
    return coef @ basis_ref.T


def _align_shifts(data, starts, length, max_shift):
    """Integer shifts aligning every epoch to the first on the strongest channel."""
    ch = int(np.argmax(np.var(data[:, :min(data.shape[1], 10 * length)], axis=1)))
    x = data[ch].astype(np.float64)
    ref = x[starts[0]:starts[0] + length]
    shifts = []
    for s in starts:
        best, best_c = 0, -np.inf
        for d in range(-max_shift, max_shift + 1):
            a, b = s + d, s + d + length
            if a < 0 or b > x.size:
                continue
            c = float(np.dot(x[a:b], ref))
            if c > best_c:
                best, best_c = d, c
        shifts.append(best)
    return np.asarray(shifts)


def gradient_subtract(rec: Recording, vols, method="OBS", half_width=15, n_pc=4,
                      epoch_len=None, align_max_shift=0, obs_highpass_hz=70.0):
    """Subtract the scanner gradient artifact epoch by epoch.

    Each volume epoch starts at a volume trigger and lasts ``epoch_len``
    samples (default: the smallest spacing between triggers). AAS subtracts
    the mean of the ``2*half_width+1`` neighbouring epochs, with the window
    shifted inward at the session edges. OBS then removes the projection of
    each epoch residual onto the top ``n_pc`` principal components of all
    residuals of that channel. Samples outside every epoch are untouched.

    The principal components are found on AAS residuals high-passed at
    ``obs_highpass_hz`` (``None`` or 0 uses the raw residuals), so that
    neural activity, which lives below that frequency, does not leak into
    the basis.
    """
    method = method.upper()
    if method not in ("AAS", "OBS"):
        raise ArgumentError(f"unknown gradient method {method!r}")
    if half_width < 1:
        raise ArgumentError("half_width must be at least 1")
    starts = np.array(sorted(m.sample for m in vols), dtype=np.int64)
    if starts.size < 2 and epoch_len is None:
        raise InsufficientEpochsError("need at least 2 volume triggers")
    if epoch_len is None:
        epoch_len = int(np.min(np.diff(starts)))
    if epoch_len < 1:
        raise ArgumentError("volume triggers must be distinct")
    n = rec.n_samples
    if align_max_shift > 0:
        starts = starts + _align_shifts(rec.data, starts, epoch_len, align_max_shift)
    starts = starts[(starts >= 0) & (starts + epoch_len <= n)]
    if starts.size < 2:
        raise InsufficientEpochsError(f"only {starts.size} complete volume epochs")
    idx = starts[:, None] + np.arange(epoch_len)
    use_hp = method == "OBS" and n_pc > 0 and obs_highpass_hz and obs_highpass_hz < rec.fs / 2
    if use_hp:
        sos = signal.butter(4, obs_highpass_hz, btype="highpass", fs=rec.fs, output="sos")
    out = np.array(rec.data, copy=True)
    for ch in range(rec.n_channels):
        row = np.asarray(rec.data[ch], dtype=np.float64)
        epochs = row[idx]
        resid = epochs - _window_means(epochs, half_width)
        if method == "OBS":
            resid_hp = None
            if use_hp:
                # high-pass the AAS output, not the raw channel: filter edge
                # transients on a large artifact would otherwise feed the basis
                aas_row = row.copy()
                aas_row[idx] = resid
                resid_hp = signal.sosfiltfilt(sos, aas_row)[idx]
            resid -= _obs_fit(resid, n_pc, resid_hp)
        out[ch][idx] = resid
    return rec.with_data(out)


def _antialias_taps(fs, factor):
    new_fs = fs / factor
    pass_edge, stop_edge = 0.4 * new_fs, 0.5 * new_fs
    width = stop_edge - pass_edge
    order = int(np.ceil(3.3 * fs / width))
    order += order % 2
    return signal.firwin(order + 1, (pass_edge + stop_edge) / 2, window="hamming", fs=fs)


def decimate(rec: Recording, factor: int) -> Recording:
    """Anti-alias low-pass then keep every ``factor``-th sample.

    The Hamming-window FIR passes up to 0.4 of the new rate and stops at the
    new Nyquist frequency; its symmetric taps are centred, so the filter
    introduces no phase shift. Markers move to ``sample // factor``.
    """
    factor = int(factor)
    if factor < 1:
        raise ArgumentError("factor must be a positive integer")
    fs_ratio = rec.fs / factor
    if abs(fs_ratio - round(fs_ratio)) > 1e-9 * rec.fs:
        raise ArgumentError(f"fs {rec.fs} is not divisible by {factor}")
    if factor == 1:
        return rec
    taps = _antialias_taps(rec.fs, factor)
    n_out = -(-rec.n_samples // factor)
    out = np.empty((rec.n_channels, n_out))
    for ch in range(rec.n_channels):
        x = np.asarray(rec.data[ch], dtype=np.float64)
        out[ch] = signal.resample_poly(x, 1, factor, window=taps, padtype="line")
    markers = tuple(Marker(m.sample // factor, m.label) for m in rec.markers)
    return Recording(out, rec.fs / factor, rec.channels, markers, rec.kind)


def bandpass_taps(fs, lo_hz, hi_hz):
    """Hamming windowed-sinc taps with cutoffs at the band edges.

    The order is the smallest even integer at or above 3.3*fs/tw with
    tw = min(lo, 2 Hz); with ``lo_hz == 0`` the design is a low-pass.
    """
    if not (0 <= lo_hz < hi_hz < fs / 2):
        raise ArgumentError(f"invalid band ({lo_hz}, {hi_hz}) at fs {fs}")
    tw = min(lo_hz, 2.0) if lo_hz > 0 else 2.0
    order = int(np.ceil(3.3 * fs / tw - 1e-9))
    order += order % 2
    if lo_hz > 0:
        return signal.firwin(order + 1, [lo_hz, hi_hz], pass_zero=False,
                             window="hamming", fs=fs)
    return signal.firwin(order + 1, hi_hz, window="hamming", fs=fs)


def _extend(x, pad):
    """Odd extension by up to ``pad`` samples, then edge hold for the rest."""
    n = x.size
    k = min(pad, n - 1)
    left = 2 * x[0] - x[k:0:-1]
    right = 2 * x[-1] - x[-2:-k - 2:-1]
    rest = pad - k
    return np.concatenate([np.full(rest, left[0] if k else x[0]), left, x, right,
                           np.full(rest, right[-1] if k else x[-1])])


def zero_phase_fir(x, taps):
    """Forward-backward application of a symmetric FIR along the last axis."""
    kernel = np.convolve(taps, taps[::-1])
    pad = kernel.size // 2
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        ext = _extend(x, pad)
        return signal.oaconvolve(ext, kernel, mode="valid")
    return np.stack([zero_phase_fir(row, taps) for row in x])


def fir_bandpass(rec: Recording, lo_hz, hi_hz) -> Recording:
    """Zero-phase windowed-sinc band-pass (forward and backward pass)."""
    taps = bandpass_taps(rec.fs, lo_hz, hi_hz)
    out = np.empty(rec.data.shape)
    for ch in range(rec.n_channels):
        out[ch] = zero_phase_fir(rec.data[ch], taps)
    return rec.with_data(out)


def reject_centers(slice_freq, fs, extra=(), bw=1.0, max_hz=120.0):
    """Slice-frequency harmonics up to min(max_hz, Nyquist - bw) plus ``extra``."""
    top = min(max_hz, fs / 2 - bw)
    centers = []
    k = 1
    while slice_freq > 0 and k * slice_freq <= top + 1e-9:
        centers.append(k * slice_freq)
        k += 1
    for f in extra:
        if f + bw / 2 < fs / 2 and all(abs(f - c) > 1e-9 for c in centers):
            centers.append(float(f))
    return sorted(centers)


def band_reject(rec: Recording, centers_hz, bw_hz=1.0) -> Recording:
    """Zero-phase notch cascade, one second-order notch (Q = f0/bw) per centre."""
    if bw_hz <= 0:
        raise ArgumentError("bandwidth must be positive")
    sections = []
    for f0 in centers_hz:
        if not (f0 - bw_hz / 2 > 0 and f0 + bw_hz / 2 < rec.fs / 2):
            raise ArgumentError(f"notch centre {f0} Hz out of range at fs {rec.fs}")
        b, a = signal.iirnotch(f0, f0 / bw_hz, fs=rec.fs)
        sections.append(signal.tf2sos(b, a))
    if not sections:
        return rec
    sos = np.vstack(sections)
    padlen = min(int(3 * rec.fs / bw_hz), rec.n_samples - 1)
    out = np.empty(rec.data.shape)
    for ch in range(rec.n_channels):
        out[ch] = signal.sosfiltfilt(sos, np.asarray(rec.data[ch], dtype=np.float64),
                                     padtype="odd", padlen=padlen)
    return rec.with_data(out)


@dataclass(frozen=True)
class PsdEstimate:
    freqs: np.ndarray
    power_db: np.ndarray
    window_s: float
    overlap: float

    @property
    def linear(self):
        return 10.0 ** (self.power_db / 10.0)

    @property
    def resolution(self):
        return float(self.freqs[1] - self.freqs[0])


def welch_psd(x, fs, win_s=4.096, overlap=0.5):
    """Linear one-sided PSD of a 1-D or 2-D array (uV^2/Hz)."""
    nper = int(round(win_s * fs))
    x = np.asarray(x)
    if x.shape[-1] < nper or nper < 2:
        raise InsufficientDataError(
            f"{x.shape[-1]} samples shorter than a {win_s} s window at {fs} Hz")
    nover = int(round(overlap * nper))
    freqs = np.fft.rfftfreq(nper, 1.0 / fs)
    if x.ndim == 1:
        return signal.welch(x, fs, window="hann", nperseg=nper, noverlap=nover,
                            detrend="constant", scaling="density")
    p = np.empty((x.shape[0], freqs.size))
    for i, row in enumerate(x):
        _, p[i] = signal.welch(np.asarray(row, dtype=np.float64), fs, window="hann",
                               nperseg=nper, noverlap=nover, detrend="constant",
                               scaling="density")
    return freqs, p


def to_db(p, floor_db=PSD_FLOOR_DB):
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(np.asarray(p, dtype=np.float64))
    return np.maximum(db, floor_db)


def compute_psd(rec: Recording, win_s=4.096, overlap=0.5, floor_db=PSD_FLOOR_DB) -> PsdEstimate:
    """Hann-window averaged periodograms per channel, in dB re 1 uV^2/Hz.

    A 4.096 s window at 250 S/s gives 1024-sample segments and a 0.244 Hz
    grid. Power below ``floor_db`` is clamped so diagnostics stay finite.
    """
    freqs, p = welch_psd(rec.data, rec.fs, win_s, overlap)
    return PsdEstimate(freqs, to_db(p, floor_db), float(win_s), float(overlap))


def band_mask(freqs, band):
    lo, hi = band
    mask = (freqs >= lo) & (freqs < hi)
    if not mask.any():
        raise ArgumentError(f"no frequency bins in [{lo}, {hi})")
    return mask


def band_average(psd: PsdEstimate, band) -> np.ndarray:
    """Mean of the dB values over bins with ``lo <= f < hi``, per channel."""
    mask = band_mask(psd.freqs, band)
    return psd.power_db[..., mask].mean(axis=-1)
