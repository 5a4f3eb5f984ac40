"""End-to-end artifact reduction for one session."""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import cardiac, classify, ica, preclean
from .config import PipelineConfig
from .core import IntervalSet, Recording, excise_intervals
from .errors import (AppearError, InsufficientEventsError, NoCandidateError,
                     NoPeaksError, TriggerCountError, UnreliableError)
from .io import RunReport

log = logging.getLogger(__name__)

ARTIFACT_LABELS = {classify.Label.BCG, classify.Label.BLINK, classify.Label.SACCADE,
                   classify.Label.SINGLE_CHANNEL, classify.Label.MUSCLE}


@dataclass(eq=False)
class PipelineResult:
    corrected: Recording
    report: RunReport
    bad: IntervalSet
    verdicts: list
    decomposition: ica.IcaDecomposition
    intermediates: dict = field(default_factory=dict)


class _Clock:
    def __init__(self):
        self.times = {}

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.times[name] = self.times.get(name, 0.0) + time.perf_counter() - t0


def _cardiac_ica(scalp: Recording, cfg: PipelineConfig, notes):
    """Heartbeats from a preliminary decomposition of the first minutes."""
    n = min(scalp.n_samples, int(cfg.cardiac_ica_max_seconds * scalp.fs))
    head = scalp.with_data(np.asarray(scalp.data[:, :n]), markers=())
    decomp = ica.infomax_decompose(head, seed=cfg.seed, block=cfg.ica_block,
                                   max_sweeps=cfg.ica_max_sweeps, tol=cfg.ica_tol,
                                   min_samples_factor=cfg.ica_min_samples_factor)
    cands = classify.bcg_candidates(head, decomp, cfg.classify, cfg.psd_window_s,
                                    cfg.psd_overlap)
    notes.append(f"cardiac ICA candidates: {cands}")
    return cardiac.detect_r_peaks_ica(decomp, cands, x_full=scalp)


def _choose_events(ecg_ev, ica_ev, oxi_ev, notes):
    """Apply the oximetry-agreement rule, falling back to whatever exists."""
    if ecg_ev is not None and ica_ev is not None and oxi_ev is not None:
        sel = cardiac.select_cardiac_source(ecg_ev.mean_hr_bpm, ica_ev.mean_hr_bpm,
                                            oxi_ev.mean_hr_bpm)
        return (ica_ev if sel.chosen == cardiac.Method.ICA else ecg_ev), sel.chosen.value
    if ecg_ev is not None and ica_ev is None:
        notes.append("ICA heartbeat detection unavailable; using ECG")
        return ecg_ev, "ECG"
    if ica_ev is not None and ecg_ev is None:
        notes.append("ECG heartbeat detection unavailable; using ICA")
        return ica_ev, "ICA"
    if ecg_ev is not None:
        notes.append("no oximetry reference; using ECG")
        return ecg_ev, "ECG"
    raise InsufficientEventsError("no usable heartbeat detection")


def run_pipeline(raw: Recording, oximetry: Recording | None = None,
                 cfg: PipelineConfig | None = None, keep_intermediates=False) -> PipelineResult:
    """Run every stage on a raw acquisition-rate recording.

    Order: volume triggers, gradient removal, decimation, band-pass,
    band-reject, heartbeat detection and selection, BCG subtraction,
    bad-interval screening, ICA on the good data, component labelling,
    full-session projection and reconstruction without artifact components.
    """
    cfg = cfg or PipelineConfig()
    clock = _Clock()
    notes = []
    extra = {"seed": cfg.seed, "band": list(cfg.band)}
    inter = {}
    t_start = time.perf_counter()

    with clock.stage("volume_triggers"):
        try:
            vols = preclean.derive_volume_triggers(raw.markers, cfg.n_slices_per_volume,
                                                   cfg.slice_marker_label)
        except TriggerCountError as exc:
            if raw.markers_labelled(cfg.slice_marker_label):
                raise
            notes.append("no slice triggers; gradient removal skipped")
            vols = []
        extra["n_volumes"] = len(vols)

    x = raw
    if vols:
        with clock.stage("gradient"):
            x = preclean.gradient_subtract(
                raw, vols, cfg.gradient_method, cfg.gradient_window, cfg.gradient_n_pc,
                epoch_len=int(round(cfg.tr_seconds * raw.fs)),
                align_max_shift=cfg.gradient_align_max_shift,
                obs_highpass_hz=cfg.gradient_obs_highpass_hz)
        if keep_intermediates:
            inter["gradient"] = x

    with clock.stage("decimate"):
        factor = int(round(x.fs / cfg.target_fs))
        x = preclean.decimate(x, factor)
    with clock.stage("bandpass"):
        x = preclean.fir_bandpass(x, *cfg.band)
    with clock.stage("band_reject"):
        centers = preclean.reject_centers(cfg.effective_slice_freq, x.fs,
                                          (cfg.vibration_freq_hz, cfg.line_freq_hz),
                                          cfg.reject_bw_hz, cfg.harmonic_max_hz)
        x = preclean.band_reject(x, centers, cfg.reject_bw_hz)
        extra["reject_centers_hz"] = centers
    if keep_intermediates:
        inter["filtered"] = x

    scalp = x.scalp()
    hr = {}
    with clock.stage("qrs"):
        ecg_ev = ica_ev = oxi_ev = None
        if any(c.is_ecg for c in x.channels):
            try:
                ecg_ev = cardiac.detect_r_peaks_ecg(x.ecg())
                hr["ECG"] = ecg_ev.mean_hr_bpm
            except NoPeaksError as exc:
                notes.append(f"ECG detection failed: {exc}")
        try:
            ica_ev = _cardiac_ica(scalp, cfg, notes)
            hr["ICA"] = ica_ev.mean_hr_bpm
        except (NoCandidateError, UnreliableError, NoPeaksError) as exc:
            notes.append(f"ICA detection failed: {exc}")
        if oximetry is not None:
            try:
                oxi_ev = cardiac.detect_pulse_peaks(oximetry)
                hr["Oximetry"] = oxi_ev.mean_hr_bpm
            except NoPeaksError as exc:
                notes.append(f"oximetry detection failed: {exc}")
        events, method = _choose_events(ecg_ev, ica_ev, oxi_ev, notes)
        notes.append("ICA heartbeat detection uses a fixed four-scale smoothing "
                     "variant of multi-scale peak detection")
    with clock.stage("bcg"):
        scalp = cardiac.bcg_aas(scalp, events, cfg.bcg_n_template)
    if keep_intermediates:
        inter["bcg"] = scalp
    with clock.stage("bad_intervals"):
        bad = cardiac.detect_bad_intervals(
            scalp, cfg.bad_window_s, cfg.bad_step_s, cfg.bad_band, cfg.bad_power_db,
            cfg.bad_abs_uv, cfg.bad_pad_s, cfg.bad_max_fraction)
    with clock.stage("ica"):
        short, imap = excise_intervals(scalp, bad)
        decomp = ica.infomax_decompose(short, seed=cfg.seed, block=cfg.ica_block,
                                       max_sweeps=cfg.ica_max_sweeps, tol=cfg.ica_tol,
                                       min_samples_factor=cfg.ica_min_samples_factor,
                                       index_map=imap)
        if not decomp.converged:
            notes.append(f"ICA stopped after {decomp.iterations} sweeps without converging")
    with clock.stage("classify"):
        verdicts = classify.classify_ics(short, decomp, decomp.S_short, cfg.classify,
                                         cfg.psd_window_s, cfg.psd_overlap)
    with clock.stage("reconstruct"):
        sources = ica.project_full(decomp, scalp)
        removed = [v.index for v in verdicts if v.label in ARTIFACT_LABELS]
        corrected = ica.reconstruct_without(decomp, sources, removed)
    total = time.perf_counter() - t_start

    extra.update({"removed_ics": removed, "ica_iterations": decomp.iterations,
                  "ica_converged": decomp.converged, "fs_out": corrected.fs,
                  "n_peaks": int(events.peaks.size)})
    records = []
    for v in verdicts:
        rec = v.to_dict()
        rec["variance"] = float(np.sum(decomp.A[:, v.index] ** 2)
                                * np.var(decomp.S_short[v.index]))
        records.append(rec)
    report = RunReport(qrs_method=method, heart_rates=hr,
                       bad_intervals=[list(iv) for iv in bad], ic_records=records,
                       stage_times=dict(clock.times), total_seconds=total,
                       config=cfg.to_dict(), notes=notes, extra=extra)
    return PipelineResult(corrected, report, bad, verdicts, decomp, inter)
