"""Command line: ``appear preprocess | synth | evaluate``.

Exit codes: 0 success, 2 input problems (unreadable or malformed files,
bad configuration or arguments), 3 pipeline failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import evaluate, io, preclean, synth
from .config import load_config
from .errors import AppearError, ArgumentError, InputError

log = logging.getLogger("appear")

EXIT_OK, EXIT_INPUT, EXIT_PIPELINE = 0, 2, 3


def _fail(code, exc):
    print(f"appear: error: {exc}", file=sys.stderr)
    return code


def _config(args):
    cfg = load_config(args.config)
    if getattr(args, "mode", None):
        cfg.mode = args.mode
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    cfg.validate()
    return cfg


# ------------------------------------------------------------- preprocess

def _default_oximetry(vhdr: Path):
    cand = vhdr.with_name(f"{vhdr.stem}_oximetry.txt")
    return cand if cand.exists() else None


def _save_intermediates(inter, out_dir, stem):
    for name, rec in inter.items():
        io.write_brainvision(rec, out_dir / f"{stem}_intermediates", name)


def preprocess_one(vhdr, oximetry, args) -> int:
    """Run the whole pipeline on one header file; returns the exit code."""
    from .pipeline import run_pipeline

    vhdr = Path(vhdr)
    out_dir = Path(args.out)
    try:
        cfg = _config(args)
        raw = io.read_brainvision(vhdr)
        oxi_path = oximetry or _default_oximetry(vhdr)
        oxi = io.read_oximetry(oxi_path, fs=cfg.oximetry_fs) if oxi_path else None
    except (InputError, ArgumentError, OSError) as exc:
        return _fail(EXIT_INPUT, exc)
    try:
        res = run_pipeline(raw, oxi, cfg, keep_intermediates=args.keep_intermediates)
    except AppearError as exc:
        return _fail(EXIT_PIPELINE, exc)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        io.write_brainvision(res.corrected, out_dir, f"{vhdr.stem}_corrected")
        res.report.extra["input"] = str(vhdr)
        res.report.extra["oximetry"] = str(oxi_path) if oxi_path else None
        io.write_report(res.report, out_dir / f"{vhdr.stem}_report.json")
        if args.keep_intermediates:
            _save_intermediates(res.intermediates, out_dir, vhdr.stem)
    except (InputError, OSError) as exc:
        return _fail(EXIT_INPUT, exc)
    log.info("%s: %s heartbeats, removed ICs %s, %.1f s", vhdr.name,
             res.report.qrs_method, res.report.extra["removed_ics"],
             res.report.total_seconds)
    return EXIT_OK


def cmd_preprocess(args) -> int:
    oxis = args.oximetry or []
    if oxis and len(oxis) != len(args.vhdr):
        return _fail(EXIT_INPUT, "give one --oximetry file per --vhdr file")
    pairs = list(zip(args.vhdr, oxis or [None] * len(args.vhdr)))
    if args.jobs <= 1 or len(pairs) == 1:
        codes = [preprocess_one(v, o, args) for v, o in pairs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(preprocess_one, [v for v, _ in pairs],
                                  [o for _, o in pairs], [args] * len(pairs)))
    return max(codes)


# ------------------------------------------------------------------ synth

def cmd_synth(args) -> int:
    try:
        spec = synth.load_spec(args.spec) if args.spec else synth.SynthSpec()
        changes = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.duration is not None:
            changes["duration_s"] = args.duration
        if args.mode:
            changes["mode"] = args.mode
        spec = dataclasses.replace(spec, **changes)
        spec.validate()
    except (AppearError, OSError, ValueError, TypeError) as exc:
        return _fail(EXIT_INPUT, exc)
    session = synth.generate(spec)
    try:
        paths = synth.write_session(session, args.out, truth=not args.no_truth, name=args.name)
    except (InputError, OSError) as exc:
        return _fail(EXIT_INPUT, exc)
    log.info("wrote %s", ", ".join(sorted(paths.values())))
    return EXIT_OK


# --------------------------------------------------------------- evaluate

def _segment(text):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("segment must be START,END in seconds") from None
    if not 0 <= lo < hi:
        raise argparse.ArgumentTypeError("segment needs 0 <= START < END")
    return lo, hi


def _write_scalogram(rec, path, segment):
    x = evaluate.channel_average(rec)
    a, b = 0, rec.n_samples
    if segment:
        a, b = int(segment[0] * rec.fs), min(rec.n_samples, int(segment[1] * rec.fs))
        if b <= a:
            raise ArgumentError("segment lies outside the recording")
    sc = evaluate.cwt_morse(np.asarray(x.data[0, a:b]), rec.fs)
    table = np.column_stack([sc.freqs, sc.magnitude])
    header = "freq_hz," + ",".join(f"{a / rec.fs + t:.4f}" for t in sc.times)
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.6g")


def _match_rate(rec, fs):
    """Decimate a raw-rate truth recording to the corrected data's rate."""
    if rec.fs == fs:
        return rec
    factor = rec.fs / fs
    if factor < 1 or abs(factor - round(factor)) > 1e-9:
        raise ArgumentError(f"cannot bring {rec.fs} Hz truth to {fs} Hz")
    return preclean.decimate(rec, int(round(factor)))


def _erp(rec, cfg):
    stims = rec.markers_labelled(cfg.stim_marker_label)
    erp = evaluate.epoch_erp(rec, stims)
    erp = evaluate.reject_trials(evaluate.erp_lowpass(evaluate.baseline_correct(erp)))
    chans = [c for c in ("Fz", "FCz", "Cz", "Pz") if c in erp.labels]
    doc = evaluate.erp_measures(erp, chans).to_dict()
    doc["n_rejected"] = int(erp.rejected.sum())
    return doc


def cmd_evaluate(args) -> int:
    try:
        cfg = _config(args)
        rec = io.read_brainvision(args.vhdr).scalp()
        doc = {"input": str(args.vhdr),
               "bands_db": evaluate.band_table(rec, win_s=cfg.psd_window_s,
                                               overlap=cfg.psd_overlap)}
        if cfg.mode == "task":
            doc["erp"] = _erp(rec, cfg)
        if args.truth:
            truth = _match_rate(io.read_brainvision(args.truth).scalp(), rec.fs)
            doc["recovery"] = synth.score_recovery(rec, truth, band=cfg.band)
        if args.compare:
            other = io.read_brainvision(args.compare).scalp()
            if other.labels != rec.labels:
                raise ArgumentError("compared recordings have different channels")
            other_bands = evaluate.band_table(other, win_s=cfg.psd_window_s,
                                              overlap=cfg.psd_overlap)
            doc["paired_stats"] = {
                name: dataclasses.asdict(evaluate.paired_stats(doc["bands_db"][name],
                                                               other_bands[name]))
                for name in doc["bands_db"]}
        if args.scalogram:
            _write_scalogram(rec, args.scalogram, args.segment)
            doc["scalogram"] = str(args.scalogram)
        out = Path(args.out)
        if out.suffix.lower() != ".json":
            out.mkdir(parents=True, exist_ok=True)
            out = out / f"{Path(args.vhdr).stem}_evaluation.json"
        io.write_json(doc, out)
    except (AppearError, OSError) as exc:
        return _fail(EXIT_INPUT, exc)
    return EXIT_OK


# ----------------------------------------------------------------- parser

def build_parser():
    parser = argparse.ArgumentParser(prog="appear",
                                     description="EEG-fMRI artifact reduction pipeline")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="correct one or more raw sessions")
    p.add_argument("--vhdr", nargs="+", required=True, help="BrainVision header file(s)")
    p.add_argument("--oximetry", nargs="+",
                   help="pulse files, one per header (default: <stem>_oximetry.txt if present)")
    p.add_argument("--mode", choices=("rest", "task"))
    p.add_argument("--config", help="key=value config file (default: $APPEAR_CONFIG)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--keep-intermediates", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("synth", help="write a synthetic session with ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--spec", help="JSON file with generator settings")
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float, help="seconds")
    p.add_argument("--mode", choices=("rest", "task"))
    p.add_argument("--name", default="session")
    p.add_argument("--no-truth", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("evaluate", help="spectra, ERPs and recovery metrics")
    p.add_argument("--vhdr", required=True, help="corrected recording")
    p.add_argument("--truth", help="true neural recording for recovery metrics")
    p.add_argument("--compare", help="second corrected recording for paired statistics")
    p.add_argument("--mode", choices=("rest", "task"))
    p.add_argument("--config")
    p.add_argument("--out", required=True, help="JSON file or output directory")
    p.add_argument("--scalogram", help="CSV path for the channel-average scalogram")
    p.add_argument("--segment", type=_segment, help="START,END seconds for the scalogram")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
