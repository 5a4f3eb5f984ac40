"""BrainVision triplets, oximetry text files and JSON run reports."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import ChannelInfo, Kind, Marker, Recording
from .errors import EmptyDataError, FormatError, IoError, ParseError

REPORT_SCHEMA_VERSION = 1

_FORMATS = {"INT_16": np.dtype("<i2"), "IEEE_FLOAT_32": np.dtype("<f4")}
_UNIT_SCALE = {"µv": 1.0, "μv": 1.0, "uv": 1.0, "": 1.0, "mv": 1e3, "v": 1e6, "nv": 1e-3}


@dataclass
class BrainVisionHeader:
    n_channels: int
    sampling_interval_us: float
    binary_format: str
    resolutions: list
    labels: list
    data_file: str
    marker_file: str | None
    units: list = field(default_factory=list)

    @property
    def fs(self):
        return 1e6 / self.sampling_interval_us


def _sections(text):
    """Parse INI-like BrainVision text into {section: {key: value}}."""
    out = {}
    section = None
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            out.setdefault(section, {})
            continue
        if section is None or section == "Comment" or "=" not in line:
            continue
        key, _, value = line.partition("=")
        out[section][key.strip()] = value.strip()
    return out


def _read_text(path):
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    for enc in ("utf-8", "latin-1"):
        try:
            return raw.decode(enc)
        except UnicodeDecodeError:
            continue
    raise ParseError(f"undecodable text in {path}")


def read_header(header_path) -> BrainVisionHeader:
    text = _read_text(header_path)
    first = text.lstrip("﻿").splitlines()[0] if text.strip() else ""
    if "Brain Vision" not in first and "BrainVision" not in first:
        raise ParseError(f"{header_path} is not a BrainVision header")
    sec = _sections(text)
    try:
        common = sec["Common Infos"]
        n = int(common["NumberOfChannels"])
        interval = float(common["SamplingInterval"])
        data_file = common["DataFile"]
        marker_file = common.get("MarkerFile")
        orientation = common.get("DataOrientation", "MULTIPLEXED").upper()
        fmt = sec.get("Binary Infos", {}).get("BinaryFormat", "INT_16").upper()
        chans = sec["Channel Infos"]
    except (KeyError, ValueError) as exc:
        raise ParseError(f"malformed header {header_path}: {exc}") from exc
    if orientation != "MULTIPLEXED":
        raise FormatError(f"unsupported data orientation {orientation}")
    if fmt not in _FORMATS:
        raise FormatError(f"unsupported binary format {fmt}")
    if interval <= 0:
        raise ParseError("sampling interval must be positive")
    labels, resolutions, units = [], [], []
    for i in range(1, n + 1):
        entry = chans.get(f"Ch{i}")
        if entry is None:
            raise FormatError(f"header declares {n} channels but Ch{i} is missing")
        parts = entry.split(",")
        labels.append(parts[0].replace("\\1", ","))
        try:
            res = float(parts[2]) if len(parts) > 2 and parts[2] else 1.0
        except ValueError as exc:
            raise ParseError(f"bad resolution in Ch{i}={entry}") from exc
        if res <= 0:
            raise ParseError(f"non-positive resolution in Ch{i}")
        unit = parts[3].strip().lower() if len(parts) > 3 else ""
        if unit not in _UNIT_SCALE:
            raise FormatError(f"unsupported unit {parts[3]!r} in Ch{i}")
        resolutions.append(res)
        units.append(unit)
    extra = [k for k in chans if k.startswith("Ch") and k[2:].isdigit() and int(k[2:]) > n]
    if extra:
        raise FormatError(f"header declares {n} channels but lists {n + len(extra)}")
    return BrainVisionHeader(n, interval, fmt, resolutions, labels, data_file,
                             marker_file, units)


def read_markers(marker_path):
    text = _read_text(marker_path)
    sec = _sections(text)
    markers = []
    for key, value in sec.get("Marker Infos", {}).items():
        if not key.startswith("Mk"):
            continue
        parts = value.split(",")
        if len(parts) < 3:
            raise ParseError(f"malformed marker line {key}={value}")
        mtype, label = parts[0], parts[1].replace("\\1", ",")
        if mtype == "New Segment":
            continue
        try:
            pos = int(parts[2]) - 1
        except ValueError as exc:
            raise ParseError(f"bad marker position in {key}={value}") from exc
        markers.append(Marker(pos, label))
    return markers


def read_brainvision(header_path) -> Recording:
    """Read a header/data/marker triplet into a Recording in microvolts.

    The returned data are float32; int16 files are scaled by their
    per-channel resolution.
    """
    header_path = Path(header_path)
    hdr = read_header(header_path)
    base = header_path.parent
    data_path = base / hdr.data_file
    dtype = _FORMATS[hdr.binary_format]
    try:
        raw = np.fromfile(data_path, dtype=dtype)
    except OSError as exc:
        raise IoError(f"cannot read data file {data_path}: {exc}") from exc
    if raw.size % hdr.n_channels:
        raise FormatError(
            f"data file holds {raw.size} values, not a multiple of {hdr.n_channels} channels")
    counts = raw.reshape(-1, hdr.n_channels).T
    scale = np.array([r * _UNIT_SCALE[u] for r, u in zip(hdr.resolutions, hdr.units)])
    if dtype == np.dtype("<f4") and np.all(scale == 1.0):
        data = np.ascontiguousarray(counts)
    else:
        data = np.empty(counts.shape, dtype=np.float32)
        for i in range(hdr.n_channels):
            data[i] = counts[i] * scale[i]
    del raw, counts
    markers = []
    if hdr.marker_file:
        mpath = base / hdr.marker_file
        if not mpath.exists():
            raise IoError(f"marker file {mpath} not found")
        markers = read_markers(mpath)
    channels = tuple(ChannelInfo.from_label(lab) for lab in hdr.labels)
    n = data.shape[1]
    bad = [m for m in markers if not 0 <= m.sample < n]
    if bad:
        raise FormatError(f"{len(bad)} markers lie outside the {n}-sample recording")
    return Recording(data, hdr.fs, channels, tuple(markers), Kind.EEG)


def _marker_type(label):
    if label.startswith("R"):
        return "Response"
    if label.startswith("S"):
        return "Stimulus"
    return "Comment"


def write_brainvision(rec: Recording, out_dir, name="recording", binary_format="IEEE_FLOAT_32",
                      resolution=None):
    """Write ``rec`` as ``name.vhdr``/``name.eeg``/``name.vmrk`` under ``out_dir``.

    ``IEEE_FLOAT_32`` stores microvolts directly (resolution 1). ``INT_16``
    quantises with ``resolution`` uV per count (default 0.1) and raises
    :class:`FormatError` if any value would overflow.
    """
    binary_format = binary_format.upper()
    if binary_format not in _FORMATS:
        raise FormatError(f"unsupported binary format {binary_format}")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out_dir}: {exc}") from exc
    vhdr, eeg, vmrk = (out_dir / f"{name}.{ext}" for ext in ("vhdr", "eeg", "vmrk"))
    if binary_format == "INT_16":
        res = 0.1 if resolution is None else float(resolution)
        counts = np.rint(np.asarray(rec.data, dtype=np.float64) / res)
        if counts.size and np.abs(counts).max() > 32767:
            raise FormatError(f"values overflow int16 at resolution {res} uV")
        payload = counts.T.astype("<i2")
    else:
        res = 1.0
        payload = np.asarray(rec.data).T.astype("<f4")
    interval = 1e6 / rec.fs
    interval_txt = str(int(round(interval))) if abs(interval - round(interval)) < 1e-9 else repr(interval)
    lines = [
        "Brain Vision Data Exchange Header File Version 1.0",
        "; Data written by appear",
        "",
        "[Common Infos]",
        "Codepage=UTF-8",
        f"DataFile={eeg.name}",
        f"MarkerFile={vmrk.name}",
        "DataFormat=BINARY",
        "DataOrientation=MULTIPLEXED",
        f"NumberOfChannels={rec.n_channels}",
        f"SamplingInterval={interval_txt}",
        "",
        "[Binary Infos]",
        f"BinaryFormat={binary_format}",
        "",
        "[Channel Infos]",
        "; Ch<n>=<name>,<reference>,<resolution in unit>,<unit>",
    ]
    for i, ch in enumerate(rec.channels, 1):
        lines.append(f"Ch{i}={ch.label.replace(',', chr(92) + '1')},,{res!r},µV")
    mlines = [
        "Brain Vision Data Exchange Marker File, Version 1.0",
        "",
        "[Common Infos]",
        "Codepage=UTF-8",
        f"DataFile={eeg.name}",
        "",
        "[Marker Infos]",
        "; Mk<n>=<type>,<description>,<position>,<size>,<channel>",
    ]
    for i, m in enumerate(rec.markers, 1):
        label = m.label.replace(",", "\\1")
        mlines.append(f"Mk{i}={_marker_type(m.label)},{label},{m.sample + 1},1,0")
    try:
        vhdr.write_text("\n".join(lines) + "\n", encoding="utf-8")
        vmrk.write_text("\n".join(mlines) + "\n", encoding="utf-8")
        payload.tofile(eeg)
    except OSError as exc:
        raise IoError(f"cannot write BrainVision files in {out_dir}: {exc}") from exc
    return vhdr, eeg, vmrk


def read_oximetry(path, fs=40.0, binary_dtype=None) -> Recording:
    """Read a pulse-oximetry waveform (one decimal value per line).

    With ``binary_dtype`` set (e.g. ``"<f4"``) the file is read as raw
    little-endian samples instead.
    """
    try:
        if binary_dtype is not None:
            values = np.fromfile(path, dtype=np.dtype(binary_dtype)).astype(np.float64)
        else:
            text = Path(path).read_text(encoding="utf-8")
            tokens = [t for t in text.split() if t]
            try:
                values = np.array([float(t) for t in tokens], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"non-numeric oximetry content in {path}: {exc}") from exc
    except OSError as exc:
        raise IoError(f"cannot read oximetry file {path}: {exc}") from exc
    if values.size == 0:
        raise EmptyDataError(f"oximetry file {path} is empty")
    if not np.all(np.isfinite(values)):
        raise ParseError(f"non-finite oximetry values in {path}")
    return Recording(values[np.newaxis, :], fs, (ChannelInfo("PPG"),), (), Kind.OXIMETRY)


def write_oximetry(rec: Recording, path):
    try:
        np.savetxt(path, np.asarray(rec.data[0], dtype=np.float64), fmt="%.6f")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return Path(path)


@dataclass
class RunReport:
    qrs_method: str | None = None
    heart_rates: dict = field(default_factory=dict)
    bad_intervals: list = field(default_factory=list)
    ic_records: list = field(default_factory=list)
    stage_times: dict = field(default_factory=dict)
    total_seconds: float = 0.0
    config: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    schema_version: int = REPORT_SCHEMA_VERSION

    def validate(self):
        if any(t < 0 for t in self.stage_times.values()):
            raise FormatError("stage times must be non-negative")
        idx = [r.get("index") for r in self.ic_records]
        if len(set(idx)) != len(idx):
            raise FormatError("duplicate IC records")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def write_report(report: RunReport, path):
    report.validate()
    doc = _jsonable(dataclasses.asdict(report))
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write report {path}: {exc}") from exc
    return Path(path)


def read_report(path) -> RunReport:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read report {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"report {path} is not valid JSON: {exc}") from exc
    if doc.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise FormatError(f"unsupported report schema {doc.get('schema_version')}")
    names = {f.name for f in dataclasses.fields(RunReport)}
    return RunReport(**{k: v for k, v in doc.items() if k in names})


def write_json(obj, path):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return Path(path)


def files_exist(*paths):
    return all(os.path.exists(p) for p in paths)
