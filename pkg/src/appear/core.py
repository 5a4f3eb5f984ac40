"""Shared domain types and bad-interval excision bookkeeping.

All sample indices are 0-based and intervals are half-open ``[start, end)``.
Amplitudes are microvolts throughout.
"""

from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import montage
from .errors import ArgumentError, BoundsError, EmptyDataError, FormatError


class Kind(str, enum.Enum):
    EEG = "EEG"
    ECG = "ECG"
    OXIMETRY = "Oximetry"


@dataclass(frozen=True)
class ChannelInfo:
    label: str
    position: tuple[float, float] | None = None
    is_ecg: bool = False

    @classmethod
    def from_label(cls, label):
        """Build a channel from a 10-10 label, looking up its disc position.

        ECG labels get no position; any other unknown label raises
        :class:`FormatError`.
        """
        if montage.is_ecg_label(label):
            return cls(label=label, position=None, is_ecg=True)
        canon = montage.canonical_label(label)
        if canon is None:
            raise FormatError(f"unknown electrode label {label!r}")
        return cls(label=canon, position=montage.POSITIONS[canon], is_ecg=False)


@dataclass(frozen=True, order=True)
class Marker:
    sample: int
    label: str = field(compare=False)


def _as_markers(markers):
    out = tuple(sorted(Marker(int(m.sample), str(m.label)) for m in markers))
    return out


@dataclass(frozen=True, eq=False)
class Recording:
    """Channels x samples amplitudes (uV) with layout and markers."""

    data: np.ndarray
    fs: float
    channels: tuple[ChannelInfo, ...]
    markers: tuple[Marker, ...] = ()
    kind: Kind = Kind.EEG

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 1:
            data = data[np.newaxis, :]
        if data.ndim != 2:
            raise ArgumentError("recording data must be 2-D (channels x samples)")
        if not np.issubdtype(data.dtype, np.floating):
            data = data.astype(np.float64)
        if data is self.data and data.flags.writeable:
            data = data.view()
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        if not self.fs > 0:
            raise ArgumentError(f"sampling rate must be positive, got {self.fs}")
        object.__setattr__(self, "fs", float(self.fs))
        channels = tuple(self.channels)
        if len(channels) != data.shape[0]:
            raise ArgumentError(
                f"{len(channels)} channel infos for {data.shape[0]} data rows")
        labels = [c.label for c in channels]
        if len(set(labels)) != len(labels):
            raise ArgumentError("channel labels must be unique")
        object.__setattr__(self, "channels", channels)
        markers = _as_markers(self.markers)
        n = data.shape[1]
        for m in markers:
            if not 0 <= m.sample < n:
                raise BoundsError(f"marker {m.label!r} at {m.sample} outside [0, {n})")
        object.__setattr__(self, "markers", markers)
        object.__setattr__(self, "kind", Kind(self.kind))

    @property
    def n_channels(self):
        return self.data.shape[0]

    @property
    def n_samples(self):
        return self.data.shape[1]

    @property
    def duration(self):
        return self.n_samples / self.fs

    @property
    def labels(self):
        return [c.label for c in self.channels]

    def index(self, label):
        return self.labels.index(label)

    def replace(self, **changes):
        return replace(self, **changes)

    def with_data(self, data, **changes):
        return replace(self, data=data, **changes)

    def pick(self, selection):
        """Subset of channels by label list or boolean mask."""
        if isinstance(selection, np.ndarray) and selection.dtype == bool:
            idx = np.flatnonzero(selection)
        else:
            idx = [self.index(s) for s in selection]
        return replace(self, data=self.data[idx], channels=tuple(self.channels[i] for i in idx))

    def scalp(self):
        """Recording restricted to non-ECG channels."""
        mask = np.array([not c.is_ecg for c in self.channels])
        return self.pick(mask)

    def ecg(self):
        """The single ECG channel as an ECG-kind recording."""
        mask = np.array([c.is_ecg for c in self.channels])
        if mask.sum() != 1:
            raise FormatError(f"expected exactly one ECG channel, found {int(mask.sum())}")
        return replace(self.pick(mask), kind=Kind.ECG)

    def markers_labelled(self, label):
        return [m for m in self.markers if m.label == label]


@dataclass(frozen=True)
class IntervalSet:
    intervals: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        ivs = tuple((int(a), int(b)) for a, b in self.intervals)
        for (a, b) in ivs:
            if a >= b:
                raise ArgumentError(f"empty or reversed interval [{a}, {b})")
        for (a0, b0), (a1, b1) in zip(ivs, ivs[1:]):
            if a1 < b0:
                raise ArgumentError("intervals must be sorted and non-overlapping")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def merged(cls, intervals: Iterable[tuple[int, int]]):
        """Sort and merge possibly overlapping/touching intervals."""
        out = []
        for a, b in sorted((int(a), int(b)) for a, b in intervals if b > a):
            if out and a <= out[-1][1]:
                out[-1][1] = max(out[-1][1], b)
            else:
                out.append([a, b])
        return cls(tuple((a, b) for a, b in out))

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    @property
    def total(self):
        return sum(b - a for a, b in self.intervals)

    def check_bounds(self, n_samples):
        for a, b in self.intervals:
            if a < 0 or b > n_samples:
                raise BoundsError(f"interval [{a}, {b}) outside [0, {n_samples})")

    def mask(self, n_samples):
        """Boolean mask, True on bad samples."""
        self.check_bounds(n_samples)
        m = np.zeros(n_samples, dtype=bool)
        for a, b in self.intervals:
            m[a:b] = True
        return m


@dataclass(frozen=True)
class IndexMap:
    """Kept ranges ``(short_start, full_start, length)`` after excision."""

    kept_ranges: tuple[tuple[int, int, int], ...]

    @property
    def length(self):
        return sum(r[2] for r in self.kept_ranges)

    @classmethod
    def identity(cls, n):
        return cls(((0, 0, int(n)),) if n > 0 else ())

    def full_indices(self):
        """Vector of original indices for every short index."""
        if not self.kept_ranges:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([np.arange(f, f + n) for _, f, n in self.kept_ranges])


def map_short_to_full(imap: IndexMap, k: int) -> int:
    """Original sample index of short index ``k``."""
    if not 0 <= k < imap.length:
        raise BoundsError(f"short index {k} outside [0, {imap.length})")
    starts = [r[0] for r in imap.kept_ranges]
    i = bisect.bisect_right(starts, k) - 1
    s, f, _ = imap.kept_ranges[i]
    return f + (k - s)


def excise_intervals(rec: Recording, bad: IntervalSet) -> tuple[Recording, IndexMap]:
    """Drop bad intervals and concatenate what remains.

    Markers falling inside a removed interval are dropped; the rest are
    shifted to their short-data positions.
    """
    m = rec.n_samples
    bad.check_bounds(m)
    ranges = []
    short = 0
    cursor = 0
    for a, b in list(bad) + [(m, m)]:
        if a > cursor:
            ranges.append((short, cursor, a - cursor))
            short += a - cursor
        cursor = max(cursor, b)
    if short == 0:
        raise EmptyDataError("every sample lies in a bad interval")
    imap = IndexMap(tuple(ranges))
    if not bad.intervals:
        return rec, imap
    keep = imap.full_indices()
    markers = []
    for mk in rec.markers:
        for s, f, n in ranges:
            if f <= mk.sample < f + n:
                markers.append(Marker(s + mk.sample - f, mk.label))
                break
    return rec.with_data(rec.data[:, keep], markers=tuple(markers)), imap


def layout_positions(channels: Sequence[ChannelInfo]):
    """N x 2 array of disc positions; raises if any channel lacks one."""
    pos = [c.position for c in channels]
    if any(p is None for p in pos):
        raise ArgumentError("every channel needs a scalp position")
    return np.asarray(pos, dtype=float)
