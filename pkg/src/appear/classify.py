"""Rule-based labelling of independent components.

Each component is judged from three views: its scalp map (a column of the
mixing matrix interpolated over the head disc), the power spectrum of its
activation, and how much removing it changes the channel amplitudes.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.interpolate import RBFInterpolator
from scipy.spatial import ConvexHull, QhullError

from . import montage
from .config import ClassifyParams
from .core import layout_positions
from .errors import ArgumentError, LayoutError
from .preclean import to_db, welch_psd

BANDS = {"delta": (1.0, 4.0), "theta": (4.0, 8.0), "alpha": (8.0, 12.0),
         "beta": (13.0, 30.0)}
_EXTRAP_DECAY = 0.5
_OCCIPITAL = ("O1", "Oz", "O2")


class Label(str, enum.Enum):
    NEURAL = "Neural"
    BCG = "BCG"
    BLINK = "Blink"
    SACCADE = "Saccade"
    SINGLE_CHANNEL = "SingleChannel"
    MUSCLE = "Muscle"


# ---------------------------------------------------------------- topography

@dataclass(frozen=True, eq=False)
class Grid:
    size: int
    x: np.ndarray
    y: np.ndarray
    disc: np.ndarray
    band: np.ndarray

    @property
    def n_disc(self):
        return int(self.disc.sum())


@functools.lru_cache(maxsize=8)
def make_grid(size=64, boundary_width=0.2):
    c = (np.arange(size) + 0.5) / size * 2 - 1
    x, y = np.meshgrid(c, c)
    r = np.hypot(x, y)
    disc = r <= 1.0
    return Grid(size, x, y, disc, disc & (r >= 1.0 - boundary_width))


@functools.lru_cache(maxsize=16)
def _topo_operator(positions, size):
    pos = np.asarray(positions, dtype=np.float64)
    grid = make_grid(size)
    pts = np.c_[grid.x[grid.disc], grid.y[grid.disc]]
    n = pos.shape[0]
    try:
        hull = ConvexHull(pos)
    except (QhullError, ValueError) as exc:
        raise LayoutError(f"degenerate electrode layout: {exc}") from exc
    centre = pos.mean(axis=0)
    normals, offsets = hull.equations[:, :2], hull.equations[:, 2]
    d = pts - centre
    room = -(normals @ centre + offsets)
    towards = d @ normals.T
    with np.errstate(divide="ignore", invalid="ignore"):
        reach = np.where(towards > 0, room / towards, np.inf).min(axis=1)
    q = centre + d * np.minimum(reach, 1.0)[:, None]
    try:
        op = RBFInterpolator(pos, np.eye(n), kernel="thin_plate_spline", degree=1)(q)
    except np.linalg.LinAlgError as exc:
        raise LayoutError(f"degenerate electrode layout: {exc}") from exc
    # outside the electrode hull, fade towards the column mean instead of
    # letting the spline extrapolate
    w = np.exp(-np.hypot(*(pts - q).T) / _EXTRAP_DECAY)[:, None]
    return w * op + (1.0 - w) / n


@dataclass(frozen=True, eq=False)
class TopoMap:
    grid: np.ndarray
    ic: int = -1
    scale: float = 1.0

    @property
    def values(self):
        return self.grid[~np.isnan(self.grid)]


def interp_topomap(column, layout, ic=-1, size=64) -> TopoMap:
    """Thin-plate spline map of a mixing column on a ``size`` x ``size`` grid.

    Parameters
    ----------
    column : array, shape (N,)
    layout : sequence of ChannelInfo or (N, 2) array of disc positions

    Returns
    -------
    TopoMap
        Values outside the disc are NaN. The map is divided by its largest
        magnitude and its sign is chosen so that extreme value is +1.
    """
    col = np.asarray(column, dtype=np.float64)
    pos = np.asarray(layout if isinstance(layout, np.ndarray) else layout_positions(layout),
                     dtype=np.float64)
    if pos.shape[0] != col.size:
        raise ArgumentError(f"{col.size} weights for {pos.shape[0]} positions")
    if pos.shape[0] < 8:
        raise LayoutError(f"need at least 8 positioned channels, got {pos.shape[0]}")
    op = _topo_operator(tuple(map(tuple, np.round(pos, 12))), size)
    vals = op @ col
    grid = make_grid(size)
    peak = int(np.argmax(np.abs(vals)))
    scale = vals[peak]
    out = np.full((size, size), np.nan)
    if scale != 0:
        out[grid.disc] = vals / scale
    else:
        out[grid.disc] = 0.0
    return TopoMap(out, ic, float(scale))


@dataclass(frozen=True)
class Region:
    sign: int
    area: float
    centroid: tuple
    arc: float


@dataclass(frozen=True)
class PolarityRegions:
    primary: Region | None
    secondary: Region | None
    others: tuple = ()
    n_neutral: int = 0
    n_primary_sign: int = 0

    @property
    def bipolar(self):
        return self.secondary is not None

    def to_dict(self):
        def reg(r):
            return None if r is None else {"sign": r.sign, "area": r.area,
                                           "centroid": list(r.centroid), "arc": r.arc}
        return {"primary": reg(self.primary), "secondary": reg(self.secondary),
                "others": [reg(r) for r in self.others], "n_neutral": self.n_neutral,
                "n_primary_sign": self.n_primary_sign}


def extract_polarity_regions(tmap: TopoMap, params: ClassifyParams | None = None):
    """Connected regions of ``v > t`` and ``v < -t`` on the disc.

    Components smaller than ``min_region_area`` of the disc are ignored.
    The primary region holds the map's extreme value; the secondary region
    is the largest region of opposite sign with at least
    ``secondary_min_area`` of the disc. Every other region counts as
    neutral. Arcs are the fractions of the outer boundary band each region
    occupies.
    """
    p = params or ClassifyParams()
    v = tmap.grid
    size = v.shape[0]
    grid = make_grid(size, p.boundary_width)
    nd, nb = grid.n_disc, int(grid.band.sum())
    filled = np.where(grid.disc, v, 0.0)
    regions = []
    peak_region = None
    peak_cell = np.unravel_index(int(np.argmax(np.abs(filled))), filled.shape)
    for sign in (1, -1):
        lab, count = ndimage.label(sign * filled > p.topo_threshold)
        for k in range(1, count + 1):
            cells = lab == k
            area = cells.sum() / nd
            if area < p.min_region_area:
                continue
            reg = Region(sign, float(area),
                         (float(grid.x[cells].mean()), float(grid.y[cells].mean())),
                         float((cells & grid.band).sum() / nb))
            regions.append(reg)
            if cells[peak_cell]:
                peak_region = reg
    if peak_region is None:
        return PolarityRegions(None, None, tuple(regions), len(regions), 0)
    opposite = [r for r in regions if r.sign == -peak_region.sign
                and r.area >= p.secondary_min_area]
    secondary = max(opposite, key=lambda r: r.area) if opposite else None
    others = tuple(r for r in regions if r is not peak_region and r is not secondary)
    n_same = sum(1 for r in regions if r.sign == peak_region.sign)
    return PolarityRegions(peak_region, secondary, others, len(others), n_same)


def bcg_topo_test(regions: PolarityRegions, params: ClassifyParams | None = None) -> bool:
    """Left/right opposite-polarity pattern with at most one neutral region."""
    p = params or ClassifyParams()
    pr, sec = regions.primary, regions.secondary
    if pr is None or sec is None:
        return False
    if regions.n_neutral > p.max_neutral_regions or regions.n_primary_sign != 1:
        return False
    if pr.arc <= 0:
        return False
    if pr.centroid[0] * sec.centroid[0] >= 0:
        return False
    return sec.area >= p.secondary_min_area and sec.arc >= p.secondary_min_arc


def blink_test(regions: PolarityRegions, tmap: TopoMap,
               params: ClassifyParams | None = None) -> bool:
    """One dominant unipolar region centred in, and mostly within, the front third."""
    p = params or ClassifyParams()
    pr = regions.primary
    if pr is None or regions.secondary is not None:
        return False
    if any(r.area >= p.secondary_min_area for r in regions.others):
        return False
    if pr.centroid[1] <= p.frontal_y:
        return False
    grid = make_grid(tmap.grid.shape[0], p.boundary_width)
    filled = np.where(grid.disc, tmap.grid, 0.0)
    lab, _ = ndimage.label(filled * pr.sign > p.topo_threshold)
    peak_cell = np.unravel_index(int(np.argmax(np.abs(filled))), filled.shape)
    cells = lab == lab[peak_cell]
    front = (cells & (grid.y > p.frontal_y)).sum() / cells.sum()
    return bool(front >= p.blink_anterior_fraction)


def saccade_test(regions: PolarityRegions, params: ClassifyParams | None = None) -> bool:
    """Two frontal opposite-sign regions, laterally separated."""
    p = params or ClassifyParams()
    pr, sec = regions.primary, regions.secondary
    if pr is None or sec is None:
        return False
    if any(r.area >= p.secondary_min_area for r in regions.others):
        return False
    if pr.centroid[1] <= p.frontal_y or sec.centroid[1] <= p.frontal_y:
        return False
    return abs(pr.centroid[0] - sec.centroid[0]) >= p.saccade_min_separation


def occipital_template(layout_positions_by_label, size=64, radius=0.25):
    grid = make_grid(size)
    mask = np.zeros_like(grid.disc)
    for lab in _OCCIPITAL:
        pos = layout_positions_by_label.get(lab, montage.POSITIONS[lab])
        mask |= np.hypot(grid.x - pos[0], grid.y - pos[1]) <= radius
    return mask & grid.disc


def _band_mean(freqs, values, band):
    mask = (freqs >= band[0]) & (freqs < band[1])
    if not mask.any():
        raise ArgumentError(f"spectrum has no bins in {band}")
    return float(values[mask].mean())


def alpha_guard(tmap: TopoMap, regions: PolarityRegions, freqs, psd_db,
                params: ClassifyParams | None = None, template=None):
    """True when the component looks like occipital alpha.

    Spatially, the ``|v| > t`` area must cover more than the unipolar or
    bipolar fraction of the occipital template. Spectrally, the largest
    value in the search band must fall in the alpha band, or the alpha band
    mean must exceed the delta, theta and beta means.
    Returns ``(flag, diagnostics)``.
    """
    p = params or ClassifyParams()
    size = tmap.grid.shape[0]
    tmpl = template if template is not None else occipital_template({}, size, p.occipital_radius)
    active = np.nan_to_num(np.abs(tmap.grid), nan=0.0) > p.topo_threshold
    overlap = float((tmpl & active).sum() / tmpl.sum())
    need = p.alpha_overlap_bipolar if regions.bipolar else p.alpha_overlap_unipolar
    spatial = overlap > need
    freqs = np.asarray(freqs)
    psd_db = np.asarray(psd_db)
    lo, hi = p.guard_search_band
    search = (freqs >= lo) & (freqs <= hi)
    f_peak = float(freqs[search][np.argmax(psd_db[search])])
    a_lo, a_hi = p.guard_alpha_band
    peak_in_alpha = a_lo <= f_peak <= a_hi
    alpha = _band_mean(freqs, psd_db, p.guard_alpha_band)
    others = {k: _band_mean(freqs, psd_db, BANDS[k]) for k in ("delta", "theta", "beta")}
    dominant = all(alpha > v for v in others.values())
    spectral = peak_in_alpha or dominant
    diag = {"overlap": overlap, "overlap_needed": need, "peak_hz": f_peak,
            "alpha_db": alpha, **{f"{k}_db": v for k, v in others.items()}}
    return bool(spatial and spectral), diag


# ------------------------------------------------------------------ spectra

@dataclass
class BcgSpectralDiag:
    f_p: float = float("nan")
    f_lmin: float | None = None
    r_n: float = 0.0
    s_n: float = 0.0
    s_min: float = 0.0
    s_ave: float = 0.0
    cb_freqs: list = field(default_factory=list)
    cb_rises: list = field(default_factory=list)
    cb_powers: list = field(default_factory=list)
    s3: bool = False
    s4: bool = False
    s5: bool = False
    reference_db: float = 0.0

    @property
    def p_cb(self):
        return len(self.cb_freqs)


def _is_local_min(s, i):
    return 0 < i < s.size - 1 and s[i] <= s[i - 1] and s[i] <= s[i + 1]


def bcg_spectral_test(freqs, psd_db, params: ClassifyParams | None = None):
    """Cardioballistic versus neuronal peak analysis of a dB spectrum.

    The spectrum is first referenced to its minimum over the floor band
    (1-30 Hz by default) so that level-type quantities such as ``S_ave``
    do not depend on the component's arbitrary scale. ``R_N`` is the rise
    of the 8-12 Hz maximum above the lowest point between it and the
    nearest local minimum below 8 Hz (or 8 Hz itself when no such minimum
    exists). Cardioballistic peaks are 2-7 Hz local maxima whose rise above
    their nearest left local minimum exceeds ``0.2 * S_ave``. The test
    passes when at least one such peak exists and any of the three
    comparisons (``R_N <= 0.33 S_ave``; ``max R_cb > R_N - 3``;
    ``S_ave - S_min > 0.33 R_N`` with ``max S_cb > S_N - 3``) holds.
    """
    p = params or ClassifyParams()
    freqs = np.asarray(freqs, dtype=np.float64)
    raw = np.asarray(psd_db, dtype=np.float64)
    fl_lo, fl_hi = p.spectrum_floor_band
    if freqs.size < 3 or freqs[0] > fl_lo or freqs[-1] < fl_hi:
        raise ArgumentError(f"spectrum must cover {fl_lo}-{fl_hi} Hz")
    start = int(np.searchsorted(freqs, fl_lo))
    stop = int(np.searchsorted(freqs, fl_hi, side="right"))
    f = freqs[start:stop]
    ref = float(raw[start:stop].min())
    s = raw[start:stop] - ref
    diag = BcgSpectralDiag(reference_db=ref)
    n_lo, n_hi = p.neuro_band
    neuro = np.flatnonzero((f >= n_lo) & (f <= n_hi))
    cb_lo, cb_hi = p.cardio_band
    cardio = np.flatnonzero((f >= cb_lo) & (f <= cb_hi))
    if neuro.size == 0 or cardio.size == 0:
        raise ArgumentError("spectrum grid too coarse for the cardioballistic/neuronal bands")
    ip = int(neuro[np.argmax(s[neuro])])
    diag.f_p = float(f[ip])
    diag.s_n = float(s[ip])
    i8 = int(neuro[0])
    ilmin = None
    for i in range(i8 - 1, 0, -1):
        if f[i] >= n_lo:
            continue
        if _is_local_min(s, i):
            ilmin = i
            break
    lo_idx = ilmin if ilmin is not None else i8
    diag.f_lmin = None if ilmin is None else float(f[ilmin])
    diag.r_n = float(s[ip] - s[lo_idx:ip + 1].min())
    diag.s_min = float(s[:ip + 1].min())
    diag.s_ave = float(s[cardio].mean())
    for i in cardio:
        if i == 0 or i >= s.size - 1:
            continue
        if not (s[i] > s[i - 1] and s[i] >= s[i + 1]):
            continue
        j = i - 1
        while j > 0 and not _is_local_min(s, j):
            j -= 1
        if not _is_local_min(s, j):
            continue
        rise = float(s[i] - s[j])
        if rise > p.bcg_rise_fraction * diag.s_ave:
            diag.cb_freqs.append(float(f[i]))
            diag.cb_rises.append(rise)
            diag.cb_powers.append(float(s[i]))
    if diag.p_cb == 0:
        return False, diag
    diag.s3 = diag.r_n <= p.bcg_neuro_fraction * diag.s_ave
    diag.s4 = max(diag.cb_rises) > diag.r_n - p.bcg_margin_db
    diag.s5 = (diag.s_ave - diag.s_min > p.bcg_neuro_fraction * diag.r_n
               and max(diag.cb_powers) > diag.s_n - p.bcg_margin_db)
    return bool(diag.s3 or diag.s4 or diag.s5), diag


def muscle_test(freqs, psd_linear, params: ClassifyParams | None = None) -> bool:
    """Mean 30-60 Hz power strictly above every canonical band mean."""
    p = params or ClassifyParams()
    m = _band_mean(np.asarray(freqs), np.asarray(psd_linear), p.muscle_band)
    return all(m > _band_mean(freqs, psd_linear, b) for b in BANDS.values())


# ------------------------------------------------------------ contributions

@dataclass
class ContributionDiag:
    alpha_pos: np.ndarray
    alpha_neg: np.ndarray
    alpha_pos_after: np.ndarray
    alpha_neg_after: np.ndarray
    ratio_mean: np.ndarray
    ratio_min: np.ndarray
    used: np.ndarray

    @property
    def min_ratio_mean(self):
        return float(np.nanmin(self.ratio_mean[self.used]))

    @property
    def min_ratio_min(self):
        return float(np.nanmin(self.ratio_min[self.used]))

    def to_dict(self):
        return {"min_r": self.min_ratio_mean, "min_single_ratio": self.min_ratio_min,
                "n_channels_used": int(self.used.sum())}


def _signed_means(x):
    pos = np.where(x > 0, x, 0.0)
    neg = np.where(x < 0, -x, 0.0)
    npos = (x > 0).sum(axis=-1)
    nneg = (x < 0).sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return pos.sum(axis=-1) / npos, neg.sum(axis=-1) / nneg


def bcg_contribution_test(x, A, S, ic, params: ClassifyParams | None = None):
    """Change in mean positive and negative amplitudes when ``ic`` is removed.

    Passes when some channel's symmetric ratio drops below
    ``contrib_mean_ratio`` and some single ratio drops below
    ``contrib_min_ratio``. Channels with a zero mean magnitude are skipped.
    """
    p = params or ClassifyParams()
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    out = {k: np.full(n, np.nan) for k in ("ap", "an", "bp", "bn")}
    s = np.asarray(S[ic], dtype=np.float64)
    for j in range(n):
        out["ap"][j], out["an"][j] = _signed_means(x[j])
        out["bp"][j], out["bn"][j] = _signed_means(x[j] - A[j, ic] * s)
    used = (np.nan_to_num(out["ap"]) > 0) & (np.nan_to_num(out["an"]) > 0)
    if not used.any():
        raise ArgumentError("every channel has zero positive or negative magnitude")
    with np.errstate(invalid="ignore", divide="ignore"):
        rp = np.nan_to_num(out["bp"], nan=0.0) / out["ap"]
        rn = np.nan_to_num(out["bn"], nan=0.0) / out["an"]
    diag = ContributionDiag(out["ap"], out["an"], out["bp"], out["bn"],
                            0.5 * (rp + rn), np.minimum(rp, rn), used)
    ok = diag.min_ratio_mean < p.contrib_mean_ratio and diag.min_ratio_min < p.contrib_min_ratio
    return bool(ok), diag


def channel_powers(A, psd_source, freqs, ic):
    """Per-channel total power of the single-component reconstruction."""
    df = freqs[1] - freqs[0]
    return (A[:, ic] ** 2) * float(np.sum(psd_source) * df)


def kurtosis(s):
    s = np.asarray(s, dtype=np.float64)
    s = s - s.mean()
    m2 = np.mean(s * s)
    if m2 == 0:
        return 0.0
    return float(np.mean(s ** 4) / (m2 * m2))


def single_channel_test(A, s, freqs, psd_source, ic, params: ClassifyParams | None = None):
    """One-channel projection, heavy tails and an alpha-band spectral dip.

    ``psd_source`` is the linear PSD of the component activation ``s``.
    Returns ``(flag, diagnostics)``.
    """
    p = params or ClassifyParams()
    freqs = np.asarray(freqs)
    powers = np.sort(channel_powers(A, psd_source, freqs, ic))[::-1]
    top = np.concatenate([powers, np.zeros(3)])[:3]
    conc = top[0] > p.sc_ratio_second * top[1] and top[0] > p.sc_ratio_third * top[2]
    k = kurtosis(s)
    means = {name: _band_mean(freqs, psd_source, band) for name, band in BANDS.items()}
    alpha = _band_mean(freqs, psd_source, p.sc_alpha_band)
    dip = all(alpha < v for name, v in means.items() if name != "alpha")
    diag = {"max1": float(top[0]), "max2": float(top[1]), "max3": float(top[2]),
            "kurtosis": k, **{f"{n}_mean": v for n, v in means.items()}}
    return bool(conc and k > p.sc_kurtosis and dip), diag


# ------------------------------------------------------------------ verdicts

@dataclass
class IcVerdict:
    index: int
    label: Label
    trace: list
    diagnostics: dict

    def to_dict(self):
        return {"index": self.index, "label": self.label.value, "trace": list(self.trace),
                "diagnostics": self.diagnostics}


def component_psd(A, S, ic, fs, win_s=4.096, overlap=0.5):
    """Linear PSD of ``S[ic]`` scaled by the RMS of its mixing column."""
    scale = float(np.sqrt(np.mean(np.asarray(A[:, ic]) ** 2)))
    freqs, p = welch_psd(np.asarray(S[ic], dtype=np.float64) * scale, fs, win_s, overlap)
    return freqs, p


def classify_ic(x, A, S, ic, fs, layout, params: ClassifyParams | None = None,
                win_s=4.096, overlap=0.5):
    p = params or ClassifyParams()
    tmap = interp_topomap(A[:, ic], layout, ic, p.grid_size)
    regions = extract_polarity_regions(tmap, p)
    freqs, plin = component_psd(A, S, ic, fs, win_s, overlap)
    pdb = to_db(plin)
    trace = []
    diag = {"regions": regions.to_dict()}
    guard, gdiag = alpha_guard(tmap, regions, freqs, pdb, p)
    diag["alpha_guard"] = gdiag
    if guard:
        trace.append("alpha_guard")
        return IcVerdict(ic, Label.NEURAL, trace, diag)
    if blink_test(regions, tmap, p):
        trace.append("blink")
        return IcVerdict(ic, Label.BLINK, trace, diag)
    if saccade_test(regions, p):
        trace.append("saccade")
        return IcVerdict(ic, Label.SACCADE, trace, diag)
    # activation spectrum with the column scaling divided out, for per-channel powers
    src_scale = float(np.mean(np.asarray(A[:, ic]) ** 2))
    psd_src = plin / src_scale if src_scale > 0 else plin
    sc, sdiag = single_channel_test(A, S[ic], freqs, psd_src, ic, p)
    diag["single_channel"] = sdiag
    if sc:
        trace.append("single_channel")
        return IcVerdict(ic, Label.SINGLE_CHANNEL, trace, diag)
    if muscle_test(freqs, plin, p):
        trace.append("muscle")
        return IcVerdict(ic, Label.MUSCLE, trace, diag)
    is_bcg, bdiag = bcg_checks(x, A, S, ic, freqs, pdb, regions, p)
    diag.update(bdiag)
    if is_bcg:
        trace.extend(["bcg_spectrum", "bcg_topography", "bcg_contribution"])
        return IcVerdict(ic, Label.BCG, trace, diag)
    return IcVerdict(ic, Label.NEURAL, trace, diag)


def bcg_checks(x, A, S, ic, freqs, pdb, regions, params):
    spec_ok, sdiag = bcg_spectral_test(freqs, pdb, params)
    diag = {"bcg_spectrum": {k: v for k, v in vars(sdiag).items()}, "bcg_spectrum_pass": spec_ok}
    topo_ok = bcg_topo_test(regions, params)
    diag["bcg_topography_pass"] = topo_ok
    if not (spec_ok and topo_ok):
        return False, diag
    contrib_ok, cdiag = bcg_contribution_test(x, A, S, ic, params)
    diag["bcg_contribution"] = cdiag.to_dict()
    diag["bcg_contribution_pass"] = contrib_ok
    return contrib_ok, diag


def classify_ics(x, decomp, S=None, params: ClassifyParams | None = None,
                 win_s=4.096, overlap=0.5):
    """Label every component; ``x`` is the Recording the sources came from.

    Rules run in a fixed order per component: alpha protection, blink,
    saccade, single channel, muscle, and finally BCG, which needs the
    spectral, topographic and contribution tests to agree.
    """
    S = decomp.S_short if S is None else S
    data = np.asarray(x.data, dtype=np.float64)
    return [classify_ic(data, decomp.A, S, ic, x.fs, x.channels, params, win_s, overlap)
            for ic in range(decomp.A.shape[1])]


def bcg_candidates(x, decomp, params: ClassifyParams | None = None, win_s=4.096,
                   overlap=0.5):
    """Components passing the three BCG tests, used to find heartbeats."""
    p = params or ClassifyParams()
    data = np.asarray(x.data, dtype=np.float64)
    out = []
    for ic in range(decomp.A.shape[1]):
        tmap = interp_topomap(decomp.A[:, ic], x.channels, ic, p.grid_size)
        regions = extract_polarity_regions(tmap, p)
        freqs, plin = component_psd(decomp.A, decomp.S_short, ic, x.fs, win_s, overlap)
        ok, _ = bcg_checks(data, decomp.A, decomp.S_short, ic, freqs, to_db(plin), regions, p)
        if ok:
            out.append(ic)
    return out
