import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal

from appear import classify as C
from appear import montage
from appear.classify import Label
from appear.config import ClassifyParams
from appear.errors import ArgumentError, LayoutError
from appear.ica import IcaDecomposition
from appear.preclean import to_db, welch_psd

from conftest import make_rec, scalp_channels

CHANNELS = scalp_channels()
POS = np.array([montage.POSITIONS[l] for l in montage.DEFAULT_31])
IDX = {l: i for i, l in enumerate(montage.DEFAULT_31)}
FREQS = np.arange(0, 125.01, 250 / 1024)
FS = 250.0


def grid_map(fn, size=64):
    """TopoMap built directly on the grid from ``fn(x, y)``."""
    g = C.make_grid(size)
    v = np.asarray(fn(g.x, g.y), dtype=float)
    v = v / np.abs(v[g.disc]).max()
    return C.TopoMap(np.where(g.disc, v, np.nan))


def blob(cx, cy, w=0.15):
    return lambda x, y: np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * w * w))


def gauss_column(label, w=0.25):
    c = montage.POSITIONS[label]
    return np.exp(-np.sum((POS - c) ** 2, axis=1) / (2 * w * w))


def spectrum(peaks, base=0.0):
    """dB spectrum on the 0.244 Hz grid with raised-cosine bumps ``(f, height, half_width)``.

    The bumps have compact support so the baseline between them is exactly flat.
    """
    s = np.full(FREQS.size, base)
    for f0, h, w in peaks:
        u = np.clip((FREQS - f0) / w, -1, 1)
        s = s + h * 0.5 * (1 + np.cos(np.pi * u))
    return s


# ------------------------------------------------------------ topographies

def test_uniform_column_gives_uniform_map():
    m = C.interp_topomap(np.full(31, 3.0), CHANNELS)
    np.testing.assert_allclose(m.values, 1.0, atol=1e-9)
    assert np.isnan(m.grid[0, 0])


def test_occipital_pair_is_antisymmetric():
    col = np.zeros(31)
    col[IDX["O1"]], col[IDX["O2"]] = 1.0, -1.0
    v = np.nan_to_num(C.interp_topomap(col, CHANNELS).grid)
    mirror = v[:, ::-1]
    assert np.sqrt(np.mean((v + mirror) ** 2)) <= 0.05 * np.sqrt(np.mean(v ** 2))


@pytest.mark.parametrize("column", [
    lambda: np.eye(31)[IDX["Fp1"]],
    lambda: gauss_column("Fp1"),
])
def test_map_peak_near_fp1(column):
    m = C.interp_topomap(column(), CHANNELS)
    g = C.make_grid(64)
    k = np.nanargmax(m.grid)
    peak = np.array([g.x.flat[k], g.y.flat[k]])
    assert np.hypot(*(peak - montage.POSITIONS["Fp1"])) <= 0.15


def test_map_values_bounded_and_sign_normalised():
    rng = np.random.default_rng(0)
    for _ in range(20):
        m = C.interp_topomap(rng.standard_normal(31), CHANNELS)
        assert np.nanmax(np.abs(m.grid)) == pytest.approx(1.0)
        assert np.nanmax(m.grid) == pytest.approx(1.0)


def test_degenerate_layout():
    line = np.c_[np.linspace(-0.5, 0.5, 10), np.zeros(10)]
    with pytest.raises(LayoutError):
        C.interp_topomap(np.arange(10.0), line)
    with pytest.raises(LayoutError):
        C.interp_topomap(np.ones(5), POS[:5])


# ----------------------------------------------------------------- regions

DIPOLE = grid_map(lambda x, y: np.tanh(-4 * x))
FRONTAL = grid_map(blob(0, 0.75, 0.2))
OCCIPITAL = grid_map(blob(0, -0.75, 0.2))
SACCADE = grid_map(lambda x, y: blob(-0.6, 0.5)(x, y) - blob(0.6, 0.5)(x, y))
CZ_PAIR = grid_map(lambda x, y: blob(-0.6, 0.0)(x, y) - blob(0.6, 0.0)(x, y))
TRIPOLAR = grid_map(lambda x, y: np.cos(3 * np.pi * x / 2 * 1.2))


def test_uniform_map_regions():
    r = C.extract_polarity_regions(grid_map(lambda x, y: np.ones_like(x)))
    assert r.primary.area == pytest.approx(1.0)
    assert r.secondary is None and r.n_neutral == 0


def test_dipole_regions():
    r = C.extract_polarity_regions(DIPOLE)
    assert r.primary.sign == -r.secondary.sign
    assert r.primary.centroid[0] * r.secondary.centroid[0] < 0
    assert r.primary.arc > 0.3 and r.secondary.arc > 0.3
    assert C.bcg_topo_test(r)


def test_weak_map_has_no_regions():
    tm = C.TopoMap(np.where(C.make_grid(64).disc, 0.15, np.nan))
    r = C.extract_polarity_regions(tm)
    assert r.primary is None and r.secondary is None and r.others == ()


def test_topo_rejects_blob_and_tripolar():
    assert not C.bcg_topo_test(C.extract_polarity_regions(FRONTAL))
    assert not C.bcg_topo_test(C.extract_polarity_regions(TRIPOLAR))


def test_blink_examples():
    for tm, want in [(FRONTAL, True), (OCCIPITAL, False), (SACCADE, False)]:
        assert C.blink_test(C.extract_polarity_regions(tm), tm) is want


def test_saccade_examples():
    for tm, want in [(SACCADE, True), (FRONTAL, False), (CZ_PAIR, False)]:
        assert C.saccade_test(C.extract_polarity_regions(tm)) is want


def test_blink_from_electrode_column():
    col = gauss_column("Fp1") + gauss_column("Fp2")
    tm = C.interp_topomap(col, CHANNELS)
    assert C.blink_test(C.extract_polarity_regions(tm), tm)


# ------------------------------------------------------------ BCG spectrum

def test_single_cardio_peak_passes_on_s3():
    ok, d = C.bcg_spectral_test(FREQS, spectrum([(3.0, 10.0, 1.0)]))
    assert ok and d.s3
    assert d.r_n == 0 and d.s_ave > 0


def test_pure_alpha_peak_fails():
    ok, d = C.bcg_spectral_test(FREQS, spectrum([(10.0, 12.0, 2.0)]))
    assert not ok and d.p_cb == 0


def test_comparable_peaks_pass_on_s4():
    ok, d = C.bcg_spectral_test(FREQS, spectrum([(FREQS[16], 8.0, 1.0), (FREQS[41], 10.0, 1.5)]))
    assert d.r_n == pytest.approx(10.0, abs=0.05)
    assert max(d.cb_rises) == pytest.approx(8.0, abs=0.05)
    assert not d.s3 and d.s4
    assert ok


def test_spectral_test_needs_coverage():
    with pytest.raises(ArgumentError):
        C.bcg_spectral_test(FREQS[FREQS < 20], spectrum([])[FREQS < 20])


def test_spectral_test_is_level_invariant():
    s = spectrum([(FREQS[16], 8.0, 1.0), (FREQS[41], 10.0, 1.5)])
    a = C.bcg_spectral_test(FREQS, s)
    b = C.bcg_spectral_test(FREQS, s - 37.5)
    assert a[0] == b[0] and a[1].r_n == pytest.approx(b[1].r_n)


def _reference_spectral(freqs, db, p=ClassifyParams()):
    """Slow loop-by-loop transcription of the dB decision rules."""
    f = [float(v) for v, d in zip(freqs, db) if p.spectrum_floor_band[0] <= v <= p.spectrum_floor_band[1]]
    raw = [float(d) for v, d in zip(freqs, db) if p.spectrum_floor_band[0] <= v <= p.spectrum_floor_band[1]]
    base = min(raw)
    s = [v - base for v in raw]
    n = len(s)

    def lmin(i):
        return 0 < i < n - 1 and s[i] <= s[i - 1] and s[i] <= s[i + 1]

    neuro = [i for i in range(n) if p.neuro_band[0] <= f[i] <= p.neuro_band[1]]
    cardio = [i for i in range(n) if p.cardio_band[0] <= f[i] <= p.cardio_band[1]]
    ip = neuro[0]
    for i in neuro:
        if s[i] > s[ip]:
            ip = i
    left = neuro[0]
    for i in range(neuro[0] - 1, 0, -1):
        if f[i] < p.neuro_band[0] and lmin(i):
            left = i
            break
    r_n = s[ip] - min(s[left:ip + 1])
    s_min = min(s[:ip + 1])
    s_ave = sum(s[i] for i in cardio) / len(cardio)
    rises, powers = [], []
    for i in cardio:
        if i == 0 or i == n - 1 or not (s[i] > s[i - 1] and s[i] >= s[i + 1]):
            continue
        j = i - 1
        while j > 0 and not lmin(j):
            j -= 1
        if lmin(j) and s[i] - s[j] > p.bcg_rise_fraction * s_ave:
            rises.append(s[i] - s[j])
            powers.append(s[i])
    if not rises:
        return False
    return (r_n <= p.bcg_neuro_fraction * s_ave
            or max(rises) > r_n - p.bcg_margin_db
            or (s_ave - s_min > p.bcg_neuro_fraction * r_n
                and max(powers) > s[ip] - p.bcg_margin_db))


def test_spectral_test_matches_reference_on_random_spectra():
    rng = np.random.default_rng(0)
    freqs = FREQS[FREQS <= 40]
    for _ in range(1000):
        walk = np.cumsum(rng.standard_normal(freqs.size)) * rng.uniform(0.2, 2)
        bumps = [(rng.uniform(1, 30), rng.uniform(0, 15), rng.uniform(0.2, 1.5))
                 for _ in range(rng.integers(0, 4))]
        db = walk + sum(h * np.exp(-0.5 * ((freqs - f0) / w) ** 2) for f0, h, w in bumps)
        ok, _ = C.bcg_spectral_test(freqs, db)
        assert ok == _reference_spectral(freqs, db)


# ---------------------------------------------------------- contributions

def _contrib_setup(weight):
    rng = np.random.default_rng(1)
    s = rng.standard_normal((1, 5000))
    gains = rng.uniform(0.5, 2, 6)
    x = gains[:, None] * s
    A = (weight * gains)[:, None]
    return x, A, s


def test_zero_contribution_fails():
    x, A, s = _contrib_setup(0.0)
    ok, d = C.bcg_contribution_test(x, A, s, 0)
    assert not ok
    np.testing.assert_allclose(d.ratio_mean, 1.0)


def test_twenty_percent_contribution_passes():
    x, A, s = _contrib_setup(0.2)
    ok, d = C.bcg_contribution_test(x, A, s, 0)
    assert ok
    np.testing.assert_allclose(d.ratio_mean, 0.8, rtol=1e-12)


def test_energy_adding_component_fails():
    x, A, s = _contrib_setup(-0.2)
    ok, d = C.bcg_contribution_test(x, A, s, 0)
    assert not ok
    np.testing.assert_allclose(d.ratio_mean, 1.2, rtol=1e-12)


def test_contribution_skips_silent_channels():
    x, A, s = _contrib_setup(0.2)
    x[0] = 0.0
    ok, d = C.bcg_contribution_test(x, A, s, 0)
    assert not d.used[0] and d.used[1:].all() and ok
    with pytest.raises(ArgumentError):
        C.bcg_contribution_test(np.zeros_like(x), A, s, 0)


# ------------------------------------------------------------ alpha guard

def _alpha_spec():
    return spectrum([(10.0, 15.0, 2.0)], base=-5) - 0.05 * FREQS


def test_alpha_guard_examples():
    delta = spectrum([(2.5, 15.0, 1.5)]) - 0.2 * FREQS
    cases = [(OCCIPITAL, _alpha_spec(), True), (FRONTAL, _alpha_spec(), False),
             (OCCIPITAL, delta, False)]
    for tm, spec, want in cases:
        flag, _ = C.alpha_guard(tm, C.extract_polarity_regions(tm), FREQS, spec)
        assert flag is want


# ---------------------------------------------------------- single channel

def _single_channel_source(rng, n=int(120 * FS)):
    s = np.zeros(n)
    hits = rng.integers(0, n, 60)
    s[hits] = rng.uniform(20, 40, hits.size) * rng.choice([-1, 1], hits.size)
    sos = signal.butter(4, [7.0, 13.0], btype="bandstop", fs=FS, output="sos")
    return signal.sosfiltfilt(sos, s) + 0.01 * rng.standard_normal(n)


def _sc(A, s, ic=0):
    freqs, p = welch_psd(s, FS)
    return C.single_channel_test(A, s, freqs, p, ic)


def test_single_channel_burst_ic():
    rng = np.random.default_rng(2)
    A = np.zeros((31, 1))
    A[IDX["T7"], 0] = 1.0
    A[:, 0] += 0.01 * rng.standard_normal(31)
    ok, d = _sc(A, _single_channel_source(rng))
    assert ok and d["kurtosis"] > 4


def test_gaussian_spread_ic_is_not_single_channel():
    rng = np.random.default_rng(3)
    ok, d = _sc(rng.uniform(0.5, 1, (31, 1)), rng.standard_normal(int(60 * FS)))
    assert not ok and d["kurtosis"] == pytest.approx(3.0, abs=0.1)


def test_alpha_oscillation_on_one_channel_is_not_single_channel():
    A = np.eye(31)[:, [IDX["T7"]]]
    t = np.arange(int(60 * FS)) / FS
    bursty = np.sin(2 * np.pi * 10 * t) * (np.sin(2 * np.pi * 0.05 * t) > 0.9) * 50
    ok, d = _sc(A, bursty)
    assert d["kurtosis"] > 4
    assert not ok


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(2, 12))
def test_channel_powers_match_brute_force(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    S = rng.standard_normal((n, 2048))
    ic = int(rng.integers(n))
    freqs, psd = welch_psd(S[ic], FS, win_s=2.048)
    fast = C.channel_powers(A, psd, freqs, ic)
    df = freqs[1] - freqs[0]
    slow = []
    for j in range(n):
        _, pj = welch_psd(A[j, ic] * S[ic], FS, win_s=2.048)
        slow.append(sum(pj) * df)
    np.testing.assert_allclose(fast, slow, rtol=1e-9, atol=1e-12)


# ------------------------------------------------------------------ muscle

def test_muscle_examples():
    rng = np.random.default_rng(4)
    n = int(60 * FS)
    sos = signal.butter(6, [30, 60], btype="bandpass", fs=FS, output="sos")
    emg = signal.sosfiltfilt(sos, rng.standard_normal(n))
    alpha = np.sin(2 * np.pi * 10 * np.arange(n) / FS) + 0.05 * rng.standard_normal(n)
    pink = np.cumsum(rng.standard_normal(n))
    for x, want in [(emg, True), (alpha, False), (pink, False)]:
        freqs, p = welch_psd(x, FS)
        assert C.muscle_test(freqs, p) is want


# ---------------------------------------------------------------- verdicts

def _decomp_with(columns, sources):
    A = np.column_stack(columns)
    n = A.shape[0]
    # pad to a square mixing matrix with weak random neural components
    rng = np.random.default_rng(5)
    extra = n - A.shape[1]
    A = np.column_stack([A, 0.3 * rng.standard_normal((n, extra)) + 0.1])
    S = np.vstack([sources, rng.standard_normal((extra, sources.shape[1]))])
    return IcaDecomposition.from_mixing(A, A @ S, fs=FS)


def test_alpha_guard_beats_bcg_topography():
    col = -(POS[:, 1] + 0.6 * POS[:, 0]) + 0.2
    tm = C.interp_topomap(col, CHANNELS)
    assert C.bcg_topo_test(C.extract_polarity_regions(tm))
    t = np.arange(int(60 * FS)) / FS
    rng = np.random.default_rng(6)
    alpha = np.sin(2 * np.pi * 10 * t) * (1 + 0.5 * np.sin(2 * np.pi * 0.3 * t))
    alpha += 0.3 * rng.standard_normal(t.size)
    S = np.vstack([alpha, rng.standard_normal((30, t.size))])
    A = np.column_stack([col, 0.2 * rng.standard_normal((31, 30)) + np.eye(31)[:, 1:]])
    v = C.classify_ic(A @ S, A, S, 0, FS, CHANNELS)
    assert v.label is Label.NEURAL and v.trace == ["alpha_guard"]


def test_zero_component_is_neural():
    rng = np.random.default_rng(7)
    A = rng.standard_normal((31, 31))
    A[:, 3] = 0.0
    S = rng.standard_normal((31, int(30 * FS)))
    S[3] = 0.0
    v = C.classify_ic(A @ S, A, S, 3, FS, CHANNELS)
    assert v.label is Label.NEURAL and v.trace == []


def test_verdict_trace_nonempty_for_artifacts():
    rng = np.random.default_rng(8)
    n = int(60 * FS)
    blink_src = np.zeros(n)
    blink_src[rng.integers(0, n, 20)] = 1
    blink_src = np.convolve(blink_src, np.hanning(100), mode="same") * 100
    dec = _decomp_with([gauss_column("Fp1") + gauss_column("Fp2")], blink_src[None])
    rec = make_rec(dec.A @ dec.S_short)
    verdicts = C.classify_ics(rec, dec)
    assert verdicts[0].label is Label.BLINK
    for v in verdicts:
        assert (v.label is Label.NEURAL) or v.trace


@pytest.fixture(scope="module")
def planted():
    from appear import synth
    return synth.planted_components(9, duration_s=60.0, fs=FS)


def test_scale_and_sign_invariance(planted):
    from appear.synth import PLANTED_LABELS
    A, S, kinds = planted
    x = A @ S
    base = [C.classify_ic(x, A, S, ic, FS, CHANNELS).label for ic in range(len(kinds))]
    assert [b.value for b in base[:6]] == [PLANTED_LABELS[k] for k in kinds[:6]]
    rng = np.random.default_rng(10)
    for ic in range(len(kinds)):
        c = float(rng.uniform(0.1, 10)) * (-1 if ic % 2 else 1)
        A2, S2 = A.copy(), S.copy()
        A2[:, ic] *= c
        S2[ic] /= c
        assert C.classify_ic(x, A2, S2, ic, FS, CHANNELS).label is base[ic]
