import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from appear import ica
from appear.core import IndexMap, IntervalSet, excise_intervals, map_short_to_full
from appear.errors import ArgumentError, InsufficientDataError, SingularMatrixError

from conftest import make_rec


def _sources(rng, k, kinds):
    out = []
    t = np.arange(k)
    for kind in kinds:
        if kind == "pulse":
            s = np.zeros(k)
            s[rng.integers(0, k, k // 60)] = rng.uniform(3, 6, k // 60)
            s += 0.05 * rng.standard_normal(k)
        elif kind == "laplace":
            s = rng.laplace(size=k)
        elif kind == "uniform":
            s = rng.uniform(-1, 1, k)
        else:
            s = np.sin(2 * np.pi * t / rng.uniform(20, 60) + rng.uniform(0, 6))
        out.append((s - s.mean()) / s.std())
    return np.array(out)


def _greedy_match(S_est, S_true):
    c = np.abs(np.corrcoef(S_est, S_true)[:len(S_est), len(S_est):])
    best = []
    for _ in range(len(S_est)):
        i, j = np.unravel_index(np.argmax(c), c.shape)
        best.append(c[i, j])
        c[i, :] = -1
        c[:, j] = -1
    return best


def test_two_source_separation():
    rng = np.random.default_rng(0)
    S = _sources(rng, 8000, ["pulse", "laplace"])
    A = np.array([[1.0, 0.6], [0.4, 1.0]])
    dec = ica.infomax_decompose(A @ S, seed=3)
    assert min(_greedy_match(dec.S_short, S)) >= 0.95
    np.testing.assert_allclose(dec.A @ dec.unmix, np.eye(2), atol=1e-6)


def test_single_channel_is_scale_and_sign():
    x = np.random.default_rng(1).laplace(size=(1, 500)) * 7
    dec = ica.infomax_decompose(x)
    c = dec.A[0, 0]
    assert dec.n_components == 1
    np.testing.assert_allclose(dec.S_short, x / c, rtol=1e-10)


def test_same_seed_is_bit_identical():
    rng = np.random.default_rng(2)
    x = np.array([[1, 0.5, 0.2], [0.3, 1, 0.1], [0.2, 0.4, 1]]) @ _sources(
        rng, 4000, ["laplace", "uniform", "sine"])
    a = ica.infomax_decompose(x, seed=5)
    b = ica.infomax_decompose(x, seed=5)
    assert np.array_equal(a.A, b.A)
    assert a.seed == 5


def test_too_few_samples():
    with pytest.raises(InsufficientDataError):
        ica.infomax_decompose(np.random.default_rng(0).standard_normal((10, 150)))


def test_whitened_covariance_is_identity():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((5, 5)) @ rng.standard_normal((5, 3000))
    xc = x - x.mean(axis=1, keepdims=True)
    xw = ica.whitening(xc) @ xc
    np.testing.assert_allclose(np.cov(xw), np.eye(5), atol=1e-6)


def test_whitening_rejects_rank_deficient():
    x = np.random.default_rng(0).standard_normal((1, 500))
    with pytest.raises(SingularMatrixError):
        ica.whitening(np.vstack([x, 2 * x]))


# ---------------------------------------------------------- projection

def _fixed(A, x):
    return ica.IcaDecomposition.from_mixing(A, x)


def test_project_identity_and_scaled():
    x = np.random.default_rng(4).standard_normal((3, 50))
    np.testing.assert_allclose(ica.project_full(_fixed(np.eye(3), x), x).S, x)
    np.testing.assert_allclose(ica.project_full(_fixed(2 * np.eye(3), x), x).S, x / 2)


def test_project_restricts_to_short_sources():
    rng = np.random.default_rng(5)
    rec = make_rec(rng.laplace(size=(4, 3000)))
    short, imap = excise_intervals(rec, IntervalSet(((200, 700), (1500, 1600))))
    dec = ica.infomax_decompose(short, seed=1, index_map=imap)
    S = ica.project_full(dec, rec)
    kept = np.array([map_short_to_full(imap, k) for k in range(imap.length)])
    np.testing.assert_allclose(S.S[:, kept], dec.S_short, atol=1e-8)


def test_project_errors():
    dec = _fixed(np.eye(2), np.zeros((2, 10)))
    with pytest.raises(ArgumentError):
        ica.project_full(dec, np.zeros((3, 10)))
    bad = ica.IcaDecomposition(np.array([[1.0, 1.0], [1.0, 1.0]]), np.eye(2),
                               np.zeros((2, 10)), IndexMap.identity(10))
    with pytest.raises(SingularMatrixError):
        ica.project_full(bad, np.zeros((2, 10)))


# ------------------------------------------------------- reconstruction

def test_reconstruct_nothing_and_everything():
    rng = np.random.default_rng(6)
    rec = make_rec(rng.standard_normal((3, 400)))
    dec = _fixed(rng.standard_normal((3, 3)) + 3 * np.eye(3), rec.data)
    S = ica.project_full(dec, rec)
    same = ica.reconstruct_without(dec, S, [])
    assert same.fs == rec.fs and same.labels == rec.labels
    np.testing.assert_allclose(same.data, rec.data, rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(ica.reconstruct_without(dec, S, range(3)).data, 0)
    with pytest.raises(ArgumentError):
        ica.reconstruct_without(dec, S, [3])


def test_three_source_oracle():
    rng = np.random.default_rng(7)
    S_true = rng.standard_normal((3, 300))
    A = rng.standard_normal((3, 3)) + 2 * np.eye(3)
    dec = _fixed(A, A @ S_true)
    S = ica.project_full(dec, A @ S_true)
    got = ica.reconstruct_without(dec, S, [2])
    oracle = A[:, :2] @ S_true[:2]
    np.testing.assert_allclose(got, oracle, atol=1e-8 * np.abs(oracle).max())


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(1, 6), st.data())
def test_round_trip_and_column_zeroing(seed, n, data):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 3 * np.eye(n)
    x = rng.standard_normal((n, 64))
    dec = _fixed(A, x)
    S = ica.project_full(dec, x)
    back = ica.reconstruct_without(dec, S, [])
    np.testing.assert_allclose(back, x, atol=1e-8 * np.abs(x).max())
    j = data.draw(st.integers(0, n - 1))
    zeroed = ica.reconstruct_without(dec, S, [j])
    direct = x - np.outer(dec.A[:, j], S.S[j])
    np.testing.assert_allclose(zeroed, direct, atol=1e-9 * np.abs(x).max())


# ------------------------------------------------------------- Amari

def _amari_oracle(W, A):
    P = np.abs(W @ A)
    n = len(P)
    total = 0.0
    for i in range(n):
        total += sum(P[i, j] for j in range(n)) / max(P[i]) - 1
    for j in range(n):
        total += sum(P[i, j] for i in range(n)) / max(P[:, j]) - 1
    return total / (2 * n * (n - 1))


def test_amari_distance_oracle():
    rng = np.random.default_rng(8)
    A = rng.standard_normal((4, 4))
    perm = np.eye(4)[[2, 0, 3, 1]] * np.array([1.5, -2, 0.3, 4])[:, None]
    assert ica.amari_distance(perm @ np.linalg.inv(A), A) == pytest.approx(0, abs=1e-12)
    W = rng.standard_normal((4, 4))
    assert ica.amari_distance(W, A) == pytest.approx(_amari_oracle(W, A), rel=1e-12)


def test_amari_median_on_four_source_problems():
    dists = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        S = _sources(rng, 3000, ["laplace", "pulse", "uniform", "sine"])
        A = rng.standard_normal((4, 4))
        dec = ica.infomax_decompose(A @ S, seed=seed)
        dists.append(ica.amari_distance(dec.unmix, A))
    assert np.median(dists) < 0.1
