"""Extended Infomax ICA, full-session projection and reconstruction.

The model is ``x = A @ S`` with a square mixing matrix (one component per
channel). Decomposition runs on bad-interval-excised data; the unmixing
matrix is then applied to the whole session and rejected components are
removed by zeroing their columns of ``A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import IndexMap, Recording
from .errors import ArgumentError, InsufficientDataError, SingularMatrixError

_ANNEAL_DEG = 60.0
_ANNEAL_STEP = 0.9
_KURT_SUBSET = 6000
_MAX_WEIGHT = 1e8
_MIN_LRATE = 1e-10
_MAX_COND = 1e12


@dataclass(frozen=True, eq=False)
class IcaDecomposition:
    A: np.ndarray
    unmix: np.ndarray
    S_short: np.ndarray
    index_map: IndexMap
    seed: int = 0
    iterations: int = 0
    converged: bool = True
    fs: float = 1.0
    sphere: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    @property
    def n_components(self):
        return self.A.shape[1]

    @classmethod
    def from_mixing(cls, A, x_short, index_map=None, fs=1.0):
        """Decomposition with a given mixing matrix (sources solved exactly)."""
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        unmix = _checked_inverse(A)
        x = np.asarray(x_short, dtype=np.float64)
        imap = index_map if index_map is not None else IndexMap.identity(x.shape[1])
        return cls(A, unmix, unmix @ x, imap, fs=fs)


@dataclass(frozen=True, eq=False)
class SourceMatrix:
    S: np.ndarray
    like: Recording | None = None


def _checked_inverse(A):
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ArgumentError(f"mixing matrix must be square, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise SingularMatrixError("mixing matrix has non-finite entries")
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= 0 or sv[0] / sv[-1] > _MAX_COND:
        raise SingularMatrixError("mixing matrix is singular")
    return np.linalg.inv(A)


def whitening(x):
    """Symmetric (ZCA) sphering matrix ``C^{-1/2}`` of centred data rows."""
    cov = np.atleast_2d(np.cov(x))
    vals, vecs = np.linalg.eigh(cov)
    if vals.min() <= vals.max() * 1e-12 or vals.max() <= 0:
        raise SingularMatrixError("data covariance is rank deficient")
    return (vecs / np.sqrt(vals)) @ vecs.T


def _kurtosis_signs(u):
    m2 = np.mean(u * u, axis=1)
    m4 = np.mean(u ** 4, axis=1)
    return np.where(m4 / (m2 * m2) - 3.0 >= 0, 1.0, -1.0)


def _infomax(xw, rng, block, max_sweeps, tol, lrate):
    n, k = xw.shape
    eye = np.eye(n)
    weights = eye.copy()
    old_delta = None
    converged = False
    sweep = 0
    bi = block * eye
    while sweep < max_sweeps:
        sweep += 1
        old = weights.copy()
        subset = xw[:, rng.choice(k, size=min(k, _KURT_SUBSET), replace=False)]
        signs = _kurtosis_signs(weights @ subset)[:, None]
        perm = rng.permutation(k)
        blown = False
        for start in range(0, k - block + 1, block):
            u = weights @ xw[:, perm[start:start + block]]
            grad = bi - (signs * np.tanh(u)) @ u.T - u @ u.T
            weights = weights + lrate * (grad @ weights)
            if not np.isfinite(weights).all() or np.abs(weights).max() > _MAX_WEIGHT:
                blown = True
                break
        if blown:
            return None, sweep, False
        delta = weights - old
        change = float(np.sum(delta * delta))
        if old_delta is not None:
            denom = math.sqrt(change * float(np.sum(old_delta * old_delta)))
            if denom > 0:
                cosang = float(np.sum(delta * old_delta)) / denom
                angle = math.degrees(math.acos(max(-1.0, min(1.0, cosang))))
                if angle > _ANNEAL_DEG:
                    lrate *= _ANNEAL_STEP
        old_delta = delta
        if change < tol:
            converged = True
            break
        if lrate < _MIN_LRATE:
            break
    return weights, sweep, converged


def infomax_decompose(x_short, seed=1, block=128, max_sweeps=512, tol=1e-6,
                      min_samples_factor=20.0, lrate=None, index_map=None):
    """Extended Infomax ICA with symmetric whitening.

    Parameters
    ----------
    x_short : Recording or ndarray
        Channels x samples data, already cut to good intervals.
    seed : int
        Seed for block shuffling and kurtosis subsets; equal seeds give
        bit-identical results.
    block : int
        Samples per natural-gradient update.
    max_sweeps, tol :
        Stop after ``max_sweeps`` passes or when the summed squared weight
        change of a pass drops below ``tol``.
    lrate : float, optional
        Initial learning rate, default ``0.00065 / ln(N)``. The rate is
        multiplied by 0.9 whenever consecutive weight changes point more
        than 60 degrees apart, and by 0.8 after a divergence restart.

    Returns
    -------
    IcaDecomposition
        Components sorted by decreasing projected variance.
    """
    fs = 1.0
    if isinstance(x_short, Recording):
        fs = x_short.fs
        x = np.asarray(x_short.data, dtype=np.float64)
    else:
        x = np.atleast_2d(np.asarray(x_short, dtype=np.float64))
    n, k = x.shape
    if k < max(min_samples_factor * n, block, 2):
        raise InsufficientDataError(
            f"{k} samples is too few for {n} components (need > {min_samples_factor * n:g})")
    imap = index_map if index_map is not None else IndexMap.identity(k)
    mean = x.mean(axis=1, keepdims=True)
    xc = x - mean
    sphere = whitening(xc)
    xw = sphere @ xc
    if lrate is None:
        lrate = 0.00065 / math.log(n) if n > 1 else 0.001
    rng = np.random.default_rng(seed)
    weights, sweeps, converged = None, 0, False
    total = 0
    for _ in range(20):
        weights, sweeps, converged = _infomax(xw, rng, block, max_sweeps, tol, lrate)
        total += sweeps
        if weights is not None:
            break
        lrate *= 0.8
    if weights is None:
        weights, converged = np.eye(n), False
    unmix = weights @ sphere
    A = np.linalg.inv(unmix)
    S = unmix @ x
    power = np.sum(A * A, axis=0) * np.var(S, axis=1)
    order = np.argsort(-power, kind="stable")
    A, unmix, S = A[:, order], unmix[order], S[order]
    return IcaDecomposition(A, unmix, S, imap, seed=int(seed), iterations=total,
                            converged=converged, fs=fs, sphere=sphere,
                            extras={"lrate_final": lrate, "mean": mean[:, 0]})


def project_full(decomp: IcaDecomposition, x_full) -> SourceMatrix:
    """Activations of the whole session, ``S = A^{-1} x``."""
    like = x_full if isinstance(x_full, Recording) else None
    x = np.asarray(x_full.data if like is not None else x_full, dtype=np.float64)
    x = np.atleast_2d(x)
    if x.shape[0] != decomp.A.shape[0]:
        raise ArgumentError(
            f"data has {x.shape[0]} channels, decomposition expects {decomp.A.shape[0]}")
    inv = _checked_inverse(decomp.A)
    return SourceMatrix(inv @ x, like)


def reconstruct_without(decomp: IcaDecomposition, S: SourceMatrix, removed):
    """``A' @ S`` with the columns of ``removed`` components zeroed.

    Returns a Recording shaped like the projected input when one is known,
    otherwise a plain array.
    """
    removed = sorted(set(int(r) for r in removed))
    n = decomp.A.shape[1]
    if any(r < 0 or r >= n for r in removed):
        raise ArgumentError(f"component indices {removed} outside [0, {n})")
    A2 = decomp.A.copy()
    A2[:, removed] = 0.0
    out = A2 @ S.S
    if S.like is not None:
        return S.like.with_data(out)
    return out


def amari_distance(W_est, A_true):
    """Normalised Amari index of ``W_est @ A_true`` (0 = perfect separation)."""
    P = np.abs(np.asarray(W_est) @ np.asarray(A_true))
    n = P.shape[0]
    if n == 1:
        return 0.0
    rows = (P.sum(axis=1) / P.max(axis=1) - 1).sum()
    cols = (P.sum(axis=0) / P.max(axis=0) - 1).sum()
    return float((rows + cols) / (2 * n * (n - 1)))
