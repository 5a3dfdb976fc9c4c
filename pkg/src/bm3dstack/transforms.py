"""Separable transform stacks and shrinkage operators for 3D patch groups.

The 2D stage uses either an orthonormal type-II DCT or a bi-orthogonal
spline wavelet (bior1.5, full dyadic decomposition of an 8x8 patch); the
group axis uses an orthonormal Walsh-Hadamard transform.  All bases are
normalized so that unit-variance white noise keeps unit variance per
coefficient, which makes a single threshold ``lambda3d * sigma`` valid
across stages.
"""

from __future__ import annotations

import functools

import numpy as np

PATCH_SIZE = 8

# bior1.5 analysis pair (decomposition low/high pass).  The synthesis pair
# is not needed: we invert the assembled matrix exactly.
_BIOR15_DEC_LO = np.array(
    [3 / 128, -3 / 128, -11 / 64, 11 / 64, 1.0, 1.0, 11 / 64, -11 / 64, -3 / 128, 3 / 128]
) / np.sqrt(2.0)
_BIOR15_DEC_HI = np.array([0.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0]) / np.sqrt(2.0)


def wht_1d(v: np.ndarray) -> np.ndarray:
    """Orthonormal Walsh-Hadamard transform of a power-of-two length vector.

    Self-inverse: applying it twice returns the input.
    """
    v = np.asarray(v, dtype=np.float64)
    n = v.shape[-1]
    if n & (n - 1) != 0 or n < 1:
        raise ValueError(f"WHT length must be a power of two, got {n}")
    out = v.copy()
    h = 1
    while h < n:
        for start in range(0, n, 2 * h):
            x = out[..., start:start + h].copy()
            y = out[..., start + h:start + 2 * h].copy()
            out[..., start:start + h] = x + y
            out[..., start + h:start + 2 * h] = x - y
        h *= 2
    return out / np.sqrt(n)


def _dwt_periodic(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One periodized analysis level; filter taps centred on each sample pair."""
    n = x.shape[0]
    half = len(lo) // 2 - 1
    approx = np.zeros(n // 2)
    detail = np.zeros(n // 2)
    for k in range(n // 2):
        for m in range(len(lo)):
            idx = (2 * k + m - half) % n
            approx[k] += lo[m] * x[idx]
            detail[k] += hi[m] * x[idx]
    return approx, detail


@functools.lru_cache(maxsize=None)
def bior15_matrices(n: int = PATCH_SIZE) -> tuple[np.ndarray, np.ndarray]:
    """Analysis/synthesis matrix pair for the full bior1.5 decomposition.

    The analysis matrix is assembled column by column from unit impulses,
    rows ordered [approx, coarsest detail, ..., finest detail], then
    row-normalized so each coefficient carries the input noise sigma.
    The synthesis matrix is its exact inverse.
    """
    if n & (n - 1) != 0 or n < 2:
        raise ValueError(f"bior15 patch size must be a power of two >= 2, got {n}")
    levels = int(np.log2(n))
    fwd = np.zeros((n, n))
    for col in range(n):
        x = np.zeros(n)
        x[col] = 1.0
        details = []
        for _ in range(levels):
            x, d = _dwt_periodic(x, _BIOR15_DEC_LO, _BIOR15_DEC_HI)
            details.append(d)
        fwd[:, col] = np.concatenate([x] + details[::-1])
    fwd /= np.linalg.norm(fwd, axis=1, keepdims=True)
    inv = np.linalg.inv(fwd)
    return fwd, inv


@functools.lru_cache(maxsize=None)
def dct_matrices(n: int = PATCH_SIZE) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal DCT-II matrix and its inverse (the transpose)."""
    k = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    fwd = np.cos(np.pi * k * (2 * j + 1) / (2 * n))
    fwd[0] *= np.sqrt(1.0 / n)
    fwd[1:] *= np.sqrt(2.0 / n)
    return fwd, fwd.T.copy()


def transform_pair(basis: str, n: int = PATCH_SIZE) -> tuple[np.ndarray, np.ndarray]:
    """Forward/inverse matrix pair for a named 2D basis."""
    if basis == "bior15":
        return bior15_matrices(n)
    if basis == "dct":
        return dct_matrices(n)
    raise ValueError(f"unknown basis {basis!r} (expected 'bior15' or 'dct')")


def forward_2d(patch: np.ndarray, basis: str) -> np.ndarray:
    """Separable 2D transform of a square patch."""
    patch = np.asarray(patch, dtype=np.float64)
    if patch.shape[-2] != patch.shape[-1]:
        raise ValueError(f"patch must be square, got {patch.shape}")
    fwd, _ = transform_pair(basis, patch.shape[-1])
    return fwd @ patch @ fwd.T


def inverse_2d(coeffs: np.ndarray, basis: str) -> np.ndarray:
    """Exact inverse of :func:`forward_2d`."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape[-2] != coeffs.shape[-1]:
        raise ValueError(f"coefficient block must be square, got {coeffs.shape}")
    _, inv = transform_pair(basis, coeffs.shape[-1])
    return inv @ coeffs @ inv.T


def hard_threshold(spectrum: np.ndarray, tau: float) -> tuple[np.ndarray, int]:
    """Zero coefficients with magnitude below ``tau``; count the survivors.

    The group DC coefficient (index 0 along every axis) is exempt.
    Returns the thresholded spectrum and the number of nonzero
    coefficients it contains.
    """
    if tau < 0:
        raise ValueError("threshold must be >= 0")
    spectrum = np.asarray(spectrum, dtype=np.float64)
    dc = spectrum[(0,) * spectrum.ndim]
    out = np.where(np.abs(spectrum) < tau, 0.0, spectrum)
    out[(0,) * spectrum.ndim] = dc
    return out, int(np.count_nonzero(out))


def wiener_shrink(
    noisy: np.ndarray, pilot: np.ndarray, sigma: float
) -> tuple[np.ndarray, float]:
    """Empirical Wiener shrinkage of ``noisy`` using ``pilot`` coefficients.

    Each coefficient is scaled by ``W = p^2 / (p^2 + sigma^2)``; the
    returned energy ``sum(W^2)`` feeds the aggregation weight.
    """
    noisy = np.asarray(noisy, dtype=np.float64)
    pilot = np.asarray(pilot, dtype=np.float64)
    if noisy.shape != pilot.shape:
        raise ValueError(f"shape mismatch: {noisy.shape} vs {pilot.shape}")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    w = pilot * pilot / (pilot * pilot + sigma * sigma)
    return noisy * w, float(np.sum(w * w))


def kaiser_2d(n: int = PATCH_SIZE, beta: float = 2.0) -> np.ndarray:
    """Separable Kaiser window used to feather patch contributions."""
    k = np.kaiser(n, beta)
    return np.outer(k, k)
