"""Numba kernels for the two filtering stages.

Each kernel processes one chunk of reference patches serially and
accumulates into chunk-private numerator/denominator buffers, so results
are bitwise reproducible for any worker count as long as chunks are
merged in index order.  Arithmetic deliberately avoids fastmath: the
candidate ranking must agree exactly with the pure-python matching
module, and squared-distance sums are accumulated in plain row-major
order on both sides.
"""

from __future__ import annotations

import numpy as np
from numba import njit

#: Floor for the Wiener aggregation weight denominator sum(W^2).
WIENER_ENERGY_EPS = 1e-8


@njit(cache=True, nogil=True, inline="always")
def _insert_candidate(dist, f, r, c, count, best_d, best_loc):
    """Keep the running best list sorted by (distance, arrival order)."""
    pos = count
    while pos > 0 and best_d[pos - 1] > dist:
        pos -= 1
    for m in range(count, pos, -1):
        best_d[m] = best_d[m - 1]
        best_loc[m, 0] = best_loc[m - 1, 0]
        best_loc[m, 1] = best_loc[m - 1, 1]
        best_loc[m, 2] = best_loc[m - 1, 2]
    best_d[pos] = dist
    best_loc[pos, 0] = f
    best_loc[pos, 1] = r
    best_loc[pos, 2] = c


@njit(cache=True, nogil=True)
def _select_group(match, f0, r0, c0, radius, n, kcap, search_all,
                  best_d, best_loc, locs):
    """Windowed search for the best-matching patches around one reference.

    Candidates are visited in (frame, row, col) order; distances are raw
    squared-difference sums with early abort against the current worst.
    Fills ``locs`` with the reference at slot 0 followed by the kept
    candidates, and returns the group size truncated to a power of two.
    """
    layers, height, width = match.shape
    r_lo = max(0, r0 - radius)
    r_hi = min(height - n, r0 + radius)
    c_lo = max(0, c0 - radius)
    c_hi = min(width - n, c0 + radius)
    kbest = kcap - 1
    count = 0
    worst = np.inf
    f_start = 0 if search_all else f0
    f_stop = layers if search_all else f0 + 1
    for f in range(f_start, f_stop):
        for r in range(r_lo, r_hi + 1):
            for c in range(c_lo, c_hi + 1):
                if f == f0 and r == r0 and c == c0:
                    continue
                limit = worst if count == kbest else np.inf
                s = 0.0
                hit = True
                for i in range(n):
                    for j in range(n):
                        d = match[f0, r0 + i, c0 + j] - match[f, r + i, c + j]
                        s += d * d
                    if s >= limit:
                        hit = False
                        break
                if not hit:
                    continue
                if count < kbest:
                    _insert_candidate(s, f, r, c, count, best_d, best_loc)
                    count += 1
                else:
                    _insert_candidate(s, f, r, c, count - 1, best_d, best_loc)
                if count == kbest:
                    worst = best_d[kbest - 1]
    total = count + 1
    size = 1
    while size * 2 <= total and size * 2 <= kcap:
        size *= 2
    locs[0, 0] = f0
    locs[0, 1] = r0
    locs[0, 2] = c0
    for k in range(1, size):
        locs[k, 0] = best_loc[k - 1, 0]
        locs[k, 1] = best_loc[k - 1, 1]
        locs[k, 2] = best_loc[k - 1, 2]
    return size


@njit(cache=True, nogil=True, inline="always")
def _forward_2d_patch(T, patch, tmp, out, n):
    """out = T @ patch @ T.T"""
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for m in range(n):
                acc += T[i, m] * patch[m, j]
            tmp[i, j] = acc
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for m in range(n):
                acc += tmp[i, m] * T[j, m]
            out[i, j] = acc


@njit(cache=True, nogil=True, inline="always")
def _inverse_2d_patch(Ti, coeff, tmp, out, n):
    """out = Ti @ coeff @ Ti.T"""
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for m in range(n):
                acc += Ti[i, m] * coeff[m, j]
            tmp[i, j] = acc
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for m in range(n):
                acc += tmp[i, m] * Ti[j, m]
            out[i, j] = acc


@njit(cache=True, nogil=True, inline="always")
def _wht_inplace(v, size):
    """Orthonormal Walsh-Hadamard butterfly on v[:size], size a power of two."""
    h = 1
    while h < size:
        start = 0
        while start < size:
            for j in range(start, start + h):
                x = v[j]
                y = v[j + h]
                v[j] = x + y
                v[j + h] = x - y
            start += 2 * h
        h *= 2
    scale = 1.0 / np.sqrt(size)
    for j in range(size):
        v[j] *= scale


@njit(cache=True, nogil=True)
def hard_chunk(noisy, match, refs, radius, kcap, search_all, T, Ti, tau,
               sigma2, kaiser, num, den):
    """First-stage pipeline for one chunk of reference patches.

    For each reference: group selection on ``match``, pixel gather from
    ``noisy``, 2D transform + group-axis WHT, hard thresholding with the
    group DC exempt, inverse transforms, and weighted scatter of every
    patch into the accumulators of the frame it came from.
    """
    n = T.shape[0]
    best_d = np.empty(kcap - 1 if kcap > 1 else 1, dtype=np.float64)
    best_loc = np.empty((kcap - 1 if kcap > 1 else 1, 3), dtype=np.int64)
    locs = np.empty((kcap, 3), dtype=np.int64)
    group = np.empty((kcap, n, n), dtype=np.float64)
    tmp = np.empty((n, n), dtype=np.float64)
    spec = np.empty((kcap, n, n), dtype=np.float64)
    column = np.empty(kcap, dtype=np.float64)
    for idx in range(refs.shape[0]):
        f0 = refs[idx, 0]
        r0 = refs[idx, 1]
        c0 = refs[idx, 2]
        size = _select_group(match, f0, r0, c0, radius, n, kcap, search_all,
                             best_d, best_loc, locs)
        for k in range(size):
            f = locs[k, 0]
            r = locs[k, 1]
            c = locs[k, 2]
            for i in range(n):
                for j in range(n):
                    group[k, i, j] = noisy[f, r + i, c + j]
        for k in range(size):
            _forward_2d_patch(T, group[k], tmp, spec[k], n)
        for i in range(n):
            for j in range(n):
                for k in range(size):
                    column[k] = spec[k, i, j]
                _wht_inplace(column, size)
                for k in range(size):
                    spec[k, i, j] = column[k]
        # Hard threshold; the group DC coefficient (0, 0, 0) is exempt.
        n_retained = 0
        for k in range(size):
            for i in range(n):
                for j in range(n):
                    v = spec[k, i, j]
                    if (abs(v) < tau) and not (k == 0 and i == 0 and j == 0):
                        spec[k, i, j] = 0.0
                    elif v != 0.0:
                        n_retained += 1
        for i in range(n):
            for j in range(n):
                for k in range(size):
                    column[k] = spec[k, i, j]
                _wht_inplace(column, size)
                for k in range(size):
                    spec[k, i, j] = column[k]
        for k in range(size):
            _inverse_2d_patch(Ti, spec[k], tmp, group[k], n)
        weight = 1.0 / (sigma2 * max(n_retained, 1))
        for k in range(size):
            f = locs[k, 0]
            r = locs[k, 1]
            c = locs[k, 2]
            for i in range(n):
                for j in range(n):
                    w = weight * kaiser[i, j]
                    num[f, r + i, c + j] += w * group[k, i, j]
                    den[f, r + i, c + j] += w


@njit(cache=True, nogil=True)
def wiener_chunk(noisy, basic, refs, radius, kcap, search_all, T, Ti, sigma2,
                 kaiser, num, den):
    """Second-stage pipeline for one chunk of reference patches.

    Groups are matched on the basic estimates; pilot spectra come from
    ``basic`` and data spectra from ``noisy`` at the same locations.
    """
    n = T.shape[0]
    best_d = np.empty(kcap - 1 if kcap > 1 else 1, dtype=np.float64)
    best_loc = np.empty((kcap - 1 if kcap > 1 else 1, 3), dtype=np.int64)
    locs = np.empty((kcap, 3), dtype=np.int64)
    pilot = np.empty((kcap, n, n), dtype=np.float64)
    data = np.empty((kcap, n, n), dtype=np.float64)
    tmp = np.empty((n, n), dtype=np.float64)
    column = np.empty(kcap, dtype=np.float64)
    for idx in range(refs.shape[0]):
        f0 = refs[idx, 0]
        r0 = refs[idx, 1]
        c0 = refs[idx, 2]
        size = _select_group(basic, f0, r0, c0, radius, n, kcap, search_all,
                             best_d, best_loc, locs)
        for k in range(size):
            f = locs[k, 0]
            r = locs[k, 1]
            c = locs[k, 2]
            for i in range(n):
                for j in range(n):
                    pilot[k, i, j] = basic[f, r + i, c + j]
                    data[k, i, j] = noisy[f, r + i, c + j]
        # The 2D helper stages through tmp, so transforming in place is safe.
        for k in range(size):
            _forward_2d_patch(T, pilot[k], tmp, pilot[k], n)
            _forward_2d_patch(T, data[k], tmp, data[k], n)
        for i in range(n):
            for j in range(n):
                for k in range(size):
                    column[k] = pilot[k, i, j]
                _wht_inplace(column, size)
                for k in range(size):
                    pilot[k, i, j] = column[k]
                for k in range(size):
                    column[k] = data[k, i, j]
                _wht_inplace(column, size)
                for k in range(size):
                    data[k, i, j] = column[k]
        energy = 0.0
        for k in range(size):
            for i in range(n):
                for j in range(n):
                    p = pilot[k, i, j]
                    w = p * p / (p * p + sigma2)
                    data[k, i, j] *= w
                    energy += w * w
        for i in range(n):
            for j in range(n):
                for k in range(size):
                    column[k] = data[k, i, j]
                _wht_inplace(column, size)
                for k in range(size):
                    data[k, i, j] = column[k]
        for k in range(size):
            _inverse_2d_patch(Ti, data[k], tmp, data[k], n)
        weight = 1.0 / (sigma2 * max(energy, WIENER_ENERGY_EPS))
        for k in range(size):
            f = locs[k, 0]
            r = locs[k, 1]
            c = locs[k, 2]
            for i in range(n):
                for j in range(n):
                    w = weight * kaiser[i, j]
                    num[f, r + i, c + j] += w * data[k, i, j]
                    den[f, r + i, c + j] += w
