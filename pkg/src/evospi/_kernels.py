"""Hot loops: batched pixelwise intensity and exhaustive enumeration.

Every kernel has a numba version (``*_jit``) and a numpy version (``*_numpy``).
The public names at the bottom are bound to one of them according to
:data:`evospi._accel.JIT_ENABLED`. Both variants stay importable so the
benchmark and parity tests can call them side by side.

Enumeration index convention: pattern index ``b`` in ``[0, 2**(n-1))`` has
``sigma_0 = +1`` and ``sigma_{k+1} = -1`` iff bit ``k`` of ``b`` is set.
"""
import numpy as np

from ._accel import JIT_ENABLED, njit

_CHUNK_BITS = 16


def spins_from_index(index, n):
    """Spin vector (int8) for enumeration index ``index``."""
    s = np.ones(n, dtype=np.int8)
    for k in range(n - 1):
        if (index >> k) & 1:
            s[k + 1] = -1
    return s


def _chunk_spins(start, stop, n):
    idx = np.arange(start, stop, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n - 1, dtype=np.int64)) & 1
    s = np.ones((stop - start, n), dtype=np.int64)
    s[:, 1:] = 1 - 2 * bits
    return s


# -- pixelwise intensity -----------------------------------------------------

def intensity_batch_numpy(patterns, w):
    return np.tensordot(patterns.astype(np.float64), w, axes=([1, 2], [0, 1]))


@njit
def intensity_batch_jit(patterns, w):
    k, n, _ = patterns.shape
    out = np.empty(k, dtype=np.float64)
    for p in range(k):
        acc = 0.0
        for i in range(n):
            for j in range(n):
                if patterns[p, i, j]:
                    acc += w[i, j]
        out[p] = acc
    return out


# -- number partition oracle ---------------------------------------------------

def brute_partition_numpy(a):
    n = a.shape[0]
    total = 1 << (n - 1)
    step = 1 << _CHUNK_BITS
    best, best_idx = -1, 0
    for start in range(0, total, step):
        stop = min(start + step, total)
        err = np.abs(_chunk_spins(start, stop, n) @ a)
        i = int(np.argmin(err))
        if best < 0 or err[i] < best:
            best, best_idx = int(err[i]), start + i
    return best, best_idx


@njit
def brute_partition_jit(a):
    n = a.shape[0]
    m = n - 1
    d = 0
    for i in range(n):
        d += a[i]
    best = abs(d)
    best_idx = 0
    gray = 0
    for t in range(1, 1 << m):
        k = 0
        while not (t >> k) & 1:
            k += 1
        gray ^= 1 << k
        if (gray >> k) & 1:
            d -= 2 * a[k + 1]
        else:
            d += 2 * a[k + 1]
        v = abs(d)
        if v < best or (v == best and gray < best_idx):
            best = v
            best_idx = gray
    return best, best_idx


# -- max-cut oracle ------------------------------------------------------------

def _chunk_cuts(w, upper, start, stop):
    s = _chunk_spins(start, stop, w.shape[0]).astype(np.float64)
    quad = np.einsum("ki,ij,kj->k", s, w, s)
    return (upper - 0.5 * quad) * 0.5


def brute_maxcut_numpy(w, tol):
    n = w.shape[0]
    upper = float(np.triu(w, 1).sum())
    total = 1 << (n - 1)
    step = 1 << _CHUNK_BITS
    best = -np.inf
    for start in range(0, total, step):
        stop = min(start + step, total)
        best = max(best, float(_chunk_cuts(w, upper, start, stop).max()))
    for start in range(0, total, step):
        stop = min(start + step, total)
        hit = np.flatnonzero(_chunk_cuts(w, upper, start, stop) >= best - tol)
        if hit.size:
            return best, start + int(hit[0])
    return best, 0  # pragma: no cover - the max itself always qualifies


@njit
def _maxcut_gray_pass(w, threshold, find_index):
    n = w.shape[0]
    m = n - 1
    s = np.ones(n)
    field = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += w[i, j]
        field[i] = acc
    cut = 0.0
    best = 0.0
    best_idx = 0 if cut >= threshold else -1
    gray = 0
    for t in range(1, 1 << m):
        k = 0
        while not (t >> k) & 1:
            k += 1
        gray ^= 1 << k
        q = k + 1
        cut += s[q] * field[q]
        s[q] = -s[q]
        two_sq = 2.0 * s[q]
        for j in range(n):
            field[j] += two_sq * w[j, q]
        if find_index:
            if cut >= threshold and (best_idx < 0 or gray < best_idx):
                best_idx = gray
        elif cut > best:
            best = cut
    return best, best_idx


def brute_maxcut_jit(w, tol):
    best, _ = _maxcut_gray_pass(w, 0.0, False)
    _, idx = _maxcut_gray_pass(w, best - tol, True)
    return best, int(idx)


if JIT_ENABLED:
    intensity_batch = intensity_batch_jit
    brute_partition = brute_partition_jit
    brute_maxcut = brute_maxcut_jit
else:
    intensity_batch = intensity_batch_numpy
    brute_partition = brute_partition_numpy
    brute_maxcut = brute_maxcut_numpy
